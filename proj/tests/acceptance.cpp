// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// non-advisory criterion fails. Criteria 8 and 9 train networks and dominate
// the runtime.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stereokit/colormap.hpp"
#include "stereokit/gradcheck.hpp"
#include "stereokit/image_io.hpp"
#include "stereokit/losses.hpp"
#include "stereokit/metrics.hpp"
#include "stereokit/net.hpp"
#include "stereokit/stereogram.hpp"
#include "stereokit/threading.hpp"
#include "stereokit/trainer.hpp"

using namespace stereokit;

namespace {

struct Outcome {
  int id;
  bool pass;
  bool advisory;
  std::string detail;
};

std::vector<Outcome> g_outcomes;

void report(int id, bool pass, const std::string& detail, bool advisory = false) {
  g_outcomes.push_back({id, pass, advisory, detail});
  std::printf("criterion %2d: %s%s — %s\n", id, pass ? "PASS" : "FAIL",
              advisory ? " (advisory)" : "", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

// ---- criterion 1: parameter counts ----

void criterion_parameter_counts() {
  struct Row {
    Variant variant;
    double target;
  };
  const std::vector<Row> rows = {
      {Variant::baseline, 2.8e6}, {Variant::ml_argmax, 3.1e6}, {Variant::correlation, 2.7e6},
      {Variant::small, 1.8e6},    {Variant::tiny, 0.5e6},      {Variant::no_bottleneck, 0.2e6},
  };
  bool pass = true;
  std::string detail;
  for (const auto& row : rows) {
    ModelConfig c;
    c.variant = row.variant;
    c.height = 320;
    c.width = 1024;
    c.max_disparity = 96;
    const std::int64_t n = count_parameters(build_network(c, 1));
    const double rel = std::abs(static_cast<double>(n) - row.target) / row.target;
    const bool ok = rel <= 0.10;
    pass = pass && ok;
    detail += std::string(variant_name(row.variant)) + "=" + std::to_string(n) + " (" +
              fmt(100.0 * rel, 1) + "% off " + fmt(row.target / 1e6, 1) + "M" +
              (ok ? "" : ", OUT OF BAND") + ") ";
  }
  report(1, pass, detail);
}

// ---- criterion 2: memory ratios ----

void criterion_memory_ratios() {
  Rng rng(1);
  Tensor<float> f = oracles::rand_tensor(rng, {8, 16, 32});  // F = 32
  Tensor<float> concat = build_cost_volume_concat(f, f, 4, CostDirection::left_ref);
  Tensor<float> corr = build_cost_volume_corr(f, f, 4, CostDirection::left_ref);
  const std::int64_t ratio = concat.size() / corr.size();
  ModelConfig c;
  c.variant = Variant::baseline;
  c.height = 320;
  c.width = 1024;
  c.max_disparity = 96;
  const double base = static_cast<double>(count_parameters(build_network(c, 1)));
  c.variant = Variant::small;
  const double small_cut = 100.0 * (1.0 - count_parameters(build_network(c, 1)) / base);
  c.variant = Variant::tiny;
  const double tiny_cut = 100.0 * (1.0 - count_parameters(build_network(c, 1)) / base);
  const bool pass = ratio == 64 && concat.size() % corr.size() == 0 &&
                    std::abs(small_cut - 36.0) <= 5.0 && std::abs(tiny_cut - 82.0) <= 5.0;
  report(2, pass,
         "concat/corr element ratio=" + std::to_string(ratio) + ", small cut=" +
             fmt(small_cut, 1) + "%, tiny cut=" + fmt(tiny_cut, 1) + "%");
}

// ---- criterion 3: shape audit ----

void criterion_shape_audit() {
  Rng rng(2);
  bool pass = true;
  std::string bad;
  int rows = 0;
  for (Variant v : {Variant::baseline, Variant::ml_argmax, Variant::correlation,
                    Variant::no_bottleneck, Variant::small, Variant::tiny,
                    Variant::single_tower}) {
    ModelConfig c;
    c.variant = v;
    c.height = 64;
    c.width = 64;
    c.max_disparity = 32;
    Model m = build_network(c, 3);
    ForwardResult r = forward(m, oracles::rand_tensor(rng, {64, 64, 3}, 0.0f, 1.0f),
                              oracles::rand_tensor(rng, {64, 64, 3}, 0.0f, 1.0f), true);
    for (const auto& rec : r.audit) {
      ++rows;
      if (rec.actual != rec.expected) {
        pass = false;
        if (bad.size() < 120) {
          bad += std::string(variant_name(v)) + "/" + rec.tower + "/" + rec.id + " ";
        }
      }
    }
  }
  report(3, pass,
         std::to_string(rows) + " intermediate shapes across 7 variants" +
             (bad.empty() ? "" : " — mismatches: " + bad));
}

// ---- criterion 4: gradient suite ----

void criterion_gradients() {
  const auto cases = run_gradcheck_suite(10);
  bool pass = true;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : cases) {
    if (c.max_rel_err > worst) {
      worst = c.max_rel_err;
      worst_name = c.name;
    }
    if (!(c.max_rel_err < 1e-4)) pass = false;
  }
  report(4, pass,
         std::to_string(cases.size()) + " checks x 10 seeds, worst " + worst_name + " at " +
             fmt(worst * 1e6, 3) + "e-6 (bound 1e-4)");
}

// ---- criterion 5: loss identities ----

void criterion_loss_identities() {
  Rng rng(5);
  bool pass = true;
  std::string detail;
  Tape<float> t;
  // SSIM self-similarity to 1e-12
  Tensor<float> x = oracles::rand_tensor(rng, {8, 9, 3}, 0.0f, 1.0f);
  Var s = ssim(t, t.leaf(x), t.leaf(x), 1e-4f, 1e-3f);
  double worst = 0.0;
  for (std::int64_t i = 0; i < t.value(s).size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(t.value(s)[i]) - 1.0));
  }
  pass = pass && worst < 1e-12;
  detail += "ssim(x,x) off by " + fmt(worst * 1e15, 2) + "e-15; ";

  // each term: zero on its perfect input, positive when perturbed
  const int h = 8, w = 16;
  Tensor<float> img = oracles::rand_tensor(rng, {h, w, 3}, 0.0f, 1.0f);
  Tensor<float> zero_d({h, w});
  LossWeights lw;
  const float img_perfect = t.value(
      loss_image(t, t.leaf(img), t.leaf(img), t.leaf(zero_d), t.leaf(zero_d), lw))[0];
  const float img_off =
      t.value(loss_image(t, t.leaf(img), t.leaf(oracles::rand_tensor(rng, {h, w, 3}, 0.0f, 1.0f)),
                         t.leaf(zero_d), t.leaf(zero_d), lw))[0];
  Tensor<float> d = oracles::rand_tensor(rng, {h, w}, 1.0f, 6.0f);
  DisparityMap gt(d.clone());
  Tensor<float> d_off = d.clone();
  for (std::int64_t i = 0; i < d_off.size(); ++i) d_off[i] += 0.5f;
  const float lidar_perfect = t.value(loss_lidar(t, t.leaf(d), t.leaf(d), gt, gt, 16.0f))[0];
  const float lidar_off = t.value(loss_lidar(t, t.leaf(d_off), t.leaf(d_off), gt, gt, 16.0f))[0];
  const float lr_perfect = t.value(loss_lr(t, t.leaf(Tensor<float>::full({h, w}, 2.0f)),
                                           t.leaf(Tensor<float>::full({h, w}, 2.0f))))[0];
  const float lr_off = t.value(
      loss_lr(t, t.leaf(Tensor<float>({h, w})), t.leaf(Tensor<float>::full({h, w}, 2.0f))))[0];
  Tensor<float> ramp({h, w});
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) ramp.at({y, xx}) = static_cast<float>(xx);
  }
  const float ds_perfect =
      t.value(loss_smooth(t, t.leaf(Tensor<float>::full({h, w}, 3.0f)), t.leaf(img)))[0];
  const float ds_off = t.value(loss_smooth(t, t.leaf(ramp), t.leaf(img)))[0];
  const bool zeros_ok = img_perfect < 1e-7f && lidar_perfect == 0.0f && lr_perfect < 1e-7f &&
                        ds_perfect == 0.0f;
  const bool positive_ok = img_off > 0.0f && lidar_off > 0.0f && lr_off > 0.0f && ds_off > 0.0f;
  pass = pass && zeros_ok && positive_ok;
  detail += std::string("perfect inputs zero: ") + (zeros_ok ? "yes" : "NO") +
            ", perturbed positive: " + (positive_ok ? "yes" : "NO") + "; ";

  // total is linear in the lambda vector
  Tensor<float> dl = oracles::rand_tensor(rng, {h, w}, 0.5f, 6.0f);
  Tensor<float> dr = oracles::rand_tensor(rng, {h, w}, 0.5f, 6.0f);
  Tensor<float> ri = oracles::rand_tensor(rng, {h, w, 3}, 0.0f, 1.0f);
  auto total_of = [&](const LossWeights& wts) {
    Tape<float> tp;
    LossTerms terms = total_loss(tp, tp.leaf(img), tp.leaf(ri), tp.leaf(dl), tp.leaf(dr), &gt,
                                 &gt, wts, 16.0f);
    return std::array<double, 5>{
        tp.value(terms.total)[0], tp.value(terms.image)[0], tp.value(terms.lidar)[0],
        tp.value(terms.lr)[0], tp.value(terms.smooth)[0]};
  };
  LossWeights w1;
  auto r1 = total_of(w1);
  const double recombined =
      w1.lambda1 * r1[1] + w1.lambda2 * r1[2] + w1.lambda3 * r1[3] + w1.lambda4 * r1[4];
  LossWeights w3 = w1;
  w3.lambda1 *= 3;
  w3.lambda2 *= 3;
  w3.lambda3 *= 3;
  w3.lambda4 *= 3;
  const double lin1 = std::abs(r1[0] - recombined);
  const double lin2 = std::abs(total_of(w3)[0] - 3.0 * r1[0]);
  pass = pass && lin1 < 1e-6 && lin2 < 1e-6;
  detail += "lambda linearity residuals " + fmt(lin1 * 1e9, 2) + "e-9 / " + fmt(lin2 * 1e9, 2) +
            "e-9";
  report(5, pass, detail);
}

// ---- criterion 6: warping oracle ----

void criterion_warp_oracle() {
  bool pass = true;
  std::string detail;
  double worst = 0.0;
  for (SceneKind scene : {SceneKind::fronto_planes, SceneKind::dots}) {
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
      StereoSample s = gen_stereogram(seed, 32, 64, 12, scene);
      Tape<float> t;
      Var rec = warp(t, t.leaf(s.right), t.leaf(s.gt_left.values), WarpDirection::rl);
      const Tensor<float>& got = t.value(rec);
      for (std::int64_t i = 0; i < s.gt_left.values.size(); ++i) {
        if (!s.gt_left.valid[static_cast<std::size_t>(i)]) continue;
        for (int c = 0; c < 3; ++c) {
          worst = std::max(worst,
                           std::abs(static_cast<double>(got[i * 3 + c]) - s.left[i * 3 + c]));
        }
      }
    }
  }
  pass = pass && worst < 1e-6;
  detail = "integer-scene reconstruction L1 max " + fmt(worst * 1e9, 2) + "e-9; ";
  // zero disparity is the identity to machine precision
  Rng rng(6);
  Tensor<float> img = oracles::rand_tensor(rng, {16, 32, 3}, 0.0f, 1.0f);
  Tape<float> t;
  Var out = warp(t, t.leaf(img), t.leaf(Tensor<float>({16, 32})), WarpDirection::rl);
  const float ident = oracles::max_abs_diff(t.value(out), img);
  pass = pass && ident == 0.0f;
  detail += std::string("zero-disparity identity exact: ") + (ident == 0.0f ? "yes" : "NO");
  report(6, pass, detail);
}

// ---- criterion 7: metric oracle ----

void criterion_metric_oracle() {
  Rng rng(7);
  bool pass = true;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor<float> ev = oracles::rand_tensor(rng, {16, 16}, 0.0f, 60.0f);
    Tensor<float> gv = oracles::rand_tensor(rng, {16, 16}, 0.0f, 60.0f);
    std::vector<std::uint8_t> mask(256);
    for (auto& b : mask) b = rng.bernoulli(0.7) ? 1 : 0;
    mask[0] = 1;
    DisparityMap est(ev);
    DisparityMap gt(gv, mask);
    if (d1_all(est, gt, OutlierRule::or_rule) != oracles::d1_all(est, gt, false)) pass = false;
    if (d1_all(est, gt, OutlierRule::and_rule) != oracles::d1_all(est, gt, true)) pass = false;
    if (std::abs(epe(est, gt) - oracles::epe(est, gt)) > 1e-6) pass = false;
  }
  DisparityMap e4(Tensor<float>({1, 1}, {104.0f}));
  DisparityMap g4(Tensor<float>({1, 1}, {100.0f}));
  const double d_or = d1_all(e4, g4, OutlierRule::or_rule);
  const double d_and = d1_all(e4, g4, OutlierRule::and_rule);
  pass = pass && d_or == 100.0 && d_and == 0.0;
  report(7, pass,
         "100 random maps match the naive oracle; 4px/100px case: or=" + fmt(d_or, 1) +
             "%, and=" + fmt(d_and, 1) + "%");
}

// ---- criteria 8 and 9: desk-scale training ----

struct DeskRun {
  double initial_d1 = 0.0;
  double trained_d1 = 0.0;
  bool diverged = false;
  std::vector<float> losses;
};

double heldout_d1(const Model& model, const std::vector<StereoSample>& heldout) {
  double weighted = 0.0;
  std::int64_t pixels = 0;
  for (const auto& s : heldout) {
    ForwardResult r = forward(model, s.left, s.right);
    EvalReport rep = evaluate(r.left, s.gt_left, OutlierRule::or_rule);
    weighted += rep.d1_all * static_cast<double>(rep.evaluated_pixels);
    pixels += rep.evaluated_pixels;
  }
  return weighted / static_cast<double>(pixels);
}

DeskRun desk_training_run(std::uint64_t seed, TrainMode mode, std::int64_t steps) {
  // dot stereograms at 64x32, D=16, batch 1, Adam 1e-4, 5%-sparse gt.
  // 50 samples divide the 100-step windows into whole cycles, so window
  // means compare identical sample mixes.
  std::vector<StereoSample> train_set;
  for (int i = 0; i < 50; ++i) {
    train_set.push_back(gen_stereogram(1000 * seed + static_cast<std::uint64_t>(i), 32, 64, 15,
                                       SceneKind::dots, 0.05));
  }
  std::vector<StereoSample> heldout;
  for (int i = 0; i < 6; ++i) {
    heldout.push_back(gen_stereogram(90000 + 1000 * seed + static_cast<std::uint64_t>(i), 32, 64,
                                     15, SceneKind::dots, 0.05));
  }
  ModelConfig cfg;
  cfg.variant = Variant::tiny;
  cfg.height = 32;
  cfg.width = 64;
  cfg.max_disparity = 16;
  Model model = build_network(cfg, 40 + seed);

  DeskRun run;
  run.initial_d1 = heldout_d1(model, heldout);
  TrainOptions opt;
  opt.steps = steps;
  opt.mode = mode;
  opt.adam.lr = 1e-4f;
  opt.use_sparse_gt = true;
  TrainResult tr = train(model, train_set, opt);
  run.diverged = tr.diverged;
  run.losses.reserve(tr.log.size());
  for (const auto& e : tr.log) run.losses.push_back(e.total);
  run.trained_d1 = heldout_d1(model, heldout);
  return run;
}

DeskRun criterion_training() {
  const auto t0 = std::chrono::steady_clock::now();
  DeskRun run = desk_training_run(1, TrainMode::lidar_photo, 2000);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;

  // (a) non-overlapping 100-step loss means, strictly decreasing
  bool monotone = !run.diverged && run.losses.size() == 2000;
  std::vector<double> windows;
  for (std::size_t w = 0; w + 100 <= run.losses.size(); w += 100) {
    double mean = 0.0;
    for (std::size_t i = w; i < w + 100; ++i) mean += run.losses[i];
    windows.push_back(mean / 100.0);
  }
  for (std::size_t i = 1; i < windows.size(); ++i) {
    if (!(windows[i] < windows[i - 1])) monotone = false;
  }
  // (b) held-out D1-all down to a fifth of its initial value
  const bool improved = run.trained_d1 <= run.initial_d1 / 5.0;
  report(8, monotone && improved,
         "100-step loss means strictly decreasing: " + std::string(monotone ? "yes" : "NO") +
             "; held-out D1-all " + fmt(run.initial_d1, 1) + "% -> " + fmt(run.trained_d1, 1) +
             "% (bound " + fmt(run.initial_d1 / 5.0, 1) + "%); " + fmt(minutes, 1) + " min");
  return run;
}

void criterion_semisupervised_ordering(const DeskRun& seed1_combined) {
  std::vector<double> combined = {seed1_combined.trained_d1};
  std::vector<double> lidar_only;
  for (std::uint64_t seed : {2ull, 3ull}) {
    combined.push_back(desk_training_run(seed, TrainMode::lidar_photo, 2000).trained_d1);
  }
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    lidar_only.push_back(desk_training_run(seed, TrainMode::lidar, 2000).trained_d1);
  }
  std::sort(combined.begin(), combined.end());
  std::sort(lidar_only.begin(), lidar_only.end());
  const double med_combined = combined[1];
  const double med_lidar = lidar_only[1];
  report(9, med_combined <= med_lidar,
         "median held-out D1-all over 3 seeds: lidar_photo=" + fmt(med_combined, 1) +
             "%, lidar=" + fmt(med_lidar, 1) + "%",
         /*advisory=*/true);
}

// ---- criterion 10: colormap ----

void criterion_colormap() {
  const ColormapLUT lut = build_colormap();
  bool pass = true;
  for (int i = 1; i < 8; ++i) {
    int changed = 0;
    for (int c = 0; c < 3; ++c) {
      if (lut.stops[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] !=
          lut.stops[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c)]) {
        ++changed;
      }
    }
    if (changed != 1) pass = false;
    if (!(lut.positions[static_cast<std::size_t>(i)] >
          lut.positions[static_cast<std::size_t>(i - 1)])) {
      pass = false;
    }
  }
  double total = 0.0;
  std::array<double, 7> seg{};
  for (int i = 0; i < 7; ++i) {
    const auto& a = lut.stops[static_cast<std::size_t>(i)];
    const auto& b = lut.stops[static_cast<std::size_t>(i + 1)];
    seg[static_cast<std::size_t>(i)] =
        delta_e76(srgb_to_lab(a[0], a[1], a[2]), srgb_to_lab(b[0], b[1], b[2]));
    total += seg[static_cast<std::size_t>(i)];
  }
  double worst = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double per_unit = seg[static_cast<std::size_t>(i)] /
                            (lut.positions[static_cast<std::size_t>(i + 1)] -
                             lut.positions[static_cast<std::size_t>(i)]);
    worst = std::max(worst, std::abs(per_unit - total) / total);
  }
  pass = pass && worst < 1e-6;
  // endpoints render exactly black and white
  DisparityMap ends(Tensor<float>({1, 2}, {0.0f, 96.0f}));
  Tensor<float> rgb = colorize(ends, 0.0f, 96.0f);
  for (int c = 0; c < 3; ++c) {
    if (rgb.at({0, 0, c}) != 0.0f || rgb.at({0, 1, c}) != 1.0f) pass = false;
  }
  report(10, pass,
         "KRYGCBMW stops, Hamming-1 steps, per-segment delta-E uniform to " +
             fmt(worst * 1e9, 2) + "e-9, endpoints black/white");
}

// ---- criterion 11: benchmark ordering ----

void criterion_bench_ordering() {
  Rng rng(11);
  const int h = 160, w = 512, d = 64;
  Tensor<float> left({h, w, 3});
  Tensor<float> right({h, w, 3});
  for (std::int64_t i = 0; i < left.size(); ++i) {
    left[i] = static_cast<float>(rng.uniform());
    right[i] = static_cast<float>(rng.uniform());
  }
  auto median_ms = [&](Variant v, int repeat) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.height = h;
    cfg.width = w;
    cfg.max_disparity = d;
    Model model = build_network(cfg, 5);
    std::vector<double> times;
    for (int r = 0; r < repeat; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      ForwardResult out = forward(model, left, right);
      (void)out;
      times.push_back(
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };
  const double tiny_ms = median_ms(Variant::tiny, 3);
  const double small_ms = median_ms(Variant::small, 3);
  const double baseline_ms = median_ms(Variant::baseline, 1);
  const bool pass = tiny_ms < small_ms && small_ms < baseline_ms;
  report(11, pass,
         "512x160/D=64 forward medians: tiny=" + fmt(tiny_ms, 0) + "ms < small=" +
             fmt(small_ms, 0) + "ms < baseline=" + fmt(baseline_ms, 0) + "ms");
}

// ---- criterion 12: codec round trips ----

void criterion_round_trips() {
  Rng rng(12);
  bool pass = true;
  Tensor<float> img({9, 13, 3});
  for (std::int64_t i = 0; i < img.size(); ++i) {
    img[i] = static_cast<float>(rng.uniform_int(0, 255)) / 255.0f;
  }
  const auto ib = encode_image(img);
  pass = pass && ib == encode_image(decode_image(ib));

  Tensor<float> dv({7, 11});
  std::vector<std::uint8_t> mask(77);
  for (std::int64_t i = 0; i < 77; ++i) {
    dv[i] = static_cast<float>(rng.uniform_int(1, 65535)) / 256.0f;
    mask[static_cast<std::size_t>(i)] = rng.bernoulli(0.8) ? 1 : 0;
  }
  const auto db = encode_disparity(DisparityMap(dv, mask));
  pass = pass && db == encode_disparity(decode_disparity(db));

  ModelConfig cfg;
  cfg.variant = Variant::tiny;
  cfg.height = 16;
  cfg.width = 32;
  cfg.max_disparity = 8;
  cfg.features = 8;
  Model model = build_network(cfg, 13);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string p1 = (dir / "stereokit_accept_1.sdnn").string();
  const std::string p2 = (dir / "stereokit_accept_2.sdnn").string();
  AdamState st = make_adam_state(model);
  save_checkpoint(p1, model, &st, 7);
  Checkpoint ck = load_checkpoint(p1);
  Model back = model_from_checkpoint(ck);
  AdamState st2 = ck.adam;
  save_checkpoint(p2, back, &st2, ck.step);
  pass = pass && read_file(p1) == read_file(p2);
  report(12, pass, "image, disparity and checkpoint encode/decode are bitwise identities");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  std::printf("stereokit acceptance suite (threads=%d)\n", max_threads());
  criterion_parameter_counts();
  criterion_memory_ratios();
  criterion_shape_audit();
  criterion_gradients();
  criterion_loss_identities();
  criterion_warp_oracle();
  criterion_metric_oracle();
  DeskRun run8 = criterion_training();
  criterion_semisupervised_ordering(run8);
  criterion_colormap();
  criterion_bench_ordering();
  criterion_round_trips();

  int hard_failures = 0;
  for (const auto& o : g_outcomes) {
    if (!o.pass && !o.advisory) ++hard_failures;
  }
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  std::printf("%d of %zu criteria passed (%d advisory), %.1f min total\n",
              static_cast<int>(g_outcomes.size()) - hard_failures -
                  static_cast<int>(std::count_if(g_outcomes.begin(), g_outcomes.end(),
                                                 [](const Outcome& o) {
                                                   return !o.pass && o.advisory;
                                                 })),
              g_outcomes.size(),
              static_cast<int>(std::count_if(g_outcomes.begin(), g_outcomes.end(),
                                             [](const Outcome& o) { return o.advisory; })),
              minutes);
  return hard_failures == 0 ? 0 : 1;
}

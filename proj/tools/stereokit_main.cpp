// Command-line surface of the stereo toolkit: dataset generation, training,
// inference, evaluation, benchmarking and the gradient audit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <new>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stereokit/colormap.hpp"
#include "stereokit/gradcheck.hpp"
#include "stereokit/image_io.hpp"
#include "stereokit/metrics.hpp"
#include "stereokit/net.hpp"
#include "stereokit/ops.hpp"
#include "stereokit/rng.hpp"
#include "stereokit/stereogram.hpp"
#include "stereokit/threading.hpp"
#include "stereokit/trainer.hpp"

namespace fs = std::filesystem;
using namespace stereokit;

namespace {

void echo_flag(const std::string& key, const std::string& value) {
  std::cout << "# " << key << "=" << value << "\n";
}

struct GenDataArgs {
  std::uint64_t seed = 1;
  int count = 4;
  int height = 32;
  int width = 64;
  int max_disparity = 12;
  std::string scene = "dots";
  double sparsity = 0.0;  // 0 writes dense ground truth
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
  echo_flag("command", "gen-data");
  echo_flag("seed", std::to_string(a.seed));
  echo_flag("count", std::to_string(a.count));
  echo_flag("height", std::to_string(a.height));
  echo_flag("width", std::to_string(a.width));
  echo_flag("max_disparity", std::to_string(a.max_disparity));
  echo_flag("scene", a.scene);
  echo_flag("sparsity", std::to_string(a.sparsity));
  echo_flag("out", a.out);
  const SceneKind scene = scene_from_name(a.scene);
  std::vector<std::string> ids;
  for (int i = 0; i < a.count; ++i) {
    StereoSample s = gen_stereogram(a.seed * 1000003ull + static_cast<std::uint64_t>(i), a.height,
                                    a.width, a.max_disparity, scene,
                                    a.sparsity > 0 ? a.sparsity : 0.05);
    char id[32];
    std::snprintf(id, sizeof(id), "s%04d", i);
    s.id = id;
    try {
      save_sample(a.out, s, /*sparse_gt=*/a.sparsity > 0);
    } catch (const std::exception& e) {
      std::cerr << "error writing sample " << s.id << ": " << e.what() << "\n";
      return 1;
    }
    ids.push_back(s.id);
  }
  write_manifest(a.out, ids);
  std::cout << "wrote " << ids.size() << " samples to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string variant = "tiny";
  std::string mode = "lidar_photo";
  std::int64_t steps = 2000;
  std::string data;
  std::string out;
  int max_disparity = 16;
  int features = 32;
  float lr = 1e-4f;
  std::uint64_t seed = 1;
  std::int64_t checkpoint_every = 500;
  bool dense_gt = false;
};

int cmd_train(const TrainArgs& a) {
  echo_flag("command", "train");
  echo_flag("variant", a.variant);
  echo_flag("mode", a.mode);
  echo_flag("steps", std::to_string(a.steps));
  echo_flag("data", a.data);
  echo_flag("out", a.out);
  echo_flag("max_disparity", std::to_string(a.max_disparity));
  echo_flag("features", std::to_string(a.features));
  echo_flag("lr", std::to_string(a.lr));
  echo_flag("seed", std::to_string(a.seed));
  const auto ids = read_manifest(a.data);
  if (ids.empty()) {
    std::cerr << "error: dataset manifest is empty\n";
    return 1;
  }
  std::vector<StereoSample> dataset;
  dataset.reserve(ids.size());
  for (const auto& id : ids) dataset.push_back(load_sample(a.data, id));

  ModelConfig cfg;
  cfg.variant = variant_from_name(a.variant);
  cfg.height = dataset[0].left.dim(0);
  cfg.width = dataset[0].left.dim(1);
  cfg.max_disparity = a.max_disparity;
  cfg.features = a.features;
  Model model = build_network(cfg, a.seed);

  fs::create_directories(a.out);
  TrainOptions opt;
  opt.steps = a.steps;
  opt.mode = train_mode_from_name(a.mode);
  opt.adam.lr = a.lr;
  opt.use_sparse_gt = !a.dense_gt;
  opt.checkpoint_path = (fs::path(a.out) / "model.sdnn").string();
  opt.checkpoint_every = a.checkpoint_every;
  opt.log_path = (fs::path(a.out) / "train_log.csv").string();
  TrainResult result = train(model, dataset, opt);
  if (result.diverged) {
    std::cerr << "error: training diverged at step " << result.steps_run + 1
              << "; last good checkpoint retained\n";
    return 1;
  }
  save_checkpoint(opt.checkpoint_path, model, nullptr, result.steps_run);
  if (!result.log.empty()) {
    std::cout << "final " << format_log_line(result.log.back()) << "\n";
  }
  std::cout << "checkpoint " << opt.checkpoint_path << "\n";
  return 0;
}

struct InferArgs {
  std::string checkpoint;
  std::string left, right;
  std::string out_disparity;
  std::string out_right;
  std::vector<float> colorize_range;
};

int cmd_infer(const InferArgs& a) {
  echo_flag("command", "infer");
  echo_flag("checkpoint", a.checkpoint);
  echo_flag("left", a.left);
  echo_flag("right", a.right);
  echo_flag("out_disparity", a.out_disparity);
  Model model = model_from_checkpoint(load_checkpoint(a.checkpoint));
  Tensor<float> left = load_image(a.left);
  Tensor<float> right = load_image(a.right);
  ForwardResult r = forward(model, left, right);
  save_disparity(a.out_disparity, r.left);
  if (!a.out_right.empty()) {
    if (!r.has_right) {
      std::cerr << "error: a single_tower checkpoint produces no right map\n";
      return 1;
    }
    save_disparity(a.out_right, r.right);
  }
  if (a.colorize_range.size() == 2) {
    const fs::path color_path = fs::path(a.out_disparity).replace_extension(".ppm");
    save_image(color_path.string(), colorize(r.left, a.colorize_range[0], a.colorize_range[1]));
    std::cout << "colorized " << color_path.string() << "\n";
  }
  std::cout << "disparity " << a.out_disparity << "\n";
  return 0;
}

struct EvalArgs {
  std::string est_dir, gt_dir;
  std::string rule = "or";
};

int cmd_eval(const EvalArgs& a) {
  echo_flag("command", "eval");
  echo_flag("est_dir", a.est_dir);
  echo_flag("gt_dir", a.gt_dir);
  echo_flag("rule", a.rule);
  const OutlierRule rule = a.rule == "and" ? OutlierRule::and_rule : OutlierRule::or_rule;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(a.est_dir)) {
    if (entry.path().extension() == ".pgm16") names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  std::cout << "sample,d1_all_percent,epe_px,pixels\n";
  std::int64_t total_pixels = 0;
  double weighted_d1 = 0.0, weighted_epe = 0.0;
  int evaluated = 0;
  for (const auto& name : names) {
    const fs::path gt_path = fs::path(a.gt_dir) / name;
    if (!fs::exists(gt_path)) {
      std::cerr << "missing ground truth for " << name << ", excluded\n";
      continue;
    }
    DisparityMap est = load_disparity((fs::path(a.est_dir) / name).string());
    DisparityMap gt = load_disparity(gt_path.string());
    EvalReport rep = evaluate(est, gt, rule);
    std::printf("%s,%.4f,%.4f,%lld\n", name.c_str(), rep.d1_all, rep.epe,
                static_cast<long long>(rep.evaluated_pixels));
    weighted_d1 += rep.d1_all * static_cast<double>(rep.evaluated_pixels);
    weighted_epe += rep.epe * static_cast<double>(rep.evaluated_pixels);
    total_pixels += rep.evaluated_pixels;
    ++evaluated;
  }
  if (evaluated == 0) {
    std::cerr << "error: no evaluable pairs\n";
    return 1;
  }
  std::printf("TOTAL,%.4f,%.4f,%lld\n", weighted_d1 / static_cast<double>(total_pixels),
              weighted_epe / static_cast<double>(total_pixels),
              static_cast<long long>(total_pixels));
  return 0;
}

struct BenchArgs {
  std::string variants = "baseline,small,tiny";
  int height = 160;
  int width = 512;
  int max_disparity = 64;
  int repeat = 3;
  bool check = false;
};

int cmd_bench(const BenchArgs& a) {
  echo_flag("command", "bench");
  echo_flag("variants", a.variants);
  echo_flag("height", std::to_string(a.height));
  echo_flag("width", std::to_string(a.width));
  echo_flag("max_disparity", std::to_string(a.max_disparity));
  echo_flag("repeat", std::to_string(a.repeat));
  echo_flag("threads", std::to_string(max_threads()));
  std::vector<std::string> names;
  {
    std::string rest = a.variants;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      names.push_back(rest.substr(0, comma));
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    }
  }
  Rng rng(12345);
  Tensor<float> left({a.height, a.width, 3});
  Tensor<float> right({a.height, a.width, 3});
  for (std::int64_t i = 0; i < left.size(); ++i) {
    left[i] = static_cast<float>(rng.uniform());
    right[i] = static_cast<float>(rng.uniform());
  }
  std::cout << "variant,height,width,max_disparity,median_ms\n";
  std::vector<std::pair<std::string, double>> medians;
  for (const auto& name : names) {
    const Variant variant = variant_from_name(name);  // usage error on typos
    try {
      ModelConfig cfg;
      cfg.variant = variant;
      cfg.height = a.height;
      cfg.width = a.width;
      cfg.max_disparity = a.max_disparity;
      Model model = build_network(cfg, 7);
      std::vector<double> times;
      for (int r = 0; r < std::max(1, a.repeat); ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        ForwardResult out = forward(model, left, right);
        const auto t1 = std::chrono::steady_clock::now();
        (void)out;
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      std::sort(times.begin(), times.end());
      const double median = times[times.size() / 2];
      std::printf("%s,%d,%d,%d,%.1f\n", name.c_str(), a.height, a.width, a.max_disparity, median);
      medians.emplace_back(name, median);
    } catch (const std::bad_alloc&) {
      std::printf("%s,%d,%d,%d,OOM\n", name.c_str(), a.height, a.width, a.max_disparity);
    }
  }
  if (a.check) {
    auto find = [&](const std::string& name) -> const double* {
      for (const auto& [n, m] : medians) {
        if (n == name) return &m;
      }
      return nullptr;
    };
    const double* tiny = find("tiny");
    const double* small = find("small");
    const double* baseline = find("baseline");
    if (tiny && small && *tiny >= *small) {
      std::cerr << "check failed: tiny is not faster than small\n";
      return 1;
    }
    if (small && baseline && *small >= *baseline) {
      std::cerr << "check failed: small is not faster than baseline\n";
      return 1;
    }
    std::cout << "ordering check passed\n";
  }
  return 0;
}

struct GradcheckArgs {
  std::string scale = "tiny8";
  int seeds = 10;
  bool inject_fault = false;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  echo_flag("command", "gradcheck");
  echo_flag("scale", a.scale);
  echo_flag("seeds", std::to_string(a.seeds));
  echo_flag("inject_fault", a.inject_fault ? "1" : "0");
  debug::corrupt_elu_backward = a.inject_fault;
  const auto cases = run_gradcheck_suite(a.seeds);
  debug::corrupt_elu_backward = false;
  std::cout << "op,max_rel_err,pass\n";
  int failures = 0;
  for (const auto& c : cases) {
    const bool pass = c.max_rel_err < 1e-4;
    std::printf("%s,%.3e,%s\n", c.name.c_str(), c.max_rel_err, pass ? "yes" : "no");
    failures += pass ? 0 : 1;
  }
  if (failures > 0) {
    std::cerr << failures << " of " << cases.size() << " checks exceeded 1e-4\n";
    return 1;
  }
  std::cout << "all " << cases.size() << " checks passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stereokit: semi-supervised deep stereo toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; '#' starts a comment");
  int threads = 0;
  app.add_option("--threads", threads, "cap kernel parallelism (env STEREOKIT_THREADS)");

  GenDataArgs gen;
  CLI::App* cmd_gen = app.add_subcommand("gen-data", "write synthetic stereogram samples");
  cmd_gen->add_option("--seed", gen.seed);
  cmd_gen->add_option("--count", gen.count);
  cmd_gen->add_option("--height", gen.height);
  cmd_gen->add_option("--width", gen.width);
  cmd_gen->add_option("--max-disparity", gen.max_disparity);
  cmd_gen->add_option("--scene", gen.scene)
      ->check(CLI::IsMember({"fronto_planes", "slanted", "dots"}));
  cmd_gen->add_option("--sparsity", gen.sparsity,
                      "fraction of ground truth kept in the disparity files; 0 writes dense");
  cmd_gen->add_option("--out", gen.out)->required();

  TrainArgs tr;
  CLI::App* cmd_tr = app.add_subcommand("train", "optimize a variant on a dataset");
  cmd_tr->add_option("--variant", tr.variant);
  cmd_tr->add_option("--mode", tr.mode)->check(CLI::IsMember({"lidar", "photo", "lidar_photo"}));
  cmd_tr->add_option("--steps", tr.steps);
  cmd_tr->add_option("--data", tr.data)->required();
  cmd_tr->add_option("--out", tr.out)->required();
  cmd_tr->add_option("--max-disparity", tr.max_disparity);
  cmd_tr->add_option("--features", tr.features);
  cmd_tr->add_option("--lr", tr.lr);
  cmd_tr->add_option("--seed", tr.seed);
  cmd_tr->add_option("--checkpoint-every", tr.checkpoint_every);
  cmd_tr->add_flag("--dense-gt", tr.dense_gt, "train on dense instead of sparse ground truth");

  InferArgs inf;
  CLI::App* cmd_inf = app.add_subcommand("infer", "run a checkpoint on an image pair");
  cmd_inf->add_option("--checkpoint", inf.checkpoint)->required();
  cmd_inf->add_option("--left", inf.left)->required();
  cmd_inf->add_option("--right", inf.right)->required();
  cmd_inf->add_option("--out-disparity", inf.out_disparity)->required();
  cmd_inf->add_option("--out-right-disparity", inf.out_right);
  cmd_inf->add_option("--colorize", inf.colorize_range,
                      "min max: also write a colorized .ppm next to the disparity")
      ->expected(2);

  EvalArgs ev;
  CLI::App* cmd_ev = app.add_subcommand("eval", "D1-all / EPE over matching .pgm16 files");
  cmd_ev->add_option("--est-dir", ev.est_dir)->required();
  cmd_ev->add_option("--gt-dir", ev.gt_dir)->required();
  cmd_ev->add_option("--rule", ev.rule)->check(CLI::IsMember({"or", "and"}));

  BenchArgs be;
  CLI::App* cmd_be = app.add_subcommand("bench", "median forward latency per variant");
  cmd_be->add_option("--variants", be.variants);
  cmd_be->add_option("--height", be.height);
  cmd_be->add_option("--width", be.width);
  cmd_be->add_option("--max-disparity", be.max_disparity);
  cmd_be->add_option("--repeat", be.repeat);
  cmd_be->add_flag("--check", be.check, "fail unless tiny < small < baseline");

  GradcheckArgs gc;
  CLI::App* cmd_gc = app.add_subcommand("gradcheck", "finite-difference audit of every kernel");
  cmd_gc->add_option("--scale", gc.scale)->check(CLI::IsMember({"tiny8"}));
  cmd_gc->add_option("--seeds", gc.seeds)->check(CLI::PositiveNumber);
  cmd_gc->add_flag("--inject-fault", gc.inject_fault,
                   "corrupt one backward rule; the audit must then fail");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  }

  if (threads > 0) {
    set_max_threads(threads);
  } else if (cmd_be->parsed() && !std::getenv("STEREOKIT_THREADS")) {
    set_max_threads(1);  // stable timings by default
  }

  try {
    if (cmd_gen->parsed()) return cmd_gen_data(gen);
    if (cmd_tr->parsed()) return cmd_train(tr);
    if (cmd_inf->parsed()) return cmd_infer(inf);
    if (cmd_ev->parsed()) return cmd_eval(ev);
    if (cmd_be->parsed()) return cmd_bench(be);
    if (cmd_gc->parsed()) return cmd_gradcheck(gc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

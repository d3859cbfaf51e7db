#include "stereokit/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

namespace stereokit {

AdamState make_adam_state(const Model& model, AdamParams hyper) {
  AdamState s;
  s.hyper = hyper;
  s.m.reserve(model.params.size());
  s.v.reserve(model.params.size());
  for (const auto& [name, t] : model.params) {
    s.m.emplace_back(t.shape());
    s.v.emplace_back(t.shape());
  }
  return s;
}

bool adam_step(Model& model, const GradMap<float>& grads, AdamState& state, float lr) {
  if (state.m.size() != model.params.size()) {
    throw std::invalid_argument("adam_step: state does not match model");
  }
  for (const auto& [name, p] : model.params) {
    auto it = grads.find(name);
    if (it == grads.end()) {
      throw std::invalid_argument("adam_step: no gradient for parameter '" + name + "'");
    }
    const Tensor<float>& g = it->second;
    for (std::int64_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) return false;
    }
  }
  state.t += 1;
  const float b1 = state.hyper.beta1, b2 = state.hyper.beta2;
  const float bc1 = 1.0f - std::pow(b1, static_cast<float>(state.t));
  const float bc2 = 1.0f - std::pow(b2, static_cast<float>(state.t));
  for (std::size_t k = 0; k < model.params.size(); ++k) {
    Tensor<float>& p = model.params[k].second;
    const Tensor<float>& g = grads.at(model.params[k].first);
    Tensor<float>& m = state.m[k];
    Tensor<float>& v = state.v[k];
    for (std::int64_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      const float mhat = m[i] / bc1;
      const float vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + state.hyper.eps);
    }
  }
  return true;
}

float scheduled_lr(float base, std::int64_t step, std::int64_t total_steps) {
  if (total_steps <= 0) return base;
  // halves every third of the run, applied continuously
  const float progress = static_cast<float>(step) / static_cast<float>(total_steps);
  return base * std::pow(0.5f, 3.0f * progress);
}

const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::lidar: return "lidar";
    case TrainMode::photo: return "photo";
    case TrainMode::lidar_photo: return "lidar_photo";
  }
  return "?";
}

TrainMode train_mode_from_name(const std::string& name) {
  for (TrainMode m : {TrainMode::lidar, TrainMode::photo, TrainMode::lidar_photo}) {
    if (name == train_mode_name(m)) return m;
  }
  throw std::invalid_argument("unknown training mode '" + name + "'");
}

LossWeights weights_for_mode(TrainMode mode) {
  LossWeights w;
  switch (mode) {
    case TrainMode::lidar:
      w.lambda1 = 0.0f;
      w.lambda2 = 1.0f;
      w.lambda3 = 1.0f;
      w.lambda4 = 0.1f;
      break;
    case TrainMode::photo:
      w.lambda1 = 1.0f;
      w.lambda2 = 0.0f;
      w.lambda3 = 1.0f;
      w.lambda4 = 0.1f;
      break;
    case TrainMode::lidar_photo:
      w.lambda1 = 0.01f;
      w.lambda2 = 1.0f;
      w.lambda3 = 0.1f;
      w.lambda4 = 0.1f;
      break;
  }
  return w;
}

std::string format_log_line(const StepLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g",
                static_cast<long long>(e.step), e.total, e.e_image, e.e_lidar, e.e_lr, e.e_ds,
                e.lr);
  return buf;
}

TrainResult train(Model& model, const std::vector<StereoSample>& dataset,
                  const TrainOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("train: dataset is empty");
  const LossWeights weights =
      options.weights_override ? *options.weights_override : weights_for_mode(options.mode);
  AdamState adam = make_adam_state(model, options.adam);
  TrainResult result;
  result.log.reserve(static_cast<std::size_t>(options.steps));
  std::ofstream log_file;
  if (!options.log_path.empty()) {
    log_file.open(options.log_path);
    if (!log_file) throw std::runtime_error("cannot write training log '" + options.log_path + "'");
    log_file << "step,total,E_image,E_lidar,E_lr,E_ds,lr\n";
  }
  const float max_d = static_cast<float>(model.config.max_disparity);

  for (std::int64_t step = 1; step <= options.steps; ++step) {
    const StereoSample& sample = dataset[static_cast<std::size_t>((step - 1) %
                                                                  dataset.size())];
    const DisparityMap& gt_l = options.use_sparse_gt ? sample.gt_left_sparse : sample.gt_left;
    const DisparityMap& gt_r = options.use_sparse_gt ? sample.gt_right_sparse : sample.gt_right;

    Tape<float> tape;
    ParamVars pv = insert_params(tape, model);
    Var left = tape.leaf(sample.left);
    Var right = tape.leaf(sample.right);
    ForwardVars fw = network_forward(tape, model, pv, left, right);
    const bool use_gt = weights.lambda2 != 0.0f;
    LossTerms terms =
        total_loss(tape, left, right, fw.left, fw.right, use_gt ? &gt_l : nullptr,
                   use_gt ? &gt_r : nullptr, weights, max_d);

    StepLog entry;
    entry.step = step;
    entry.total = tape.value(terms.total)[0];
    entry.e_image = tape.value(terms.image)[0];
    entry.e_lidar = tape.value(terms.lidar)[0];
    entry.e_lr = tape.value(terms.lr)[0];
    entry.e_ds = tape.value(terms.smooth)[0];
    entry.lr = scheduled_lr(options.adam.lr, step - 1, options.steps);

    if (!std::isfinite(entry.total)) {
      result.diverged = true;
      break;
    }
    GradMap<float> grads = tape.backward(terms.total);
    if (!adam_step(model, grads, adam, entry.lr)) {
      result.diverged = true;
      break;
    }
    result.log.push_back(entry);
    result.steps_run = step;
    if (log_file) log_file << format_log_line(entry) << "\n";
    if (!options.checkpoint_path.empty() && options.checkpoint_every > 0 &&
        (step % options.checkpoint_every == 0 || step == options.steps)) {
      save_checkpoint(options.checkpoint_path, model, &adam, step);
    }
  }
  return result;
}

// ---- checkpoint serialization ----

namespace {

constexpr char kMagic[4] = {'S', 'D', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

void put_tensor(std::vector<std::uint8_t>& out, const Tensor<float>& t) {
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (std::int64_t i = 0; i < t.size(); ++i) put_f32(out, t[i]);
}

struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
  std::string context = "header";

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error("checkpoint: " + msg + " while reading " + context);
  }

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) fail("truncated file");
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }

  float f32() {
    const std::uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }

  Tensor<float> tensor() {
    const std::uint32_t rank = u32();
    if (rank == 0 || rank > 8) fail("bad tensor rank");
    std::vector<int> shape;
    std::int64_t size = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t d = u32();
      if (d == 0 || d > (1u << 24)) fail("bad tensor dim");
      shape.push_back(static_cast<int>(d));
      size *= d;
    }
    Tensor<float> t(shape);
    for (std::int64_t i = 0; i < size; ++i) t[i] = f32();
    return t;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const AdamState* adam,
                     std::int64_t step) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  const ModelConfig& c = model.config;
  put_u32(out, static_cast<std::uint32_t>(c.variant));
  put_u32(out, static_cast<std::uint32_t>(c.height));
  put_u32(out, static_cast<std::uint32_t>(c.width));
  put_u32(out, static_cast<std::uint32_t>(c.max_disparity));
  put_u32(out, static_cast<std::uint32_t>(c.channels));
  put_u32(out, static_cast<std::uint32_t>(c.features));
  out.push_back(c.allow_ragged_shapes ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(model.params.size()));
  for (const auto& [name, t] : model.params) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_tensor(out, t);
  }
  out.push_back(adam ? 1 : 0);
  if (adam) {
    put_u64(out, static_cast<std::uint64_t>(adam->t));
    put_f32(out, adam->hyper.beta1);
    put_f32(out, adam->hyper.beta2);
    put_f32(out, adam->hyper.eps);
    put_f32(out, adam->hyper.lr);
    for (const auto& m : adam->m) put_tensor(out, m);
    for (const auto& v : adam->v) put_tensor(out, v);
  }
  put_u64(out, static_cast<std::uint64_t>(step));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  Reader r{bytes};
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) r.fail("bad magic");
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    r.fail("unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config.variant = static_cast<Variant>(r.u32());
  ckpt.config.height = static_cast<int>(r.u32());
  ckpt.config.width = static_cast<int>(r.u32());
  ckpt.config.max_disparity = static_cast<int>(r.u32());
  ckpt.config.channels = static_cast<int>(r.u32());
  ckpt.config.features = static_cast<int>(r.u32());
  r.need(1);
  ckpt.config.allow_ragged_shapes = bytes[r.pos++] != 0;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    r.context = "parameter #" + std::to_string(i);
    const std::uint32_t len = r.u32();
    if (len == 0 || len > 4096) r.fail("bad name length");
    const std::string name = r.str(len);
    r.context = "parameter '" + name + "'";
    ckpt.params.emplace_back(name, r.tensor());
  }
  r.context = "adam state";
  r.need(1);
  ckpt.has_adam = bytes[r.pos++] != 0;
  if (ckpt.has_adam) {
    ckpt.adam.t = static_cast<std::int64_t>(r.u64());
    ckpt.adam.hyper.beta1 = r.f32();
    ckpt.adam.hyper.beta2 = r.f32();
    ckpt.adam.hyper.eps = r.f32();
    ckpt.adam.hyper.lr = r.f32();
    for (std::uint32_t i = 0; i < count; ++i) {
      r.context = "adam m for parameter #" + std::to_string(i);
      ckpt.adam.m.push_back(r.tensor());
    }
    for (std::uint32_t i = 0; i < count; ++i) {
      r.context = "adam v for parameter #" + std::to_string(i);
      ckpt.adam.v.push_back(r.tensor());
    }
  }
  r.context = "step";
  ckpt.step = static_cast<std::int64_t>(r.u64());
  return ckpt;
}

void apply_checkpoint(Model& model, const Checkpoint& ckpt) {
  std::set<std::string> model_names, ckpt_names;
  for (const auto& [n, t] : model.params) model_names.insert(n);
  for (const auto& [n, t] : ckpt.params) ckpt_names.insert(n);
  if (model_names != ckpt_names) {
    std::string missing, extra;
    for (const auto& n : model_names) {
      if (!ckpt_names.count(n)) missing += (missing.empty() ? "" : ", ") + n;
    }
    for (const auto& n : ckpt_names) {
      if (!model_names.count(n)) extra += (extra.empty() ? "" : ", ") + n;
    }
    throw std::runtime_error("checkpoint does not match model: missing [" + missing +
                             "], unexpected [" + extra + "]");
  }
  for (const auto& [name, t] : ckpt.params) {
    Tensor<float>& dst = model.param(name);
    if (!dst.same_shape(t)) {
      throw std::runtime_error("checkpoint parameter '" + name + "' has shape " +
                               shape_str(t.shape()) + ", model expects " +
                               shape_str(dst.shape()));
    }
    dst = t;
  }
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model m = build_network(ckpt.config, 0);
  apply_checkpoint(m, ckpt);
  return m;
}

}  // namespace stereokit

#include "stereokit/net.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "stereokit/rng.hpp"

namespace stereokit {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::ml_argmax: return "ml_argmax";
    case Variant::correlation: return "correlation";
    case Variant::no_bottleneck: return "no_bottleneck";
    case Variant::small: return "small";
    case Variant::tiny: return "tiny";
    case Variant::single_tower: return "single_tower";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  for (Variant v : {Variant::baseline, Variant::ml_argmax, Variant::correlation,
                    Variant::no_bottleneck, Variant::small, Variant::tiny,
                    Variant::single_tower}) {
    if (name == variant_name(v)) return v;
  }
  throw std::invalid_argument("unknown variant '" + name + "'");
}

int ModelConfig::downsample_factor() const {
  switch (variant) {
    case Variant::no_bottleneck: return 2;
    case Variant::small:
    case Variant::tiny: return 8;
    default: return 32;
  }
}

void ModelConfig::validate() const {
  if (channels < 1) throw std::invalid_argument("config: channels must be >= 1");
  if (features < 1) throw std::invalid_argument("config: features must be >= 1");
  if (max_disparity < 2) throw std::invalid_argument("config: max disparity must be >= 2");
  if (variant == Variant::tiny && features % 2 != 0) {
    throw std::invalid_argument("config: tiny halves the 3D features; feature count must be even");
  }
  if (allow_ragged_shapes) return;
  const int f = downsample_factor();
  auto check = [&](const char* axis, int value) {
    if (value % f != 0) {
      throw std::invalid_argument(std::string("config: ") + axis + " " + std::to_string(value) +
                                  " not divisible by " + std::to_string(f) + " for variant " +
                                  variant_name(variant));
    }
  };
  check("height", height);
  check("width", width);
  check("max disparity", max_disparity);
}

namespace {

int cdiv2(int x) { return (x + 1) / 2; }

struct ParamSpec {
  std::string prefix;
  std::vector<int> kernel;
  int bias = 0;
};

struct TrunkDims {
  int d = 0, h = 0, w = 0;
};

// Realizes one variant's layer table. Row ids follow the table labels;
// "<n>+" marks the add-and-ELU line after row n.
LayerPlan make_plan(const ModelConfig& cfg, std::vector<ParamSpec>& specs) {
  LayerPlan plan;
  plan.correlation = cfg.variant == Variant::correlation;
  plan.single_tower = cfg.variant == Variant::single_tower;
  const int f = cfg.features;
  const int h2 = cdiv2(cfg.height), w2 = cdiv2(cfg.width);

  auto tower_conv = [&](const std::string& id, int k, int stride, int cin, int cout, bool act) {
    LayerStep s;
    s.id = id;
    s.kind = StepKind::conv2d;
    s.ksize = k;
    s.stride = stride;
    s.out_features = cout;
    s.elu_after = act;
    s.expected_dims = {h2, w2, cout};
    s.has_params = true;
    s.param_prefix = "tower." + id;
    specs.push_back({s.param_prefix, {k, k, cin, cout}, cout});
    plan.tower.push_back(s);
  };

  const bool plain_tower = cfg.variant == Variant::small || cfg.variant == Variant::tiny;
  tower_conv("1", 5, 2, cfg.channels, f, true);
  if (plain_tower) {
    for (int i = 2; i <= 5; ++i) tower_conv(std::to_string(i), 3, 1, f, f, true);
  } else {
    std::string block_in = "1";
    for (int b = 2; b <= 9; ++b) {
      tower_conv(std::to_string(b) + "a", 3, 1, f, f, true);
      tower_conv(std::to_string(b) + "b", 3, 1, f, f, false);
      LayerStep s;
      s.id = std::to_string(b) + "+";
      s.kind = StepKind::add_skip;
      s.skip_of = block_in;
      s.elu_after = true;
      s.expected_dims = {h2, w2, f};
      plan.tower.push_back(s);
      block_in = s.id;
    }
    tower_conv("10", 3, 1, f, f, false);
  }

  // trunk
  TrunkDims cur{cdiv2(cfg.max_disparity), h2, w2};
  int cin = plan.correlation ? 1 : 2 * f;
  std::map<std::string, TrunkDims> row_dims;

  {
    LayerStep s;
    s.id = "11";
    s.kind = StepKind::cost_volume;
    s.out_features = cin;
    s.expected_dims = {cur.d, cur.h, cur.w, cin};
    plan.trunk.push_back(s);
    row_dims["11"] = cur;
  }

  auto conv3 = [&](const std::string& id, int stride, int cout) {
    if (stride == 2) {
      cur.d = cdiv2(cur.d);
      cur.h = cdiv2(cur.h);
      cur.w = cdiv2(cur.w);
    }
    LayerStep s;
    s.id = id;
    s.kind = StepKind::conv3d;
    s.stride = stride;
    s.out_features = cout;
    s.elu_after = true;
    s.expected_dims = {cur.d, cur.h, cur.w, cout};
    s.has_params = true;
    s.param_prefix = "match." + id;
    specs.push_back({s.param_prefix, {3, 3, 3, cin, cout}, cout});
    plan.trunk.push_back(s);
    row_dims[id] = cur;
    cin = cout;
  };
  auto deconv3 = [&](const std::string& id, int cout, TrunkDims target, bool act,
                     const std::string& prefix) {
    cur = target;
    LayerStep s;
    s.id = id;
    s.kind = StepKind::deconv3d;
    s.stride = 2;
    s.out_features = cout;
    s.elu_after = act;
    s.target_dims = {target.d, target.h, target.w};
    s.expected_dims = {target.d, target.h, target.w, cout};
    s.has_params = true;
    s.param_prefix = prefix;
    specs.push_back({s.param_prefix, {3, 3, 3, cout, cin}, cout});
    plan.trunk.push_back(s);
    row_dims[id] = cur;
    cin = cout;
  };
  auto skip_add = [&](const std::string& id, const std::string& of) {
    LayerStep s;
    s.id = id;
    s.kind = StepKind::add_skip;
    s.skip_of = of;
    s.elu_after = true;
    s.expected_dims = {cur.d, cur.h, cur.w, cin};
    plan.trunk.push_back(s);
    row_dims[id] = cur;
  };

  switch (cfg.variant) {
    case Variant::baseline:
    case Variant::ml_argmax:
    case Variant::correlation:
    case Variant::single_tower: {
      conv3("12a", 1, f);
      conv3("12b", 1, f);
      conv3("12c", 2, 2 * f);
      conv3("13a", 1, 2 * f);
      conv3("13b", 1, 2 * f);
      conv3("13c", 2, 2 * f);
      conv3("14a", 1, 2 * f);
      conv3("14b", 1, 2 * f);
      conv3("14c", 2, 2 * f);
      conv3("15a", 1, 2 * f);
      conv3("15b", 1, 2 * f);
      conv3("15c", 2, 4 * f);
      conv3("16", 1, 4 * f);
      conv3("17", 1, 4 * f);
      deconv3("18", 2 * f, row_dims["15b"], true, "match.18");
      skip_add("18+", "15b");
      deconv3("19", 2 * f, row_dims["14b"], true, "match.19");
      skip_add("19+", "14b");
      deconv3("20", 2 * f, row_dims["13b"], true, "match.20");
      skip_add("20+", "13b");
      deconv3("21", f, row_dims["12b"], true, "match.21");
      skip_add("21+", "12b");
      break;
    }
    case Variant::small:
    case Variant::tiny: {
      const int q = cfg.variant == Variant::tiny ? f / 2 : f;
      conv3("12a", 1, q);
      conv3("12b", 1, q);
      conv3("12c", 2, 2 * q);
      conv3("13a", 1, 2 * q);
      conv3("13b", 1, 2 * q);
      conv3("13c", 2, 4 * q);
      conv3("16", 1, 4 * q);
      conv3("17", 1, 4 * q);
      deconv3("18", 2 * q, row_dims["13b"], true, "match.18");
      skip_add("18+", "13b");
      deconv3("19", q, row_dims["12b"], true, "match.19");
      skip_add("19+", "12b");
      break;
    }
    case Variant::no_bottleneck: {
      conv3("16", 1, f);
      conv3("17", 1, f);
      break;
    }
  }

  deconv3("22", 1, TrunkDims{cfg.max_disparity, cfg.height, cfg.width}, false, "up.22");

  {
    LayerStep s;
    s.id = "23";
    s.kind = StepKind::reshape_hwd;
    s.expected_dims = {cfg.height, cfg.width, cfg.max_disparity};
    plan.trunk.push_back(s);
  }

  if (cfg.variant == Variant::ml_argmax) {
    const int d = cfg.max_disparity;
    int head_cin = d;
    for (int row = 24; row <= 28; ++row) {
      LayerStep s;
      s.id = std::to_string(row);
      s.kind = StepKind::conv2d;
      s.stride = 1;
      s.out_features = row == 28 ? 1 : d;
      s.elu_after = row != 28;
      s.sigmoid_after = row == 28;
      s.post_scale = row == 28 ? static_cast<float>(d) : 1.0f;
      s.expected_dims = {cfg.height, cfg.width, s.out_features};
      s.has_params = true;
      s.param_prefix = "head." + s.id;
      specs.push_back({s.param_prefix, {3, 3, head_cin, s.out_features}, s.out_features});
      plan.trunk.push_back(s);
      head_cin = s.out_features;
    }
  } else {
    LayerStep s;
    s.id = "24";
    s.kind = StepKind::soft_argmax;
    s.expected_dims = {cfg.height, cfg.width, 1};
    plan.trunk.push_back(s);
  }
  return plan;
}

}  // namespace

const Tensor<float>& Model::param(const std::string& name) const {
  for (const auto& [n, t] : params) {
    if (n == name) return t;
  }
  throw std::invalid_argument("model has no parameter '" + name + "'");
}

Tensor<float>& Model::param(const std::string& name) {
  for (auto& [n, t] : params) {
    if (n == name) return t;
  }
  throw std::invalid_argument("model has no parameter '" + name + "'");
}

bool Model::has_param(const std::string& name) const {
  for (const auto& [n, t] : params) {
    if (n == name) return true;
  }
  return false;
}

Model build_network(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config = config;
  std::vector<ParamSpec> specs;
  m.plan = make_plan(config, specs);
  Rng rng(seed);
  for (const auto& spec : specs) {
    Tensor<float> w(spec.kernel);
    std::int64_t taps = 1;
    for (std::size_t i = 0; i + 2 < spec.kernel.size(); ++i) taps *= spec.kernel[i];
    const int ca = spec.kernel[spec.kernel.size() - 2];
    const int cb = spec.kernel[spec.kernel.size() - 1];
    const double bound = std::sqrt(6.0 / (static_cast<double>(taps) * (ca + cb)));
    for (std::int64_t i = 0; i < w.size(); ++i) {
      w[i] = static_cast<float>(rng.uniform(-bound, bound));
    }
    m.params.emplace_back(spec.prefix + ".w", std::move(w));
    m.params.emplace_back(spec.prefix + ".b", Tensor<float>({spec.bias}));
  }
  return m;
}

std::int64_t count_parameters(const Model& model) {
  std::int64_t n = 0;
  for (const auto& [name, t] : model.params) n += t.size();
  return n;
}

Var ParamVars::at(const std::string& name) const {
  for (const auto& [n, v] : items) {
    if (n == name) return v;
  }
  throw std::logic_error("no parameter var '" + name + "'");
}

template <typename T>
ParamVars insert_params(Tape<T>& tape, const Model& model) {
  ParamVars pv;
  pv.items.reserve(model.params.size());
  for (const auto& [name, tensor] : model.params) {
    if constexpr (std::is_same_v<T, float>) {
      pv.items.emplace_back(name, tape.param(name, tensor));
    } else {
      pv.items.emplace_back(name, tape.param(name, tensor.template cast<T>()));
    }
  }
  return pv;
}

namespace {

template <typename T>
Var soft_argmax_hwd(Tape<T>& t, Var hwd) {
  const std::vector<int> sh = t.value(hwd).shape();  // {h, w, d}
  Var p = softmax(t, mul_scalar(t, hwd, T(-1)), 2);
  Tensor<T> iota(sh);
  const int d = sh[2];
  for (std::int64_t i = 0; i < iota.size(); ++i) iota[i] = static_cast<T>(i % d);
  Var e = mul(t, p, t.leaf(std::move(iota)));
  Var s = sum_axis(t, e, 2);  // {h, w}
  return reshape(t, s, {sh[0], sh[1], 1});
}

template <typename T>
class PlanRunner {
 public:
  PlanRunner(Tape<T>& tape, const Model& model, const ParamVars& params,
             std::vector<ShapeRecord>* audit)
      : tape_(tape), model_(model), params_(params), audit_(audit) {}

  Var run_tower(Var image, const char* label) {
    std::map<std::string, Var> env;
    Var cur = image;
    for (const auto& s : model_.plan.tower) cur = apply(s, cur, env, {}, {}, {}, label);
    return cur;
  }

  Var run_trunk(Var feat_left, Var feat_right, CostDirection dir, const char* label) {
    std::map<std::string, Var> env;
    Var cur;  // defined by the cost-volume step, always first
    for (const auto& s : model_.plan.trunk) cur = apply(s, cur, env, feat_left, feat_right, dir, label);
    // squeeze HxWx1 to HxW pixel-unit disparity
    const std::vector<int>& sh = tape_.value(cur).shape();
    return reshape(tape_, cur, {sh[0], sh[1]});
  }

 private:
  Var apply(const LayerStep& s, Var cur, std::map<std::string, Var>& env, Var feat_left,
            Var feat_right, CostDirection dir, const char* label) {
    Tape<T>& t = tape_;
    switch (s.kind) {
      case StepKind::conv2d:
      case StepKind::conv3d:
        cur = conv(t, cur, params_.at(s.param_prefix + ".w"), params_.at(s.param_prefix + ".b"),
                   s.stride);
        break;
      case StepKind::deconv3d:
        cur = conv_transpose(t, cur, params_.at(s.param_prefix + ".w"),
                             params_.at(s.param_prefix + ".b"), s.stride, s.target_dims);
        break;
      case StepKind::add_skip:
        cur = add(t, cur, env.at(s.skip_of));
        break;
      case StepKind::cost_volume: {
        const int slices = cdiv2(model_.config.max_disparity);
        cur = model_.plan.correlation
                  ? cost_volume_corr(t, feat_left, feat_right, slices, dir)
                  : cost_volume_concat(t, feat_left, feat_right, slices, dir);
        break;
      }
      case StepKind::reshape_hwd: {
        const std::vector<int> sh = t.value(cur).shape();  // {d, h, w, 1}
        cur = reshape(t, cur, {sh[0], sh[1], sh[2]});
        cur = permute(t, cur, {1, 2, 0});
        break;
      }
      case StepKind::soft_argmax:
        cur = soft_argmax_hwd(t, cur);
        break;
    }
    if (s.elu_after) cur = elu(t, cur);
    if (s.sigmoid_after) cur = sigmoid(t, cur);
    if (s.post_scale != 1.0f) cur = mul_scalar(t, cur, static_cast<T>(s.post_scale));
    env[s.id] = cur;
    if (audit_) audit_->push_back({label, s.id, t.value(cur).shape(), s.expected_dims});
    return cur;
  }

  Tape<T>& tape_;
  const Model& model_;
  const ParamVars& params_;
  std::vector<ShapeRecord>* audit_;
};

template <typename T>
void check_image_shape(const Tape<T>& tape, Var image, const ModelConfig& cfg, const char* side) {
  const std::vector<int> want = {cfg.height, cfg.width, cfg.channels};
  const std::vector<int>& got = tape.value(image).shape();
  if (got != want) {
    throw std::invalid_argument(std::string(side) + " image " + shape_str(got) +
                                " does not match config " + shape_str(want));
  }
}

}  // namespace

template <typename T>
ForwardVars network_forward(Tape<T>& tape, const Model& model, const ParamVars& params,
                            Var left_image, Var right_image, bool collect_audit) {
  check_image_shape(tape, left_image, model.config, "left");
  check_image_shape(tape, right_image, model.config, "right");
  ForwardVars out;
  PlanRunner<T> runner(tape, model, params, collect_audit ? &out.audit : nullptr);
  Var feat_left = runner.run_tower(left_image, "left");
  Var feat_right = runner.run_tower(right_image, "right");
  out.left = runner.run_trunk(feat_left, feat_right, CostDirection::left_ref, "left");
  if (!model.plan.single_tower) {
    out.right = runner.run_trunk(feat_left, feat_right, CostDirection::right_ref, "right");
  }
  return out;
}

template <typename T>
Var tower_forward(Tape<T>& tape, const Model& model, const ParamVars& params, Var image) {
  check_image_shape(tape, image, model.config, "input");
  PlanRunner<T> runner(tape, model, params, nullptr);
  return runner.run_tower(image, "left");
}

ForwardResult forward(const Model& model, const Tensor<float>& left, const Tensor<float>& right,
                      bool collect_audit) {
  Tape<float> tape;
  ParamVars pv = insert_params(tape, model);
  Var l = tape.leaf(left);
  Var r = tape.leaf(right);
  ForwardVars fv = network_forward(tape, model, pv, l, r, collect_audit);
  ForwardResult res;
  res.left = DisparityMap(tape.value(fv.left));
  if (fv.right.defined()) {
    res.right = DisparityMap(tape.value(fv.right));
    res.has_right = true;
  }
  res.audit = std::move(fv.audit);
  return res;
}

Tensor<float> extract_features(const Model& model, const Tensor<float>& image) {
  Tape<float> tape;
  ParamVars pv = insert_params(tape, model);
  Var out = tower_forward(tape, model, pv, tape.leaf(image));
  return tape.value(out);
}

DisparityMap soft_argmax(const Tensor<float>& costs) {
  if (costs.rank() != 4 || costs.dim(3) != 1) {
    throw std::invalid_argument("soft_argmax: costs must be DxHxWx1, got " +
                                shape_str(costs.shape()));
  }
  Tape<float> tape;
  Var v = tape.leaf(costs);
  v = reshape(tape, v, {costs.dim(0), costs.dim(1), costs.dim(2)});
  v = permute(tape, v, {1, 2, 0});
  v = soft_argmax_hwd(tape, v);
  return DisparityMap(tape.value(v).reshaped({costs.dim(1), costs.dim(2)}));
}

DisparityMap ml_argmax(const Model& model, const Tensor<float>& pdf) {
  if (model.config.variant != Variant::ml_argmax) {
    throw std::invalid_argument("ml_argmax: model variant has no aggregator head");
  }
  if (pdf.rank() != 3 || pdf.dim(2) != model.config.max_disparity) {
    throw std::invalid_argument("ml_argmax: pdf must be HxWxD with D=" +
                                std::to_string(model.config.max_disparity) + ", got " +
                                shape_str(pdf.shape()));
  }
  Tape<float> tape;
  ParamVars pv = insert_params(tape, model);
  Var cur = tape.leaf(pdf);
  for (const auto& s : model.plan.trunk) {
    if (s.param_prefix.rfind("head.", 0) != 0) continue;
    cur = conv(tape, cur, pv.at(s.param_prefix + ".w"), pv.at(s.param_prefix + ".b"), s.stride);
    if (s.elu_after) cur = elu(tape, cur);
    if (s.sigmoid_after) cur = sigmoid(tape, cur);
    if (s.post_scale != 1.0f) cur = mul_scalar(tape, cur, s.post_scale);
  }
  const Tensor<float>& out = tape.value(cur);  // HxWx1
  return DisparityMap(out.reshaped({out.dim(0), out.dim(1)}));
}

Tensor<float> build_cost_volume_concat(const Tensor<float>& left, const Tensor<float>& right,
                                       int max_d, CostDirection dir) {
  Tape<float> tape;
  return tape.value(cost_volume_concat(tape, tape.leaf(left), tape.leaf(right), max_d, dir));
}

Tensor<float> build_cost_volume_corr(const Tensor<float>& left, const Tensor<float>& right,
                                     int max_d, CostDirection dir) {
  Tape<float> tape;
  return tape.value(cost_volume_corr(tape, tape.leaf(left), tape.leaf(right), max_d, dir));
}

template ParamVars insert_params<float>(Tape<float>&, const Model&);
template ParamVars insert_params<double>(Tape<double>&, const Model&);
template ForwardVars network_forward<float>(Tape<float>&, const Model&, const ParamVars&, Var, Var,
                                            bool);
template ForwardVars network_forward<double>(Tape<double>&, const Model&, const ParamVars&, Var,
                                             Var, bool);
template Var tower_forward<float>(Tape<float>&, const Model&, const ParamVars&, Var);
template Var tower_forward<double>(Tape<double>&, const Model&, const ParamVars&, Var);

}  // namespace stereokit

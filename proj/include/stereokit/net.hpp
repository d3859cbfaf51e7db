#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stereokit/disparity.hpp"
#include "stereokit/ops.hpp"
#include "stereokit/tape.hpp"
#include "stereokit/tensor.hpp"

namespace stereokit {

enum class Variant {
  baseline,
  ml_argmax,
  correlation,
  no_bottleneck,
  small,
  tiny,
  single_tower,
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::baseline;
  int height = 320;
  int width = 1024;
  int max_disparity = 96;
  int channels = 3;
  int features = 32;
  // The printed layer tables assume dims divisible by the full downsampling
  // factor. With this set, any size runs: strided convs produce ceil
  // shapes and deconvs take their matching encoder shape as the target.
  bool allow_ragged_shapes = false;

  // 32 with the full 3D bottleneck, 8 for small/tiny, 2 without one.
  int downsample_factor() const;
  void validate() const;
};

enum class StepKind {
  conv2d,
  conv3d,
  deconv3d,
  add_skip,
  cost_volume,
  reshape_hwd,
  soft_argmax,
};

// One row of the variant's layer table, realized with concrete sizes.
struct LayerStep {
  std::string id;          // table row label, e.g. "12a"
  StepKind kind = StepKind::conv2d;
  int ksize = 3;
  int stride = 1;
  int out_features = 0;
  bool elu_after = false;
  bool sigmoid_after = false;
  float post_scale = 1.0f;       // applied after the activation
  std::string skip_of;           // add_skip: id of the tensor to add
  std::vector<int> target_dims;  // deconv3d: explicit output spatial dims
  std::vector<int> expected_dims;
  bool has_params = false;
  std::string param_prefix;  // parameters live at <prefix>.w / <prefix>.b
};

struct LayerPlan {
  std::vector<LayerStep> tower;  // 2D feature extraction, weights shared
  std::vector<LayerStep> trunk;  // cost volume through aggregator
  bool correlation = false;
  bool single_tower = false;
};

// Named parameters plus the realized layer plan for one variant.
struct Model {
  ModelConfig config;
  LayerPlan plan;
  std::vector<std::pair<std::string, Tensor<float>>> params;  // ordered, names unique

  const Tensor<float>& param(const std::string& name) const;
  Tensor<float>& param(const std::string& name);
  bool has_param(const std::string& name) const;
};

// Realizes the variant's layer table and initializes weights uniformly in
// +-sqrt(6/(fan_in+fan_out)) from the seed; biases start at zero.
Model build_network(const ModelConfig& config, std::uint64_t seed);

std::int64_t count_parameters(const Model& model);

// ---- taped execution (shared by inference, training and grad checks) ----

struct ParamVars {
  std::vector<std::pair<std::string, Var>> items;
  Var at(const std::string& name) const;
};

template <typename T>
ParamVars insert_params(Tape<T>& tape, const Model& model);

struct ShapeRecord {
  std::string tower;  // "left" or "right"
  std::string id;
  std::vector<int> actual;
  std::vector<int> expected;
};

struct ForwardVars {
  Var left;   // HxW disparity in pixel units
  Var right;  // undefined for single_tower
  std::vector<ShapeRecord> audit;
};

template <typename T>
ForwardVars network_forward(Tape<T>& tape, const Model& model, const ParamVars& params,
                            Var left_image, Var right_image, bool collect_audit = false);

// Feature tower only: image HxWxC -> ceil(H/2) x ceil(W/2) x F.
template <typename T>
Var tower_forward(Tape<T>& tape, const Model& model, const ParamVars& params, Var image);

// ---- eager wrappers over the taped path ----

struct ForwardResult {
  DisparityMap left;
  DisparityMap right;
  bool has_right = false;
  std::vector<ShapeRecord> audit;
};

ForwardResult forward(const Model& model, const Tensor<float>& left, const Tensor<float>& right,
                      bool collect_audit = false);

Tensor<float> extract_features(const Model& model, const Tensor<float>& image);

// Differentiable winner take all over matching costs DxHxWx1: softmax of
// negated costs, then the expected disparity index per pixel.
DisparityMap soft_argmax(const Tensor<float>& costs);

// Convolutional aggregator head of the ml_argmax variant applied to the
// reshaped upsampler output HxWxD; output scaled to pixel units by D.
DisparityMap ml_argmax(const Model& model, const Tensor<float>& pdf);

Tensor<float> build_cost_volume_concat(const Tensor<float>& left, const Tensor<float>& right,
                                       int max_d, CostDirection dir);
Tensor<float> build_cost_volume_corr(const Tensor<float>& left, const Tensor<float>& right,
                                     int max_d, CostDirection dir);

}  // namespace stereokit

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stereokit/disparity.hpp"
#include "stereokit/tensor.hpp"

namespace stereokit {

// Rectified pair with ground truth. The sparse maps subsample the dense
// ones (LIDAR-like coverage); both use the same validity semantics.
struct StereoSample {
  std::string id;
  Tensor<float> left, right;  // HxWx3 in [0,1]
  DisparityMap gt_left, gt_right;
  DisparityMap gt_left_sparse, gt_right_sparse;
};

enum class SceneKind { fronto_planes, slanted, dots };

const char* scene_name(SceneKind s);
SceneKind scene_from_name(const std::string& name);

// Random-texture stereogram with a piecewise disparity field defined on the
// left grid: the right image is the source texture and the left image is
// synthesized exactly as left(y,x) = right(y, x + d(y,x)). Pixels whose
// counterpart is covered by a closer surface, or falls off the right edge,
// are invalid in gt_left; right-grid pixels no left pixel maps onto are
// invalid in gt_right. fronto_planes and dots use integer disparities
// (synthesis is exact); slanted uses fractional ones.
StereoSample gen_stereogram(std::uint64_t seed, int height, int width, int max_d, SceneKind scene,
                            double sparsity = 0.05);

// Synthesis core: builds the pair from an explicit right texture (HxWx3)
// and a left-grid disparity field (HxW, values >= 0). Dense ground truth
// only; gen_stereogram wraps this with random scenes and sparsification.
StereoSample synthesize_pair(const Tensor<float>& right_texture,
                             const Tensor<float>& disparity_field);

// Dataset directory layout: <dir>/<id>/{left.ppm, right.ppm,
// disp_left.pgm16, disp_right.pgm16} plus a manifest listing sample ids.
void save_sample(const std::string& dir, const StereoSample& sample, bool sparse_gt);
StereoSample load_sample(const std::string& dir, const std::string& id);
void write_manifest(const std::string& dir, const std::vector<std::string>& ids);
std::vector<std::string> read_manifest(const std::string& dir);

}  // namespace stereokit

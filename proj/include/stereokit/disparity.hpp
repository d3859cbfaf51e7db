#pragma once

#include <cstdint>
#include <vector>

#include "stereokit/tensor.hpp"

namespace stereokit {

// Per-pixel disparity in pixel units with a validity mask. Losses and
// metrics ignore invalid pixels. Normalization to [0,1] (the scaling the
// training losses use) is centralized here.
struct DisparityMap {
  Tensor<float> values;             // HxW
  std::vector<std::uint8_t> valid;  // HxW, 1 = usable

  DisparityMap() = default;

  // Dense map: every pixel valid.
  explicit DisparityMap(Tensor<float> v);
  DisparityMap(Tensor<float> v, std::vector<std::uint8_t> mask);

  int height() const { return values.dim(0); }
  int width() const { return values.dim(1); }
  std::int64_t valid_count() const;

  // values / max_disparity as a fresh tensor.
  Tensor<float> normalized(float max_disparity) const;
};

}  // namespace stereokit

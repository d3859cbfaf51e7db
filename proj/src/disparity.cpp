#include "stereokit/disparity.hpp"

#include <stdexcept>

namespace stereokit {

DisparityMap::DisparityMap(Tensor<float> v) : values(std::move(v)) {
  if (values.rank() != 2) {
    throw std::invalid_argument("DisparityMap: values must be HxW, got " +
                                shape_str(values.shape()));
  }
  valid.assign(static_cast<std::size_t>(values.size()), 1);
}

DisparityMap::DisparityMap(Tensor<float> v, std::vector<std::uint8_t> mask)
    : values(std::move(v)), valid(std::move(mask)) {
  if (values.rank() != 2) {
    throw std::invalid_argument("DisparityMap: values must be HxW, got " +
                                shape_str(values.shape()));
  }
  if (static_cast<std::int64_t>(valid.size()) != values.size()) {
    throw std::invalid_argument("DisparityMap: mask size does not match values");
  }
}

std::int64_t DisparityMap::valid_count() const {
  std::int64_t n = 0;
  for (auto v : valid) n += v ? 1 : 0;
  return n;
}

Tensor<float> DisparityMap::normalized(float max_disparity) const {
  Tensor<float> out(values.shape());
  const float inv = 1.0f / max_disparity;
  for (std::int64_t i = 0; i < values.size(); ++i) out[i] = values[i] * inv;
  return out;
}

}  // namespace stereokit

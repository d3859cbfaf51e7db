#include "stereokit/tensor.hpp"

namespace stereokit {

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace stereokit

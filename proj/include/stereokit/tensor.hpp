#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stereokit {

std::string shape_str(const std::vector<int>& shape);

// Dense N-dimensional array, row-major with the last axis fastest.
// Copies share the underlying buffer; tensors are treated as immutable
// values once filled, so sharing is safe across threads.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    size_ = checked_size(shape_);
    data_ = std::make_shared<std::vector<T>>(static_cast<std::size_t>(size_), T(0));
  }

  Tensor(std::vector<int> shape, std::vector<T> values) : shape_(std::move(shape)) {
    size_ = checked_size(shape_);
    if (static_cast<std::int64_t>(values.size()) != size_) {
      throw std::invalid_argument("Tensor: " + std::to_string(values.size()) +
                                  " values for shape " + shape_str(shape_));
    }
    data_ = std::make_shared<std::vector<T>>(std::move(values));
  }

  static Tensor full(std::vector<int> shape, T value) {
    Tensor t(std::move(shape));
    for (auto& v : *t.data_) v = value;
    return t;
  }

  static Tensor scalar(T value) { return full({1}, value); }

  bool defined() const { return data_ != nullptr; }
  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::int64_t size() const { return size_; }

  T* data() { return data_->data(); }
  const T* data() const { return data_->data(); }

  T& operator[](std::int64_t i) { return (*data_)[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return (*data_)[static_cast<std::size_t>(i)]; }

  // Row-major multi-index access; convenience for tests and small tensors.
  T& at(std::initializer_list<int> idx) { return (*data_)[offset(idx)]; }
  const T& at(std::initializer_list<int> idx) const { return (*data_)[offset(idx)]; }

  // Shares the buffer; element count must match.
  Tensor reshaped(std::vector<int> shape) const {
    if (checked_size(shape) != size_) {
      throw std::invalid_argument("reshape: " + shape_str(shape_) + " -> " +
                                  shape_str(shape) + " changes element count");
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.size_ = size_;
    t.data_ = data_;
    return t;
  }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.size_ = size_;
    t.data_ = std::make_shared<std::vector<T>>(*data_);
    return t;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(static_cast<std::size_t>(size_));
    for (std::int64_t i = 0; i < size_; ++i) out[static_cast<std::size_t>(i)] = static_cast<U>((*data_)[i]);
    return Tensor<U>(shape_, std::move(out));
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  static std::int64_t checked_size(const std::vector<int>& shape) {
    if (shape.empty()) throw std::invalid_argument("Tensor: empty shape");
    std::int64_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim in " + shape_str(shape));
      n *= d;
    }
    return n;
  }

  std::size_t offset(std::initializer_list<int> idx) const {
    if (static_cast<int>(idx.size()) != rank()) {
      throw std::invalid_argument("Tensor::at: index rank mismatch");
    }
    std::int64_t off = 0;
    int axis = 0;
    for (int i : idx) {
      off = off * shape_[static_cast<std::size_t>(axis)] + i;
      ++axis;
    }
    return static_cast<std::size_t>(off);
  }

  std::vector<int> shape_;
  std::int64_t size_ = 0;
  std::shared_ptr<std::vector<T>> data_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace stereokit

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stereokit/tensor.hpp"

namespace stereokit {

// Handle into a tape. Only meaningful together with the tape that issued it.
struct Var {
  int id = -1;
  bool defined() const { return id >= 0; }
};

template <typename T>
using GradMap = std::map<std::string, Tensor<T>>;

// Reverse-mode gradient tape. Operations append nodes in evaluation order,
// so inputs always precede their consumers and a single reverse sweep
// propagates adjoints. One tape per training worker; not thread-safe.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>&)>;

  // Constant or input leaf; no gradient is reported for it unless queried
  // through grad().
  Var leaf(Tensor<T> value) { return push(std::move(value), {}); }

  // Leaf registered as a named parameter. backward() reports a gradient for
  // every registered parameter, zero-filled when unused.
  Var param(const std::string& name, Tensor<T> value) {
    Var v = push(std::move(value), {});
    param_names_.emplace_back(name, v.id);
    return v;
  }

  Var record(Tensor<T> value, std::vector<Var> inputs, BackwardFn backward) {
    Var v = push(std::move(value), std::move(inputs));
    nodes_[static_cast<std::size_t>(v.id)].backward = std::move(backward);
    return v;
  }

  const Tensor<T>& value(Var v) const { return node(v).value; }

  std::size_t node_count() const { return nodes_.size(); }

  // Propagates d(output)/d(node) for every node reachable from `output`,
  // which must hold exactly one element. Returns gradients of registered
  // parameters by name.
  GradMap<T> backward(Var output) {
    const Tensor<T>& out = value(output);
    if (out.size() != 1) {
      throw std::invalid_argument("backward: output has " + std::to_string(out.size()) +
                                  " elements, expected a scalar");
    }
    grads_.assign(nodes_.size(), Tensor<T>());
    grads_[static_cast<std::size_t>(output.id)] = Tensor<T>::full(out.shape(), T(1));
    for (int i = output.id; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.backward || !grads_[static_cast<std::size_t>(i)].defined()) continue;
      n.backward(*this, grads_[static_cast<std::size_t>(i)]);
    }
    GradMap<T> out_grads;
    for (const auto& [name, id] : param_names_) {
      const Tensor<T>& g = grads_[static_cast<std::size_t>(id)];
      out_grads.emplace(name, g.defined() ? g : Tensor<T>(nodes_[static_cast<std::size_t>(id)].value.shape()));
    }
    return out_grads;
  }

  // Gradient of the last backward() output w.r.t. any node; zero tensor if
  // the node was not reached.
  Tensor<T> grad(Var v) const {
    if (grads_.empty()) throw std::logic_error("grad: backward() has not run");
    const Tensor<T>& g = grads_.at(static_cast<std::size_t>(v.id));
    return g.defined() ? g : Tensor<T>(value(v).shape());
  }

  // Called by backward rules to add a contribution to an input's adjoint.
  void accumulate(Var v, const Tensor<T>& delta) {
    Tensor<T>& g = grads_[static_cast<std::size_t>(v.id)];
    if (!g.defined()) {
      g = delta.clone();
      return;
    }
    if (!g.same_shape(delta)) {
      throw std::logic_error("accumulate: gradient shape mismatch " + shape_str(g.shape()) +
                             " vs " + shape_str(delta.shape()));
    }
    T* gp = g.data();
    const T* dp = delta.data();
    for (std::int64_t i = 0; i < g.size(); ++i) gp[i] += dp[i];
  }

 private:
  struct Node {
    Tensor<T> value;
    std::vector<Var> inputs;
    BackwardFn backward;
  };

  const Node& node(Var v) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
      throw std::logic_error("Tape: var " + std::to_string(v.id) + " is not on this tape");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
  }

  Var push(Tensor<T> value, std::vector<Var> inputs) {
    Node n;
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::vector<Tensor<T>> grads_;
  std::vector<std::pair<std::string, int>> param_names_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace stereokit

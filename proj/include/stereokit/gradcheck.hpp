#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stereokit/tape.hpp"

namespace stereokit {

// Builds a scalar from fresh input leaves; called repeatedly with perturbed
// points, so it must be a pure function of the tape inputs it creates.
using ScalarFn = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

// Central-difference check of d(fn)/d(points) against the tape gradient.
// Returns max over all coordinates of |analytic - numeric| divided by
// max(|analytic|, |numeric|, 1e-8). Runs in 64-bit; 32-bit rounding makes
// finite differences unusable.
double grad_check(const ScalarFn& fn, const std::vector<Tensor<double>>& points, double h = 1e-5);

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
};

// Finite-difference suite over every differentiable kernel and loss term,
// plus the full scaled-down network with the complete training loss.
// `seeds` independent random draws per case; reports the worst error seen.
std::vector<GradCheckCase> run_gradcheck_suite(int seeds);

}  // namespace stereokit

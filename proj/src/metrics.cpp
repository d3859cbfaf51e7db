#include "stereokit/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace stereokit {

namespace {

void check_pair(const DisparityMap& est, const DisparityMap& gt) {
  if (!est.values.same_shape(gt.values)) {
    throw std::invalid_argument("metrics: estimate " + shape_str(est.values.shape()) +
                                " vs ground truth " + shape_str(gt.values.shape()));
  }
}

}  // namespace

EvalReport evaluate(const DisparityMap& est, const DisparityMap& gt, OutlierRule rule) {
  check_pair(est, gt);
  std::int64_t n = 0, outliers = 0;
  double abs_sum = 0.0;
  for (std::int64_t i = 0; i < est.values.size(); ++i) {
    if (!est.valid[static_cast<std::size_t>(i)] || !gt.valid[static_cast<std::size_t>(i)]) continue;
    const double err = std::abs(static_cast<double>(est.values[i]) - gt.values[i]);
    const double rel_thresh = 0.05 * std::abs(static_cast<double>(gt.values[i]));
    const bool big = err >= 3.0;
    const bool rel = err >= rel_thresh;
    const bool outlier = rule == OutlierRule::or_rule ? (big || rel) : (big && rel);
    outliers += outlier ? 1 : 0;
    abs_sum += err;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("metrics: no jointly valid pixels to evaluate");
  EvalReport r;
  r.rule = rule;
  r.evaluated_pixels = n;
  r.d1_all = 100.0 * static_cast<double>(outliers) / static_cast<double>(n);
  r.epe = abs_sum / static_cast<double>(n);
  return r;
}

double d1_all(const DisparityMap& est, const DisparityMap& gt, OutlierRule rule) {
  return evaluate(est, gt, rule).d1_all;
}

double epe(const DisparityMap& est, const DisparityMap& gt) {
  return evaluate(est, gt, OutlierRule::or_rule).epe;
}

}  // namespace stereokit

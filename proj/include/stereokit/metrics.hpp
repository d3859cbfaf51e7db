#pragma once

#include <cstdint>

#include "stereokit/disparity.hpp"

namespace stereokit {

// or_rule follows the paper's wording (error >= 3 px OR >= 5% of ground
// truth); and_rule is the KITTI devkit conjunction of the same thresholds.
enum class OutlierRule { or_rule, and_rule };

struct EvalReport {
  double d1_all = 0.0;  // percent of evaluated pixels
  double epe = 0.0;     // mean absolute error, pixels
  std::int64_t evaluated_pixels = 0;
  OutlierRule rule = OutlierRule::or_rule;
};

// Percentage of outlier pixels over the joint validity mask. Throws when no
// pixel is evaluable.
double d1_all(const DisparityMap& est, const DisparityMap& gt,
              OutlierRule rule = OutlierRule::or_rule);

// Mean absolute disparity error over the joint validity mask.
double epe(const DisparityMap& est, const DisparityMap& gt);

EvalReport evaluate(const DisparityMap& est, const DisparityMap& gt,
                    OutlierRule rule = OutlierRule::or_rule);

}  // namespace stereokit

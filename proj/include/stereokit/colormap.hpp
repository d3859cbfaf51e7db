#pragma once

#include <array>

#include "stereokit/disparity.hpp"
#include "stereokit/tensor.hpp"

namespace stereokit {

// Disparity colormap walking the RGB-cube vertices K,R,Y,G,C,B,M,W; each
// consecutive pair differs in exactly one channel. Stop positions are the
// cumulative CIE1976 delta-E arc length in CIELAB (sRGB primaries, D65
// white), normalized to [0,1], so equal input steps cover equal delta-E
// within each segment.
struct ColormapLUT {
  std::array<std::array<float, 3>, 8> stops;
  std::array<double, 8> positions;
};

ColormapLUT build_colormap();

// Affine map of [d_min, d_max] onto the LUT arc length with linear RGB
// blending between stops; d_min renders black and d_max white (flip with
// invert). Invalid pixels render 50% gray. Output HxWx3 in [0,1].
Tensor<float> colorize(const DisparityMap& map, float d_min, float d_max, bool invert = false);

// CIELAB conversion used for the LUT parameterization (sRGB, D65).
std::array<double, 3> srgb_to_lab(double r, double g, double b);
double delta_e76(const std::array<double, 3>& a, const std::array<double, 3>& b);

}  // namespace stereokit

#pragma once

#include "stereokit/disparity.hpp"
#include "stereokit/ops.hpp"
#include "stereokit/tape.hpp"

namespace stereokit {

// lr samples at x - d(x,y); rl samples at x + d(x,y).
enum class WarpDirection { lr, rl };

// Every scalar of the combined training objective. lambda1..4 weight the
// photometric, LIDAR, left-right and smoothness terms; alpha mixes SSIM
// against L1 inside the photometric term; c1/c2 stabilize SSIM.
struct LossWeights {
  float lambda1 = 0.01f;
  float lambda2 = 1.0f;
  float lambda3 = 0.1f;
  float lambda4 = 0.1f;
  float alpha = 0.85f;
  float c1 = 1e-4f;
  float c2 = 1e-3f;
};

// Horizontal warp of an image (HxWxC or HxW) by a pixel-unit disparity map.
template <typename T>
Var warp(Tape<T>& t, Var image, Var disparity_px, WarpDirection dir);

// Per-pixel structural similarity over a 3x3 window. Inputs in [0, 1].
template <typename T>
Var ssim(Tape<T>& t, Var x, Var y, T c1, T c2);

// Photometric consistency: per side, mean of
// alpha*(1-SSIM(I, I~))/2 + (1-alpha)*|I - I~| with the counterpart image
// warped by this side's disparity; both sides summed.
template <typename T>
Var loss_image(Tape<T>& t, Var left_image, Var right_image, Var d_left_px, Var d_right_px,
               const LossWeights& w);

// Sparse ground-truth term: masked mean of |d - gt| on normalized (value/D)
// disparities, left plus right. A side with no valid pixels contributes
// zero and sets *no_valid.
template <typename T>
Var loss_lidar(Tape<T>& t, Var d_left_px, Var d_right_px, const DisparityMap& gt_left,
               const DisparityMap& gt_right, T max_disparity, bool* no_valid = nullptr);

// Left-right consistency: mean |d_l - d_l~| + mean |d_r - d_r~| where each
// map is warped onto the other side. Units follow the inputs.
template <typename T>
Var loss_lr(Tape<T>& t, Var d_left_px, Var d_right_px);

// Edge-aware smoothness: mean |dx d| exp(-||dx I||_1) + same along y, with
// forward differences and the last column/row dropped from each mean.
template <typename T>
Var loss_smooth(Tape<T>& t, Var disparity, Var image);

struct LossTerms {
  Var total;
  Var image;   // E_image
  Var lidar;   // E_lidar (normalized)
  Var lr;      // E_lr (normalized)
  Var smooth;  // E_ds (normalized)
};

// L = l1*E_image + l2*E_lidar + l3*E_lr + l4*E_ds. The disparity-valued
// terms run on normalized maps (value/D) so the default weights transfer
// from the paper's scaling; warping is always in pixel units. Pass an
// undefined d_right_px for the single-tower objective: every term touching
// the right disparity map is dropped. Null gt pointers drop the LIDAR term.
template <typename T>
LossTerms total_loss(Tape<T>& t, Var left_image, Var right_image, Var d_left_px, Var d_right_px,
                     const DisparityMap* gt_left, const DisparityMap* gt_right,
                     const LossWeights& w, T max_disparity, bool* lidar_empty = nullptr);

}  // namespace stereokit

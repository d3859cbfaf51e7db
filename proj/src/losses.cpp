#include "stereokit/losses.hpp"

#include <stdexcept>

namespace stereokit {

namespace {

template <typename T>
Tensor<T> column_grid(int h, int w) {
  Tensor<T> g({h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) g[static_cast<std::int64_t>(y) * w + x] = static_cast<T>(x);
  }
  return g;
}

template <typename T>
Var as_hwc(Tape<T>& t, Var v) {
  const std::vector<int>& sh = t.value(v).shape();
  if (sh.size() == 3) return v;
  return reshape(t, v, {sh[0], sh[1], 1});
}

// mean over all pixels of |d - warp(other, d)| in the input units
template <typename T>
Var lr_one_side(Tape<T>& t, Var d_this, Var d_other, WarpDirection dir) {
  Var warped = warp(t, d_other, d_this, dir);
  return mean_all(t, abs_elem(t, sub(t, d_this, warped)));
}

// alpha*(1-SSIM)/2 + (1-alpha)*L1 for one side
template <typename T>
Var image_one_side(Tape<T>& t, Var img, Var counterpart, Var d_px, WarpDirection dir,
                   const LossWeights& w) {
  Var reconstructed = warp(t, counterpart, d_px, dir);
  Var s = ssim(t, img, reconstructed, static_cast<T>(w.c1), static_cast<T>(w.c2));
  // mean((1 - ssim)/2) = (1 - mean(ssim))/2
  Var ssim_term = mul_scalar(t, add_scalar(t, mul_scalar(t, mean_all(t, s), T(-1)), T(1)),
                             static_cast<T>(w.alpha) / T(2));
  Var l1_term = mul_scalar(t, mean_all(t, abs_elem(t, sub(t, img, reconstructed))),
                           T(1) - static_cast<T>(w.alpha));
  return add(t, ssim_term, l1_term);
}

// masked mean of |d - gt| / D for one side; zero (and *empty set) when the
// mask has no pixels
template <typename T>
Var lidar_one_side(Tape<T>& t, Var d_px, const DisparityMap& gt, T max_disparity, bool* empty) {
  const std::vector<int>& sh = t.value(d_px).shape();
  if (sh.size() != 2 || sh[0] != gt.height() || sh[1] != gt.width()) {
    throw std::invalid_argument("loss_lidar: disparity " + shape_str(sh) +
                                " does not match ground truth " + shape_str(gt.values.shape()));
  }
  const std::int64_t count = gt.valid_count();
  if (count == 0) {
    if (empty) *empty = true;
    return t.leaf(Tensor<T>::scalar(T(0)));
  }
  Tensor<T> mask(gt.values.shape());
  Tensor<T> target(gt.values.shape());
  for (std::int64_t i = 0; i < mask.size(); ++i) {
    mask[i] = gt.valid[static_cast<std::size_t>(i)] ? T(1) : T(0);
    target[i] = static_cast<T>(gt.values[i]);
  }
  Var diff = abs_elem(t, sub(t, d_px, t.leaf(std::move(target))));
  Var masked = mul(t, diff, t.leaf(std::move(mask)));
  return mul_scalar(t, sum_all(t, masked), T(1) / (static_cast<T>(count) * max_disparity));
}

}  // namespace

template <typename T>
Var warp(Tape<T>& t, Var image, Var disparity_px, WarpDirection dir) {
  const std::vector<int>& ish = t.value(image).shape();
  const std::vector<int>& dsh = t.value(disparity_px).shape();
  if (dsh.size() != 2 || ish[0] != dsh[0] || ish[1] != dsh[1]) {
    throw std::invalid_argument("warp: image " + shape_str(ish) + " and disparity " +
                                shape_str(dsh) + " do not share HxW");
  }
  Var grid = t.leaf(column_grid<T>(dsh[0], dsh[1]));
  Var coords = dir == WarpDirection::lr ? sub(t, grid, disparity_px) : add(t, grid, disparity_px);
  return sample_bilinear_x(t, image, coords);
}

template <typename T>
Var ssim(Tape<T>& t, Var x, Var y, T c1, T c2) {
  const Tensor<T>& xv = t.value(x);
  const Tensor<T>& yv = t.value(y);
  if (!xv.same_shape(yv)) {
    throw std::invalid_argument("ssim: shape mismatch " + shape_str(xv.shape()) + " vs " +
                                shape_str(yv.shape()));
  }
  Var mx = box_mean3(t, x);
  Var my = box_mean3(t, y);
  Var mxy = box_mean3(t, mul(t, x, y));
  Var mx2 = box_mean3(t, mul(t, x, x));
  Var my2 = box_mean3(t, mul(t, y, y));
  Var vx = sub(t, mx2, mul(t, mx, mx));
  Var vy = sub(t, my2, mul(t, my, my));
  Var cov = sub(t, mxy, mul(t, mx, my));
  Var lum_n = add_scalar(t, mul_scalar(t, mul(t, mx, my), T(2)), c1);
  Var lum_d = add_scalar(t, add(t, mul(t, mx, mx), mul(t, my, my)), c1);
  Var str_n = add_scalar(t, mul_scalar(t, cov, T(2)), c2);
  Var str_d = add_scalar(t, add(t, vx, vy), c2);
  return mul(t, div(t, lum_n, lum_d), div(t, str_n, str_d));
}

template <typename T>
Var loss_image(Tape<T>& t, Var left_image, Var right_image, Var d_left_px, Var d_right_px,
               const LossWeights& w) {
  Var li = as_hwc(t, left_image);
  Var ri = as_hwc(t, right_image);
  Var term_l = image_one_side(t, li, ri, d_left_px, WarpDirection::rl, w);
  Var term_r = image_one_side(t, ri, li, d_right_px, WarpDirection::lr, w);
  return add(t, term_l, term_r);
}

template <typename T>
Var loss_lidar(Tape<T>& t, Var d_left_px, Var d_right_px, const DisparityMap& gt_left,
               const DisparityMap& gt_right, T max_disparity, bool* no_valid) {
  bool empty = false;
  Var l = lidar_one_side(t, d_left_px, gt_left, max_disparity, &empty);
  Var r = lidar_one_side(t, d_right_px, gt_right, max_disparity, &empty);
  if (no_valid) *no_valid = empty;
  return add(t, l, r);
}

template <typename T>
Var loss_lr(Tape<T>& t, Var d_left_px, Var d_right_px) {
  Var term_l = lr_one_side(t, d_left_px, d_right_px, WarpDirection::rl);
  Var term_r = lr_one_side(t, d_right_px, d_left_px, WarpDirection::lr);
  return add(t, term_l, term_r);
}

template <typename T>
Var loss_smooth(Tape<T>& t, Var disparity, Var image) {
  const std::vector<int>& dsh = t.value(disparity).shape();
  const std::vector<int>& ish = t.value(image).shape();
  if (dsh.size() != 2 || ish[0] != dsh[0] || ish[1] != dsh[1]) {
    throw std::invalid_argument("loss_smooth: disparity " + shape_str(dsh) + " and image " +
                                shape_str(ish) + " do not share HxW");
  }
  Var img = as_hwc(t, image);
  Var gx = abs_elem(t, diff_x(t, disparity));
  Var wx = exp_elem(t, mul_scalar(t, sum_axis(t, abs_elem(t, diff_x(t, img)), 2), T(-1)));
  Var term_x = mean_all(t, mul(t, gx, wx));
  Var gy = abs_elem(t, diff_y(t, disparity));
  Var wy = exp_elem(t, mul_scalar(t, sum_axis(t, abs_elem(t, diff_y(t, img)), 2), T(-1)));
  Var term_y = mean_all(t, mul(t, gy, wy));
  return add(t, term_x, term_y);
}

template <typename T>
LossTerms total_loss(Tape<T>& t, Var left_image, Var right_image, Var d_left_px, Var d_right_px,
                     const DisparityMap* gt_left, const DisparityMap* gt_right,
                     const LossWeights& w, T max_disparity, bool* lidar_empty) {
  const bool both = d_right_px.defined();
  Var li = as_hwc(t, left_image);
  Var ri = as_hwc(t, right_image);
  const T inv_d = T(1) / max_disparity;

  Var e_image = image_one_side(t, li, ri, d_left_px, WarpDirection::rl, w);
  if (both) {
    e_image = add(t, e_image, image_one_side(t, ri, li, d_right_px, WarpDirection::lr, w));
  }

  Var e_lidar;
  bool empty = false;
  if (gt_left) {
    e_lidar = lidar_one_side(t, d_left_px, *gt_left, max_disparity, &empty);
    if (both && gt_right) {
      e_lidar = add(t, e_lidar, lidar_one_side(t, d_right_px, *gt_right, max_disparity, &empty));
    }
  } else {
    e_lidar = t.leaf(Tensor<T>::scalar(T(0)));
  }
  if (lidar_empty) *lidar_empty = empty;

  Var e_lr = both ? mul_scalar(t, loss_lr(t, d_left_px, d_right_px), inv_d)
                  : t.leaf(Tensor<T>::scalar(T(0)));

  Var e_ds = loss_smooth(t, d_left_px, li);
  if (both) e_ds = add(t, e_ds, loss_smooth(t, d_right_px, ri));
  e_ds = mul_scalar(t, e_ds, inv_d);

  LossTerms terms;
  terms.image = e_image;
  terms.lidar = e_lidar;
  terms.lr = e_lr;
  terms.smooth = e_ds;
  Var total = mul_scalar(t, e_image, static_cast<T>(w.lambda1));
  total = add(t, total, mul_scalar(t, e_lidar, static_cast<T>(w.lambda2)));
  total = add(t, total, mul_scalar(t, e_lr, static_cast<T>(w.lambda3)));
  total = add(t, total, mul_scalar(t, e_ds, static_cast<T>(w.lambda4)));
  terms.total = total;
  return terms;
}

#define STEREOKIT_INSTANTIATE_LOSSES(T)                                                          \
  template Var warp<T>(Tape<T>&, Var, Var, WarpDirection);                                       \
  template Var ssim<T>(Tape<T>&, Var, Var, T, T);                                                \
  template Var loss_image<T>(Tape<T>&, Var, Var, Var, Var, const LossWeights&);                  \
  template Var loss_lidar<T>(Tape<T>&, Var, Var, const DisparityMap&, const DisparityMap&, T,    \
                             bool*);                                                             \
  template Var loss_lr<T>(Tape<T>&, Var, Var);                                                   \
  template Var loss_smooth<T>(Tape<T>&, Var, Var);                                               \
  template LossTerms total_loss<T>(Tape<T>&, Var, Var, Var, Var, const DisparityMap*,            \
                                   const DisparityMap*, const LossWeights&, T, bool*);

STEREOKIT_INSTANTIATE_LOSSES(float)
STEREOKIT_INSTANTIATE_LOSSES(double)

#undef STEREOKIT_INSTANTIATE_LOSSES

}  // namespace stereokit

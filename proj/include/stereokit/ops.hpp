#pragma once

#include <vector>

#include "stereokit/tape.hpp"

namespace stereokit {

namespace debug {
// Test hook: when set, the ELU backward rule is scaled by a wrong factor so
// the finite-difference checker can prove it notices broken rules.
extern bool corrupt_elu_backward;
}  // namespace debug

enum class CostDirection { left_ref, right_ref };

// ---- elementwise ----
template <typename T> Var add(Tape<T>& t, Var a, Var b);
template <typename T> Var sub(Tape<T>& t, Var a, Var b);
template <typename T> Var mul(Tape<T>& t, Var a, Var b);
template <typename T> Var div(Tape<T>& t, Var a, Var b);
template <typename T> Var add_scalar(Tape<T>& t, Var a, T c);
template <typename T> Var mul_scalar(Tape<T>& t, Var a, T c);
template <typename T> Var elu(Tape<T>& t, Var a);
template <typename T> Var sigmoid(Tape<T>& t, Var a);
template <typename T> Var exp_elem(Tape<T>& t, Var a);
template <typename T> Var abs_elem(Tape<T>& t, Var a);

// ---- reductions / structure ----
template <typename T> Var sum_all(Tape<T>& t, Var a);
template <typename T> Var mean_all(Tape<T>& t, Var a);
template <typename T> Var sum_axis(Tape<T>& t, Var a, int axis);
template <typename T> Var reshape(Tape<T>& t, Var a, std::vector<int> shape);
template <typename T> Var permute(Tape<T>& t, Var a, std::vector<int> order);

// Numerically stable softmax along one axis; sums to one along it and is
// invariant to adding a constant along it.
template <typename T> Var softmax(Tape<T>& t, Var a, int axis);

// ---- stencils ----
// Forward differences along width/height; output loses the last column/row.
template <typename T> Var diff_x(Tape<T>& t, Var a);
template <typename T> Var diff_y(Tape<T>& t, Var a);
// 3x3 neighborhood mean per channel, normalized by the in-image neighbor
// count so constant images stay constant at the borders.
template <typename T> Var box_mean3(Tape<T>& t, Var a);

// ---- sampling ----
// Horizontal bilinear gather: out(y,x,c) blends image(y,floor,c) and
// image(y,floor+1,c) at x_coords(y,x). Coordinates clamp to the border
// columns; at integer coordinates the subgradient comes from the cell whose
// right endpoint is the coordinate (the left cell). Differentiable in both
// the image and the coordinates. image is HxWxC or HxW; x_coords is HxW.
template <typename T> Var sample_bilinear_x(Tape<T>& t, Var image, Var x_coords);

// ---- convolution ----
// input HxWxC with kernel kh x kw x Cin x Cout, or DxHxWxC with kernel
// kd x kh x kw x Cin x Cout. SAME zero padding: every output spatial dim is
// ceil(input/stride). Bias has Cout elements and is added per channel.
template <typename T> Var conv(Tape<T>& t, Var input, Var kernel, Var bias, int stride);

// Adjoint of conv under the same geometry. Kernel layout is
// spatial... x Cout x Cin (output channels of this op first). Default target
// spatial dims are input*stride per axis; an explicit target is accepted
// when it satisfies ceil(target/stride) == input dim.
template <typename T> Var conv_transpose(Tape<T>& t, Var input, Var kernel, Var bias, int stride,
                                         std::vector<int> target_dims = {});

// ---- cost volumes ----
// Slice k of the left_ref volume pairs left(y,x) with right(y,x+k); the
// shifted half is zero-filled where x+k walks off the right edge. right_ref
// mirrors with left(y,x-k) and the left edge. Output max_d x H x W x 2F.
template <typename T> Var cost_volume_concat(Tape<T>& t, Var left, Var right, int max_d,
                                             CostDirection dir);
// Same geometry, but stores dot(reference, shifted)/F: max_d x H x W x 1.
template <typename T> Var cost_volume_corr(Tape<T>& t, Var left, Var right, int max_d,
                                           CostDirection dir);

}  // namespace stereokit

#include "stereokit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "stereokit/threading.hpp"

namespace stereokit {

namespace debug {
bool corrupt_elu_backward = false;
}

namespace {

// Convolution geometry, normalized to three spatial axes; 2D ops use a
// dummy leading axis of extent 1. Axis order matches tensor layout
// (D, H, W) with channels last.
struct ConvGeom {
  int sd = 2;
  int in[3] = {1, 1, 1};
  int out[3] = {1, 1, 1};
  int k[3] = {1, 1, 1};
  int pad[3] = {0, 0, 0};
  int stride = 1;
  int cin = 0, cout = 0;
  std::int64_t in_sp = 1, out_sp = 1;
  int taps = 1;

  void finish() {
    in_sp = static_cast<std::int64_t>(in[0]) * in[1] * in[2];
    out_sp = static_cast<std::int64_t>(out[0]) * out[1] * out[2];
    taps = k[0] * k[1] * k[2];
  }
};

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// SAME padding, split like TensorFlow: the leading side gets the smaller
// half when the total is odd.
int same_pad_before(int in, int out, int k, int stride) {
  int total = (out - 1) * stride + k - in;
  if (total < 0) total = 0;
  return total / 2;
}

template <typename T>
void gather_patch(const T* x, const ConvGeom& g, std::int64_t opos, T* patch) {
  const int ow = g.out[2], oh = g.out[1];
  const int d = static_cast<int>(opos / (static_cast<std::int64_t>(oh) * ow));
  const int rem = static_cast<int>(opos % (static_cast<std::int64_t>(oh) * ow));
  const int h = rem / ow, w = rem % ow;
  const int o[3] = {d, h, w};
  int start[3];
  for (int a = 0; a < 3; ++a) start[a] = o[a] * g.stride - g.pad[a];
  const int cin = g.cin;
  for (int a = 0; a < g.k[0]; ++a) {
    const int id = start[0] + a;
    const bool dok = id >= 0 && id < g.in[0];
    for (int b = 0; b < g.k[1]; ++b) {
      const int ih = start[1] + b;
      const bool hok = dok && ih >= 0 && ih < g.in[1];
      for (int c = 0; c < g.k[2]; ++c) {
        const int iw = start[2] + c;
        if (hok && iw >= 0 && iw < g.in[2]) {
          const T* src = x + ((static_cast<std::int64_t>(id) * g.in[1] + ih) * g.in[2] + iw) * cin;
          std::memcpy(patch, src, sizeof(T) * static_cast<std::size_t>(cin));
        } else {
          std::memset(patch, 0, sizeof(T) * static_cast<std::size_t>(cin));
        }
        patch += cin;
      }
    }
  }
}

// y[pos][co] = bias[co] + sum_i patch[pos][i] * kmat[i][co]. Positions are
// processed in blocks of four so each kernel row is reused across the block.
template <typename T>
void conv_forward_core(const T* x, const T* kmat, const T* bias, T* y, const ConvGeom& g) {
  const std::int64_t kk = static_cast<std::int64_t>(g.taps) * g.cin;
  const int cout = g.cout;
  parallel_for(g.out_sp, [&](std::int64_t b0, std::int64_t b1) {
    std::vector<T> patch(static_cast<std::size_t>(4 * kk));
    std::vector<T> acc(static_cast<std::size_t>(4 * cout));
    for (std::int64_t base = b0; base < b1; base += 4) {
      const int nb = static_cast<int>(std::min<std::int64_t>(4, b1 - base));
      for (int j = 0; j < nb; ++j) gather_patch(x, g, base + j, patch.data() + j * kk);
      for (int j = 0; j < nb; ++j) {
        T* a = acc.data() + j * cout;
        if (bias) std::memcpy(a, bias, sizeof(T) * static_cast<std::size_t>(cout));
        else std::memset(a, 0, sizeof(T) * static_cast<std::size_t>(cout));
      }
      if (nb == 4) {
        const T* p0 = patch.data();
        const T* p1 = p0 + kk;
        const T* p2 = p1 + kk;
        const T* p3 = p2 + kk;
        T* a0 = acc.data();
        T* a1 = a0 + cout;
        T* a2 = a1 + cout;
        T* a3 = a2 + cout;
        for (std::int64_t i = 0; i < kk; ++i) {
          const T* kr = kmat + i * cout;
          const T v0 = p0[i], v1 = p1[i], v2 = p2[i], v3 = p3[i];
          for (int co = 0; co < cout; ++co) {
            const T kv = kr[co];
            a0[co] += v0 * kv;
            a1[co] += v1 * kv;
            a2[co] += v2 * kv;
            a3[co] += v3 * kv;
          }
        }
      } else {
        for (int j = 0; j < nb; ++j) {
          const T* p = patch.data() + j * kk;
          T* a = acc.data() + j * cout;
          for (std::int64_t i = 0; i < kk; ++i) {
            const T* kr = kmat + i * cout;
            const T v = p[i];
            for (int co = 0; co < cout; ++co) a[co] += v * kr[co];
          }
        }
      }
      for (int j = 0; j < nb; ++j) {
        std::memcpy(y + (base + j) * cout, acc.data() + j * cout,
                    sizeof(T) * static_cast<std::size_t>(cout));
      }
    }
  });
}

// gx[p][ci] = sum over taps and co of kmat[tap][ci][co] * gy[q][co] where q
// is the output position that reads x[p] through that tap. General-stride
// path; the stride-1 case is routed through conv_forward_core with a
// flipped kernel instead (same math, faster inner loop).
template <typename T>
void conv_backward_data_core(const T* gy, const T* kmat, T* gx, const ConvGeom& g) {
  const int cin = g.cin, cout = g.cout;
  // Transposed kernel [taps][cout][cin] so the inner update runs over a
  // contiguous ci range.
  std::vector<T> kt(static_cast<std::size_t>(g.taps) * cout * cin);
  for (int tap = 0; tap < g.taps; ++tap) {
    for (int ci = 0; ci < cin; ++ci) {
      for (int co = 0; co < cout; ++co) {
        kt[(static_cast<std::size_t>(tap) * cout + co) * cin + ci] =
            kmat[(static_cast<std::size_t>(tap) * cin + ci) * cout + co];
      }
    }
  }
  parallel_for(g.in_sp, [&](std::int64_t b0, std::int64_t b1) {
    for (std::int64_t p = b0; p < b1; ++p) {
      const int pd = static_cast<int>(p / (static_cast<std::int64_t>(g.in[1]) * g.in[2]));
      const int rem = static_cast<int>(p % (static_cast<std::int64_t>(g.in[1]) * g.in[2]));
      const int ph = rem / g.in[2], pw = rem % g.in[2];
      const int pc[3] = {pd, ph, pw};
      T* acc = gx + p * cin;
      std::memset(acc, 0, sizeof(T) * static_cast<std::size_t>(cin));
      for (int a = 0; a < g.k[0]; ++a) {
        const int nd = pc[0] + g.pad[0] - a;
        if (nd % g.stride != 0) continue;
        const int qd = nd / g.stride;
        if (qd < 0 || qd >= g.out[0]) continue;
        for (int b = 0; b < g.k[1]; ++b) {
          const int nh = pc[1] + g.pad[1] - b;
          if (nh % g.stride != 0) continue;
          const int qh = nh / g.stride;
          if (qh < 0 || qh >= g.out[1]) continue;
          for (int c = 0; c < g.k[2]; ++c) {
            const int nw = pc[2] + g.pad[2] - c;
            if (nw % g.stride != 0) continue;
            const int qw = nw / g.stride;
            if (qw < 0 || qw >= g.out[2]) continue;
            const std::int64_t q = (static_cast<std::int64_t>(qd) * g.out[1] + qh) * g.out[2] + qw;
            const T* gyr = gy + q * cout;
            const int tap = (a * g.k[1] + b) * g.k[2] + c;
            const T* ktap = kt.data() + static_cast<std::size_t>(tap) * cout * cin;
            for (int co = 0; co < cout; ++co) {
              const T v = gyr[co];
              const T* kr = ktap + static_cast<std::size_t>(co) * cin;
              for (int ci = 0; ci < cin; ++ci) acc[ci] += v * kr[ci];
            }
          }
        }
      }
    }
  });
}

// gk[tap][ci][co] = sum over output positions of x[i][ci] * gy[o][co].
// Parallel across taps: every tap owns a disjoint slice of gk and walks the
// outputs in a fixed order, so the result is thread-count independent.
template <typename T>
void conv_backward_kernel_core(const T* x, const T* gy, T* gk, const ConvGeom& g) {
  const int cin = g.cin, cout = g.cout;
  parallel_for(
      g.taps,
      [&](std::int64_t t0, std::int64_t t1) {
        for (std::int64_t tap = t0; tap < t1; ++tap) {
          const int a = static_cast<int>(tap) / (g.k[1] * g.k[2]);
          const int b = (static_cast<int>(tap) / g.k[2]) % g.k[1];
          const int c = static_cast<int>(tap) % g.k[2];
          const int off[3] = {a, b, c};
          int lo[3], hi[3];  // inclusive output ranges with the tap in-image
          for (int ax = 0; ax < 3; ++ax) {
            const int shift = off[ax] - g.pad[ax];  // i = o*stride + shift
            lo[ax] = std::max(0, ceil_div(-shift, g.stride));
            hi[ax] = std::min(g.out[ax] - 1, (g.in[ax] - 1 - shift) / g.stride);
            if (shift > g.in[ax] - 1) hi[ax] = -1;
          }
          T* gkt = gk + static_cast<std::int64_t>(tap) * cin * cout;
          for (int od = lo[0]; od <= hi[0]; ++od) {
            const int id = od * g.stride + off[0] - g.pad[0];
            for (int oh = lo[1]; oh <= hi[1]; ++oh) {
              const int ih = oh * g.stride + off[1] - g.pad[1];
              for (int ow = lo[2]; ow <= hi[2]; ++ow) {
                const int iw = ow * g.stride + off[2] - g.pad[2];
                const std::int64_t o = (static_cast<std::int64_t>(od) * g.out[1] + oh) * g.out[2] + ow;
                const std::int64_t i = (static_cast<std::int64_t>(id) * g.in[1] + ih) * g.in[2] + iw;
                const T* xr = x + i * cin;
                const T* gyr = gy + o * cout;
                for (int ci = 0; ci < cin; ++ci) {
                  const T v = xr[ci];
                  T* row = gkt + static_cast<std::int64_t>(ci) * cout;
                  for (int co = 0; co < cout; ++co) row[co] += v * gyr[co];
                }
              }
            }
          }
        }
      },
      /*grain=*/2);
}

// Flips the kernel spatially and swaps its channel axes, producing the
// matrix of the adjoint map in conv_forward_core layout.
template <typename T>
std::vector<T> flip_kernel(const T* kmat, const ConvGeom& g) {
  std::vector<T> flip(static_cast<std::size_t>(g.taps) * g.cin * g.cout);
  for (int a = 0; a < g.k[0]; ++a) {
    for (int b = 0; b < g.k[1]; ++b) {
      for (int c = 0; c < g.k[2]; ++c) {
        const int t = (a * g.k[1] + b) * g.k[2] + c;
        const int tf = ((g.k[0] - 1 - a) * g.k[1] + (g.k[1] - 1 - b)) * g.k[2] + (g.k[2] - 1 - c);
        for (int ci = 0; ci < g.cin; ++ci) {
          for (int co = 0; co < g.cout; ++co) {
            flip[(static_cast<std::size_t>(t) * g.cout + co) * g.cin + ci] =
                kmat[(static_cast<std::size_t>(tf) * g.cin + ci) * g.cout + co];
          }
        }
      }
    }
  }
  return flip;
}

// Applies the adjoint of the convolution described by g to `u` (sized like
// the conv output); the result is sized like the conv input.
template <typename T>
void adjoint_apply(const T* u, const T* kmat, T* out, const ConvGeom& g) {
  if (g.stride == 1) {
    std::vector<T> flip = flip_kernel(kmat, g);
    ConvGeom ag = g;
    std::swap(ag.cin, ag.cout);
    for (int ax = 0; ax < 3; ++ax) {
      ag.in[ax] = g.out[ax];
      ag.out[ax] = g.in[ax];
      // SAME stride-1 padding is symmetric for odd kernels, so the adjoint
      // uses the same per-axis padding.
    }
    ag.finish();
    conv_forward_core(u, flip.data(), static_cast<const T*>(nullptr), out, ag);
  } else {
    conv_backward_data_core(u, kmat, out, g);
  }
}

template <typename T, typename F>
Tensor<T> map_tensor(const Tensor<T>& a, F f) {
  Tensor<T> out(a.shape());
  const T* ap = a.data();
  T* op = out.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) op[i] = f(ap[i]);
  return out;
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
}

struct AxisSplit {
  std::int64_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const std::vector<int>& shape, int axis) {
  if (axis < 0 || axis >= static_cast<int>(shape.size())) {
    throw std::invalid_argument("axis " + std::to_string(axis) + " out of range for " +
                                shape_str(shape));
  }
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[static_cast<std::size_t>(i)];
  s.n = shape[static_cast<std::size_t>(axis)];
  for (int i = axis + 1; i < static_cast<int>(shape.size()); ++i) {
    s.inner *= shape[static_cast<std::size_t>(i)];
  }
  return s;
}

// Interprets HxW or HxWxC as rows x width x channels.
struct ImageDims {
  int h = 0, w = 0, c = 1;
  bool has_channels = false;
};

ImageDims image_dims(const std::vector<int>& shape, const char* op) {
  ImageDims d;
  if (shape.size() == 2) {
    d.h = shape[0];
    d.w = shape[1];
  } else if (shape.size() == 3) {
    d.h = shape[0];
    d.w = shape[1];
    d.c = shape[2];
    d.has_channels = true;
  } else {
    throw std::invalid_argument(std::string(op) + ": expected HxW or HxWxC, got " +
                                shape_str(shape));
  }
  return d;
}

}  // namespace

// ---------------- elementwise ----------------

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  const Tensor<T>&av = t.value(a), &bv = t.value(b);
  check_same_shape(av, bv, "add");
  Tensor<T> out(av.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& tp, const Tensor<T>& gy) {
    tp.accumulate(a, gy);
    tp.accumulate(b, gy);
  });
}

template <typename T>
Var sub(Tape<T>& t, Var a, Var b) {
  const Tensor<T>&av = t.value(a), &bv = t.value(b);
  check_same_shape(av, bv, "sub");
  Tensor<T> out(av.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& tp, const Tensor<T>& gy) {
    tp.accumulate(a, gy);
    Tensor<T> gb(gy.shape());
    for (std::int64_t i = 0; i < gy.size(); ++i) gb[i] = -gy[i];
    tp.accumulate(b, gb);
  });
}

template <typename T>
Var mul(Tape<T>& t, Var a, Var b) {
  const Tensor<T>&av = t.value(a), &bv = t.value(b);
  check_same_shape(av, bv, "mul");
  Tensor<T> out(av.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& tp, const Tensor<T>& gy) {
    const Tensor<T>&avv = tp.value(a), &bvv = tp.value(b);
    Tensor<T> ga(gy.shape()), gb(gy.shape());
    for (std::int64_t i = 0; i < gy.size(); ++i) {
      ga[i] = gy[i] * bvv[i];
      gb[i] = gy[i] * avv[i];
    }
    tp.accumulate(a, ga);
    tp.accumulate(b, gb);
  });
}

template <typename T>
Var div(Tape<T>& t, Var a, Var b) {
  const Tensor<T>&av = t.value(a), &bv = t.value(b);
  check_same_shape(av, bv, "div");
  Tensor<T> out(av.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& tp, const Tensor<T>& gy) {
    const Tensor<T>&avv = tp.value(a), &bvv = tp.value(b);
    Tensor<T> ga(gy.shape()), gb(gy.shape());
    for (std::int64_t i = 0; i < gy.size(); ++i) {
      ga[i] = gy[i] / bvv[i];
      gb[i] = -gy[i] * avv[i] / (bvv[i] * bvv[i]);
    }
    tp.accumulate(a, ga);
    tp.accumulate(b, gb);
  });
}

template <typename T>
Var add_scalar(Tape<T>& t, Var a, T c) {
  Tensor<T> out = map_tensor(t.value(a), [c](T x) { return x + c; });
  return t.record(std::move(out), {a},
                  [a](Tape<T>& tp, const Tensor<T>& gy) { tp.accumulate(a, gy); });
}

template <typename T>
Var mul_scalar(Tape<T>& t, Var a, T c) {
  Tensor<T> out = map_tensor(t.value(a), [c](T x) { return x * c; });
  return t.record(std::move(out), {a}, [a, c](Tape<T>& tp, const Tensor<T>& gy) {
    Tensor<T> ga(gy.shape());
    for (std::int64_t i = 0; i < gy.size(); ++i) ga[i] = gy[i] * c;
    tp.accumulate(a, ga);
  });
}

template <typename T>
Var elu(Tape<T>& t, Var a) {
  Tensor<T> out = map_tensor(t.value(a), [](T x) { return x > T(0) ? x : std::expm1(x); });
  return t.record(std::move(out), {a}, [a](Tape<T>& tp, const Tensor<T>& gy) {
    const Tensor<T>& x = tp.value(a);
    Tensor<T> ga(gy.shape());
    const T fault = debug::corrupt_elu_backward ? T(1.02) : T(1);
    for (std::int64_t i = 0; i < gy.size(); ++i) {
      const T d = x[i] > T(0) ? T(1) : std::exp(x[i]);
      ga[i] = gy[i] * d * fault;
    }
    tp.accumulate(a, ga);
  });
}

template <typename T>
Var sigmoid(Tape<T>& t, Var a) {
  auto sig = [](T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
  };
  Tensor<T> out = map_tensor(t.value(a), sig);
  Tensor<T> saved = out;  // shares the buffer; tensors are immutable
  return t.record(std::move(out), {a}, [a, saved](Tape<T>& tp, const Tensor<T>& gy) {
    Tensor<T> ga(gy.shape());
    for (std::int64_t i = 0; i < gy.size(); ++i) ga[i] = gy[i] * saved[i] * (T(1) - saved[i]);
    tp.accumulate(a, ga);
  });
}

template <typename T>
Var exp_elem(Tape<T>& t, Var a) {
  Tensor<T> out = map_tensor(t.value(a), [](T x) { return std::exp(x); });
  Tensor<T> saved = out;
  return t.record(std::move(out), {a}, [a, saved](Tape<T>& tp, const Tensor<T>& gy) {
    Tensor<T> ga(gy.shape());
    for (std::int64_t i = 0; i < gy.size(); ++i) ga[i] = gy[i] * saved[i];
    tp.accumulate(a, ga);
  });
}

template <typename T>
Var abs_elem(Tape<T>& t, Var a) {
  Tensor<T> out = map_tensor(t.value(a), [](T x) { return std::abs(x); });
  return t.record(std::move(out), {a}, [a](Tape<T>& tp, const Tensor<T>& gy) {
    const Tensor<T>& x = tp.value(a);
    Tensor<T> ga(gy.shape());
    for (std::int64_t i = 0; i < gy.size(); ++i) {
      const T s = x[i] > T(0) ? T(1) : (x[i] < T(0) ? T(-1) : T(0));
      ga[i] = gy[i] * s;
    }
    tp.accumulate(a, ga);
  });
}

// ---------------- reductions / structure ----------------

template <typename T>
Var sum_all(Tape<T>& t, Var a) {
  const Tensor<T>& av = t.value(a);
  T s = 0;
  for (std::int64_t i = 0; i < av.size(); ++i) s += av[i];
  return t.record(Tensor<T>::scalar(s), {a}, [a](Tape<T>& tp, const Tensor<T>& gy) {
    tp.accumulate(a, Tensor<T>::full(tp.value(a).shape(), gy[0]));
  });
}

template <typename T>
Var mean_all(Tape<T>& t, Var a) {
  const Tensor<T>& av = t.value(a);
  T s = 0;
  for (std::int64_t i = 0; i < av.size(); ++i) s += av[i];
  const T inv = T(1) / static_cast<T>(av.size());
  return t.record(Tensor<T>::scalar(s * inv), {a}, [a, inv](Tape<T>& tp, const Tensor<T>& gy) {
    tp.accumulate(a, Tensor<T>::full(tp.value(a).shape(), gy[0] * inv));
  });
}

template <typename T>
Var sum_axis(Tape<T>& t, Var a, int axis) {
  const Tensor<T>& av = t.value(a);
  const AxisSplit s = split_axis(av.shape(), axis);
  std::vector<int> out_shape = av.shape();
  out_shape.erase(out_shape.begin() + axis);
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor<T> out(out_shape);
  for (std::int64_t o = 0; o < s.outer; ++o) {
    for (std::int64_t j = 0; j < s.n; ++j) {
      const T* src = av.data() + (o * s.n + j) * s.inner;
      T* dst = out.data() + o * s.inner;
      for (std::int64_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  return t.record(std::move(out), {a}, [a, s](Tape<T>& tp, const Tensor<T>& gy) {
    Tensor<T> ga(tp.value(a).shape());
    for (std::int64_t o = 0; o < s.outer; ++o) {
      for (std::int64_t j = 0; j < s.n; ++j) {
        T* dst = ga.data() + (o * s.n + j) * s.inner;
        const T* src = gy.data() + o * s.inner;
        for (std::int64_t i = 0; i < s.inner; ++i) dst[i] = src[i];
      }
    }
    tp.accumulate(a, ga);
  });
}

template <typename T>
Var reshape(Tape<T>& t, Var a, std::vector<int> shape) {
  Tensor<T> out = t.value(a).reshaped(std::move(shape));
  return t.record(std::move(out), {a}, [a](Tape<T>& tp, const Tensor<T>& gy) {
    tp.accumulate(a, gy.reshaped(tp.value(a).shape()));
  });
}

namespace {

template <typename T>
Tensor<T> permute_tensor(const Tensor<T>& a, const std::vector<int>& order) {
  const int r = a.rank();
  if (static_cast<int>(order.size()) != r) {
    throw std::invalid_argument("permute: order rank mismatch for " + shape_str(a.shape()));
  }
  std::vector<int> seen(static_cast<std::size_t>(r), 0);
  for (int o : order) {
    if (o < 0 || o >= r || seen[static_cast<std::size_t>(o)]++) {
      throw std::invalid_argument("permute: invalid axis order");
    }
  }
  std::vector<int> out_shape(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) out_shape[static_cast<std::size_t>(i)] = a.dim(order[static_cast<std::size_t>(i)]);
  std::vector<std::int64_t> in_strides(static_cast<std::size_t>(r), 1);
  for (int i = r - 2; i >= 0; --i) {
    in_strides[static_cast<std::size_t>(i)] = in_strides[static_cast<std::size_t>(i + 1)] * a.dim(i + 1);
  }
  Tensor<T> out(out_shape);
  std::vector<std::int64_t> strides(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) strides[static_cast<std::size_t>(i)] = in_strides[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  const std::int64_t n = out.size();
  parallel_for(n, [&](std::int64_t b0, std::int64_t b1) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(r));
    for (std::int64_t p = b0; p < b1; ++p) {
      std::int64_t rem = p, src = 0;
      for (int i = r - 1; i >= 0; --i) {
        const std::int64_t d = out_shape[static_cast<std::size_t>(i)];
        idx[static_cast<std::size_t>(i)] = rem % d;
        rem /= d;
        src += idx[static_cast<std::size_t>(i)] * strides[static_cast<std::size_t>(i)];
      }
      out[p] = a[src];
    }
  });
  return out;
}

}  // namespace

template <typename T>
Var permute(Tape<T>& t, Var a, std::vector<int> order) {
  Tensor<T> out = permute_tensor(t.value(a), order);
  std::vector<int> inv(order.size());
  for (int i = 0; i < static_cast<int>(order.size()); ++i) inv[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
  return t.record(std::move(out), {a}, [a, inv](Tape<T>& tp, const Tensor<T>& gy) {
    tp.accumulate(a, permute_tensor(gy, inv));
  });
}

template <typename T>
Var softmax(Tape<T>& t, Var a, int axis) {
  const Tensor<T>& av = t.value(a);
  const AxisSplit s = split_axis(av.shape(), axis);
  Tensor<T> out(av.shape());
  for (std::int64_t o = 0; o < s.outer; ++o) {
    for (std::int64_t i = 0; i < s.inner; ++i) {
      const std::int64_t base = o * s.n * s.inner + i;
      T mx = av[base];
      for (std::int64_t j = 1; j < s.n; ++j) mx = std::max(mx, av[base + j * s.inner]);
      T denom = 0;
      for (std::int64_t j = 0; j < s.n; ++j) {
        const T e = std::exp(av[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        denom += e;
      }
      const T inv = T(1) / denom;
      for (std::int64_t j = 0; j < s.n; ++j) out[base + j * s.inner] *= inv;
    }
  }
  Tensor<T> saved = out;
  return t.record(std::move(out), {a}, [a, s, saved](Tape<T>& tp, const Tensor<T>& gy) {
    Tensor<T> ga(gy.shape());
    for (std::int64_t o = 0; o < s.outer; ++o) {
      for (std::int64_t i = 0; i < s.inner; ++i) {
        const std::int64_t base = o * s.n * s.inner + i;
        T dot = 0;
        for (std::int64_t j = 0; j < s.n; ++j) {
          dot += gy[base + j * s.inner] * saved[base + j * s.inner];
        }
        for (std::int64_t j = 0; j < s.n; ++j) {
          const std::int64_t p = base + j * s.inner;
          ga[p] = saved[p] * (gy[p] - dot);
        }
      }
    }
    tp.accumulate(a, ga);
  });
}

// ---------------- stencils ----------------

template <typename T>
Var diff_x(Tape<T>& t, Var a) {
  const Tensor<T>& av = t.value(a);
  const ImageDims d = image_dims(av.shape(), "diff_x");
  if (d.w < 2) throw std::invalid_argument("diff_x: width must be >= 2");
  std::vector<int> out_shape = d.has_channels ? std::vector<int>{d.h, d.w - 1, d.c}
                                              : std::vector<int>{d.h, d.w - 1};
  Tensor<T> out(out_shape);
  for (int y = 0; y < d.h; ++y) {
    for (int x = 0; x + 1 < d.w; ++x) {
      for (int c = 0; c < d.c; ++c) {
        out[(static_cast<std::int64_t>(y) * (d.w - 1) + x) * d.c + c] =
            av[(static_cast<std::int64_t>(y) * d.w + x + 1) * d.c + c] -
            av[(static_cast<std::int64_t>(y) * d.w + x) * d.c + c];
      }
    }
  }
  return t.record(std::move(out), {a}, [a, d](Tape<T>& tp, const Tensor<T>& gy) {
    Tensor<T> ga(tp.value(a).shape());
    for (int y = 0; y < d.h; ++y) {
      for (int x = 0; x < d.w; ++x) {
        for (int c = 0; c < d.c; ++c) {
          T g = 0;
          if (x >= 1) g += gy[(static_cast<std::int64_t>(y) * (d.w - 1) + x - 1) * d.c + c];
          if (x <= d.w - 2) g -= gy[(static_cast<std::int64_t>(y) * (d.w - 1) + x) * d.c + c];
          ga[(static_cast<std::int64_t>(y) * d.w + x) * d.c + c] = g;
        }
      }
    }
    tp.accumulate(a, ga);
  });
}

template <typename T>
Var diff_y(Tape<T>& t, Var a) {
  const Tensor<T>& av = t.value(a);
  const ImageDims d = image_dims(av.shape(), "diff_y");
  if (d.h < 2) throw std::invalid_argument("diff_y: height must be >= 2");
  std::vector<int> out_shape = d.has_channels ? std::vector<int>{d.h - 1, d.w, d.c}
                                              : std::vector<int>{d.h - 1, d.w};
  Tensor<T> out(out_shape);
  for (int y = 0; y + 1 < d.h; ++y) {
    for (int x = 0; x < d.w; ++x) {
      for (int c = 0; c < d.c; ++c) {
        out[(static_cast<std::int64_t>(y) * d.w + x) * d.c + c] =
            av[(static_cast<std::int64_t>(y + 1) * d.w + x) * d.c + c] -
            av[(static_cast<std::int64_t>(y) * d.w + x) * d.c + c];
      }
    }
  }
  return t.record(std::move(out), {a}, [a, d](Tape<T>& tp, const Tensor<T>& gy) {
    Tensor<T> ga(tp.value(a).shape());
    for (int y = 0; y < d.h; ++y) {
      for (int x = 0; x < d.w; ++x) {
        for (int c = 0; c < d.c; ++c) {
          T g = 0;
          if (y >= 1) g += gy[(static_cast<std::int64_t>(y - 1) * d.w + x) * d.c + c];
          if (y <= d.h - 2) g -= gy[(static_cast<std::int64_t>(y) * d.w + x) * d.c + c];
          ga[(static_cast<std::int64_t>(y) * d.w + x) * d.c + c] = g;
        }
      }
    }
    tp.accumulate(a, ga);
  });
}

namespace {

template <typename T>
void box_mean3_apply(const Tensor<T>& src, Tensor<T>& dst, const ImageDims& d, bool adjoint) {
  for (int y = 0; y < d.h; ++y) {
    const int y0 = std::max(0, y - 1), y1 = std::min(d.h - 1, y + 1);
    for (int x = 0; x < d.w; ++x) {
      const int x0 = std::max(0, x - 1), x1 = std::min(d.w - 1, x + 1);
      for (int c = 0; c < d.c; ++c) {
        T s = 0;
        for (int yy = y0; yy <= y1; ++yy) {
          for (int xx = x0; xx <= x1; ++xx) {
            const std::int64_t q = (static_cast<std::int64_t>(yy) * d.w + xx) * d.c + c;
            if (!adjoint) {
              s += src[q];
            } else {
              // adjoint: each neighbor's window mean contributes 1/count(p)
              const int cy0 = std::max(0, yy - 1), cy1 = std::min(d.h - 1, yy + 1);
              const int cx0 = std::max(0, xx - 1), cx1 = std::min(d.w - 1, xx + 1);
              const T cnt = static_cast<T>((cy1 - cy0 + 1) * (cx1 - cx0 + 1));
              s += src[q] / cnt;
            }
          }
        }
        if (!adjoint) {
          const T cnt = static_cast<T>((y1 - y0 + 1) * (x1 - x0 + 1));
          s /= cnt;
        }
        dst[(static_cast<std::int64_t>(y) * d.w + x) * d.c + c] = s;
      }
    }
  }
}

}  // namespace

template <typename T>
Var box_mean3(Tape<T>& t, Var a) {
  const Tensor<T>& av = t.value(a);
  const ImageDims d = image_dims(av.shape(), "box_mean3");
  Tensor<T> out(av.shape());
  box_mean3_apply(av, out, d, false);
  return t.record(std::move(out), {a}, [a, d](Tape<T>& tp, const Tensor<T>& gy) {
    Tensor<T> ga(tp.value(a).shape());
    box_mean3_apply(gy, ga, d, true);
    tp.accumulate(a, ga);
  });
}

// ---------------- sampling ----------------

template <typename T>
Var sample_bilinear_x(Tape<T>& t, Var image, Var x_coords) {
  const Tensor<T>& img = t.value(image);
  const Tensor<T>& xc = t.value(x_coords);
  const ImageDims d = image_dims(img.shape(), "sample_bilinear_x");
  if (xc.rank() != 2 || xc.dim(0) != d.h || xc.dim(1) != d.w) {
    throw std::invalid_argument("sample_bilinear_x: coords " + shape_str(xc.shape()) +
                                " do not match image " + shape_str(img.shape()));
  }
  const int w = d.w, c = d.c;
  // Cell choice: i = ceil(q)-1 so integer coordinates take the cell on
  // their left; clamped so i and i+1 stay in-image.
  auto cell = [w](T q, int& i, T& f) {
    T qc = std::min(std::max(q, T(0)), T(w - 1));
    int ii = static_cast<int>(std::ceil(static_cast<double>(qc))) - 1;
    if (ii < 0) ii = 0;
    if (ii > w - 2) ii = w - 2;
    i = ii;
    f = qc - static_cast<T>(ii);
  };
  Tensor<T> out(img.shape());
  if (w == 1) {
    out = img.clone();
  } else {
    parallel_for(d.h, [&](std::int64_t y0, std::int64_t y1) {
      for (std::int64_t y = y0; y < y1; ++y) {
        for (int x = 0; x < w; ++x) {
          int i;
          T f;
          cell(xc[y * w + x], i, f);
          const T* left = img.data() + (y * w + i) * c;
          T* dst = out.data() + (y * w + x) * c;
          for (int ch = 0; ch < c; ++ch) dst[ch] = (T(1) - f) * left[ch] + f * left[c + ch];
        }
      }
    });
  }
  return t.record(std::move(out), {image, x_coords},
                  [image, x_coords, d, cell](Tape<T>& tp, const Tensor<T>& gy) {
                    const Tensor<T>& img2 = tp.value(image);
                    const Tensor<T>& xc2 = tp.value(x_coords);
                    const int w = d.w, c = d.c;
                    Tensor<T> gimg(img2.shape());
                    Tensor<T> gxc(xc2.shape());
                    if (w == 1) {
                      tp.accumulate(image, gy);
                      tp.accumulate(x_coords, gxc);
                      return;
                    }
                    // Image scatter stays within one row, so rows are
                    // independent.
                    parallel_for(d.h, [&](std::int64_t y0, std::int64_t y1) {
                      for (std::int64_t y = y0; y < y1; ++y) {
                        for (int x = 0; x < w; ++x) {
                          const T q = xc2[y * w + x];
                          int i;
                          T f;
                          cell(q, i, f);
                          const T* g = gy.data() + (y * w + x) * c;
                          T* gl = gimg.data() + (y * w + i) * c;
                          const T* il = img2.data() + (y * w + i) * c;
                          T slope_dot = 0;
                          for (int ch = 0; ch < c; ++ch) {
                            gl[ch] += (T(1) - f) * g[ch];
                            gl[c + ch] += f * g[ch];
                            slope_dot += g[ch] * (il[c + ch] - il[ch]);
                          }
                          // Clamped coordinates have zero slope.
                          const bool inside = q >= T(0) && q <= T(w - 1);
                          gxc[y * w + x] = inside ? slope_dot : T(0);
                        }
                      }
                    });
                    tp.accumulate(image, gimg);
                    tp.accumulate(x_coords, gxc);
                  });
}

// ---------------- convolution ----------------

namespace {

template <typename T>
ConvGeom conv_geom(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                   int stride, bool transpose, const std::vector<int>& target) {
  ConvGeom g;
  const int ir = input.rank();
  const int kr = kernel.rank();
  if (!((ir == 3 && kr == 4) || (ir == 4 && kr == 5))) {
    throw std::invalid_argument("conv: input " + shape_str(input.shape()) + " with kernel " +
                                shape_str(kernel.shape()) +
                                " (want HxWxC with khxkwxCinxCout or DxHxWxC with "
                                "kdxkhxkwxCinxCout)");
  }
  g.sd = ir - 1;  // spatial dims; channels take the last axis
  const int off = 3 - g.sd;  // leading dummy axes
  for (int a = 0; a < g.sd; ++a) {
    g.k[off + a] = kernel.dim(a);
    if (g.k[off + a] % 2 == 0) {
      throw std::invalid_argument("conv: kernel spatial dims must be odd, got " +
                                  shape_str(kernel.shape()));
    }
  }
  if (stride < 1 || (transpose && stride > 2)) {
    throw std::invalid_argument("conv: unsupported stride " + std::to_string(stride));
  }
  const int kcin = kernel.dim(g.sd);
  const int kcout = kernel.dim(g.sd + 1);
  const int in_ch = input.dim(ir - 1);
  if (!transpose) {
    if (kcin != in_ch) {
      throw std::invalid_argument("conv: kernel expects " + std::to_string(kcin) +
                                  " input channels, input has " + std::to_string(in_ch) +
                                  " (input " + shape_str(input.shape()) + ", kernel " +
                                  shape_str(kernel.shape()) + ")");
    }
    g.cin = kcin;
    g.cout = kcout;
    for (int a = 0; a < g.sd; ++a) {
      g.in[off + a] = input.dim(a);
      g.out[off + a] = ceil_div(g.in[off + a], stride);
    }
  } else {
    // Kernel layout spatial... x Cout x Cin for the transpose op; the
    // geometry below describes the underlying forward conv (x side = the
    // transpose output).
    if (kcout != in_ch) {
      throw std::invalid_argument("conv_transpose: kernel expects " + std::to_string(kcout) +
                                  " input channels, input has " + std::to_string(in_ch) +
                                  " (input " + shape_str(input.shape()) + ", kernel " +
                                  shape_str(kernel.shape()) + ")");
    }
    g.cin = kcin;   // transpose output channels
    g.cout = kcout; // transpose input channels
    for (int a = 0; a < g.sd; ++a) {
      const int tgt = target.empty() ? input.dim(a) * stride : target[static_cast<std::size_t>(a)];
      if (ceil_div(tgt, stride) != input.dim(a)) {
        throw std::invalid_argument(
            "conv_transpose: requested output dim " + std::to_string(tgt) + " on axis " +
            std::to_string(a) + " is incompatible with stride " + std::to_string(stride) +
            " and input " + shape_str(input.shape()));
      }
      g.in[off + a] = tgt;
      g.out[off + a] = input.dim(a);
    }
  }
  g.stride = stride;
  for (int a = 0; a < 3; ++a) g.pad[a] = same_pad_before(g.in[a], g.out[a], g.k[a], stride);
  g.finish();
  const int want_bias = transpose ? g.cin : g.cout;
  if (bias.rank() != 1 || bias.dim(0) != want_bias) {
    throw std::invalid_argument("conv: bias " + shape_str(bias.shape()) + " does not match " +
                                std::to_string(want_bias) + " output channels");
  }
  return g;
}

template <typename T>
Tensor<T> bias_grad(const Tensor<T>& gy, int channels) {
  Tensor<T> gb({channels});
  const std::int64_t n = gy.size() / channels;
  for (std::int64_t p = 0; p < n; ++p) {
    const T* row = gy.data() + p * channels;
    for (int c = 0; c < channels; ++c) gb[c] += row[c];
  }
  return gb;
}

std::vector<int> spatial_shape(const ConvGeom& g, const int* dims, int channels) {
  std::vector<int> s;
  const int off = 3 - g.sd;
  for (int a = 0; a < g.sd; ++a) s.push_back(dims[off + a]);
  s.push_back(channels);
  return s;
}

}  // namespace

template <typename T>
Var conv(Tape<T>& t, Var input, Var kernel, Var bias, int stride) {
  const Tensor<T>& x = t.value(input);
  const Tensor<T>& k = t.value(kernel);
  const Tensor<T>& b = t.value(bias);
  const ConvGeom g = conv_geom(x, k, b, stride, false, {});
  Tensor<T> y(spatial_shape(g, g.out, g.cout));
  conv_forward_core(x.data(), k.data(), b.data(), y.data(), g);
  return t.record(std::move(y), {input, kernel, bias},
                  [input, kernel, bias, g](Tape<T>& tp, const Tensor<T>& gy) {
                    const Tensor<T>& xv = tp.value(input);
                    const Tensor<T>& kv = tp.value(kernel);
                    Tensor<T> gx(xv.shape());
                    adjoint_apply(gy.data(), kv.data(), gx.data(), g);
                    tp.accumulate(input, gx);
                    Tensor<T> gk(kv.shape());
                    conv_backward_kernel_core(xv.data(), gy.data(), gk.data(), g);
                    tp.accumulate(kernel, gk);
                    tp.accumulate(bias, bias_grad(gy, g.cout));
                  });
}

template <typename T>
Var conv_transpose(Tape<T>& t, Var input, Var kernel, Var bias, int stride,
                   std::vector<int> target_dims) {
  const Tensor<T>& u = t.value(input);
  const Tensor<T>& k = t.value(kernel);
  const Tensor<T>& b = t.value(bias);
  if (!target_dims.empty() && static_cast<int>(target_dims.size()) != u.rank() - 1) {
    throw std::invalid_argument("conv_transpose: target dims rank mismatch");
  }
  const ConvGeom g = conv_geom(u, k, b, stride, true, target_dims);
  Tensor<T> v(spatial_shape(g, g.in, g.cin));
  adjoint_apply(u.data(), k.data(), v.data(), g);
  // bias per transpose-output channel
  {
    T* vp = v.data();
    const T* bp = b.data();
    for (std::int64_t p = 0; p < g.in_sp; ++p) {
      for (int c = 0; c < g.cin; ++c) vp[p * g.cin + c] += bp[c];
    }
  }
  return t.record(std::move(v), {input, kernel, bias},
                  [input, kernel, bias, g](Tape<T>& tp, const Tensor<T>& gv) {
                    const Tensor<T>& uv = tp.value(input);
                    const Tensor<T>& kv = tp.value(kernel);
                    Tensor<T> gu(uv.shape());
                    conv_forward_core(gv.data(), kv.data(), static_cast<const T*>(nullptr),
                                      gu.data(), g);
                    tp.accumulate(input, gu);
                    Tensor<T> gk(kv.shape());
                    conv_backward_kernel_core(gv.data(), uv.data(), gk.data(), g);
                    tp.accumulate(kernel, gk);
                    tp.accumulate(bias, bias_grad(gv, g.cin));
                  });
}

// ---------------- cost volumes ----------------

namespace {

struct VolDims {
  int h = 0, w = 0, f = 0;
};

template <typename T>
VolDims volume_dims(const Tensor<T>& left, const Tensor<T>& right, int max_d, const char* op) {
  if (left.rank() != 3 || right.rank() != 3) {
    throw std::invalid_argument(std::string(op) + ": features must be HxWxF, got " +
                                shape_str(left.shape()) + " and " + shape_str(right.shape()));
  }
  if (!left.same_shape(right)) {
    throw std::invalid_argument(std::string(op) + ": feature shape mismatch " +
                                shape_str(left.shape()) + " vs " + shape_str(right.shape()));
  }
  VolDims d{left.dim(0), left.dim(1), left.dim(2)};
  if (max_d < 1 || max_d > d.w) {
    throw std::invalid_argument(std::string(op) + ": max_d " + std::to_string(max_d) +
                                " exceeds feature width " + std::to_string(d.w));
  }
  return d;
}

}  // namespace

template <typename T>
Var cost_volume_concat(Tape<T>& t, Var left, Var right, int max_d, CostDirection dir) {
  const Tensor<T>& lv = t.value(left);
  const Tensor<T>& rv = t.value(right);
  const VolDims d = volume_dims(lv, rv, max_d, "cost_volume_concat");
  const bool lref = dir == CostDirection::left_ref;
  const Tensor<T>& ref = lref ? lv : rv;
  const Tensor<T>& oth = lref ? rv : lv;
  const int shift_sign = lref ? +1 : -1;
  Tensor<T> out({max_d, d.h, d.w, 2 * d.f});
  parallel_for(static_cast<std::int64_t>(max_d) * d.h, [&](std::int64_t b0, std::int64_t b1) {
    for (std::int64_t ky = b0; ky < b1; ++ky) {
      const int k = static_cast<int>(ky / d.h);
      const int y = static_cast<int>(ky % d.h);
      for (int x = 0; x < d.w; ++x) {
        T* dst = out.data() + ((ky * d.w) + x) * 2 * d.f;
        const T* r = ref.data() + (static_cast<std::int64_t>(y) * d.w + x) * d.f;
        std::memcpy(dst, r, sizeof(T) * static_cast<std::size_t>(d.f));
        const int xs = x + shift_sign * k;
        if (xs >= 0 && xs < d.w) {
          const T* o = oth.data() + (static_cast<std::int64_t>(y) * d.w + xs) * d.f;
          std::memcpy(dst + d.f, o, sizeof(T) * static_cast<std::size_t>(d.f));
        } else {
          std::memset(dst + d.f, 0, sizeof(T) * static_cast<std::size_t>(d.f));
        }
      }
    }
  });
  return t.record(
      std::move(out), {left, right},
      [left, right, d, max_d, lref, shift_sign](Tape<T>& tp, const Tensor<T>& gy) {
        Tensor<T> gl(tp.value(left).shape());
        Tensor<T> gr(tp.value(right).shape());
        Tensor<T>& gref = lref ? gl : gr;
        Tensor<T>& goth = lref ? gr : gl;
        // gather form: both sides accumulate over k for a fixed (y,x)
        parallel_for(d.h, [&](std::int64_t y0, std::int64_t y1) {
          for (std::int64_t y = y0; y < y1; ++y) {
            for (int x = 0; x < d.w; ++x) {
              T* gre = gref.data() + (y * d.w + x) * d.f;
              T* got = goth.data() + (y * d.w + x) * d.f;
              for (int k = 0; k < max_d; ++k) {
                const T* g = gy.data() + (((static_cast<std::int64_t>(k) * d.h + y) * d.w) + x) * 2 * d.f;
                for (int c = 0; c < d.f; ++c) gre[c] += g[c];
                // other half: this (y,x) was read by reference position
                // x - shift_sign*k in slice k
                const int xr = x - shift_sign * k;
                if (xr >= 0 && xr < d.w) {
                  const T* g2 =
                      gy.data() + (((static_cast<std::int64_t>(k) * d.h + y) * d.w) + xr) * 2 * d.f + d.f;
                  for (int c = 0; c < d.f; ++c) got[c] += g2[c];
                }
              }
            }
          }
        });
        tp.accumulate(left, gl);
        tp.accumulate(right, gr);
      });
}

template <typename T>
Var cost_volume_corr(Tape<T>& t, Var left, Var right, int max_d, CostDirection dir) {
  const Tensor<T>& lv = t.value(left);
  const Tensor<T>& rv = t.value(right);
  const VolDims d = volume_dims(lv, rv, max_d, "cost_volume_corr");
  const bool lref = dir == CostDirection::left_ref;
  const Tensor<T>& ref = lref ? lv : rv;
  const Tensor<T>& oth = lref ? rv : lv;
  const int shift_sign = lref ? +1 : -1;
  const T inv_f = T(1) / static_cast<T>(d.f);
  Tensor<T> out({max_d, d.h, d.w, 1});
  parallel_for(static_cast<std::int64_t>(max_d) * d.h, [&](std::int64_t b0, std::int64_t b1) {
    for (std::int64_t ky = b0; ky < b1; ++ky) {
      const int k = static_cast<int>(ky / d.h);
      const int y = static_cast<int>(ky % d.h);
      for (int x = 0; x < d.w; ++x) {
        const int xs = x + shift_sign * k;
        T v = 0;
        if (xs >= 0 && xs < d.w) {
          const T* r = ref.data() + (static_cast<std::int64_t>(y) * d.w + x) * d.f;
          const T* o = oth.data() + (static_cast<std::int64_t>(y) * d.w + xs) * d.f;
          for (int c = 0; c < d.f; ++c) v += r[c] * o[c];
          v *= inv_f;
        }
        out[ky * d.w + x] = v;
      }
    }
  });
  return t.record(
      std::move(out), {left, right},
      [left, right, d, max_d, lref, shift_sign, inv_f](Tape<T>& tp, const Tensor<T>& gy) {
        const Tensor<T>& lvv = tp.value(left);
        const Tensor<T>& rvv = tp.value(right);
        const Tensor<T>& ref = lref ? lvv : rvv;
        const Tensor<T>& oth = lref ? rvv : lvv;
        Tensor<T> gl(lvv.shape());
        Tensor<T> gr(rvv.shape());
        Tensor<T>& gref = lref ? gl : gr;
        Tensor<T>& goth = lref ? gr : gl;
        parallel_for(d.h, [&](std::int64_t y0, std::int64_t y1) {
          for (std::int64_t y = y0; y < y1; ++y) {
            for (int x = 0; x < d.w; ++x) {
              T* gre = gref.data() + (y * d.w + x) * d.f;
              T* got = goth.data() + (y * d.w + x) * d.f;
              for (int k = 0; k < max_d; ++k) {
                const std::int64_t slice = (static_cast<std::int64_t>(k) * d.h + y) * d.w;
                const int xs = x + shift_sign * k;
                if (xs >= 0 && xs < d.w) {
                  const T g = gy[slice + x] * inv_f;
                  const T* o = oth.data() + (y * d.w + xs) * d.f;
                  for (int c = 0; c < d.f; ++c) gre[c] += g * o[c];
                }
                const int xr = x - shift_sign * k;
                if (xr >= 0 && xr < d.w) {
                  const T g = gy[slice + xr] * inv_f;
                  const T* r = ref.data() + (y * d.w + xr) * d.f;
                  for (int c = 0; c < d.f; ++c) got[c] += g * r[c];
                }
              }
            }
          }
        });
        tp.accumulate(left, gl);
        tp.accumulate(right, gr);
      });
}

// ---------------- instantiations ----------------

#define STEREOKIT_INSTANTIATE_OPS(T)                                                       \
  template Var add<T>(Tape<T>&, Var, Var);                                                 \
  template Var sub<T>(Tape<T>&, Var, Var);                                                 \
  template Var mul<T>(Tape<T>&, Var, Var);                                                 \
  template Var div<T>(Tape<T>&, Var, Var);                                                 \
  template Var add_scalar<T>(Tape<T>&, Var, T);                                            \
  template Var mul_scalar<T>(Tape<T>&, Var, T);                                            \
  template Var elu<T>(Tape<T>&, Var);                                                      \
  template Var sigmoid<T>(Tape<T>&, Var);                                                  \
  template Var exp_elem<T>(Tape<T>&, Var);                                                 \
  template Var abs_elem<T>(Tape<T>&, Var);                                                 \
  template Var sum_all<T>(Tape<T>&, Var);                                                  \
  template Var mean_all<T>(Tape<T>&, Var);                                                 \
  template Var sum_axis<T>(Tape<T>&, Var, int);                                            \
  template Var reshape<T>(Tape<T>&, Var, std::vector<int>);                                \
  template Var permute<T>(Tape<T>&, Var, std::vector<int>);                                \
  template Var softmax<T>(Tape<T>&, Var, int);                                             \
  template Var diff_x<T>(Tape<T>&, Var);                                                   \
  template Var diff_y<T>(Tape<T>&, Var);                                                   \
  template Var box_mean3<T>(Tape<T>&, Var);                                                \
  template Var sample_bilinear_x<T>(Tape<T>&, Var, Var);                                   \
  template Var conv<T>(Tape<T>&, Var, Var, Var, int);                                      \
  template Var conv_transpose<T>(Tape<T>&, Var, Var, Var, int, std::vector<int>);          \
  template Var cost_volume_concat<T>(Tape<T>&, Var, Var, int, CostDirection);              \
  template Var cost_volume_corr<T>(Tape<T>&, Var, Var, int, CostDirection);

STEREOKIT_INSTANTIATE_OPS(float)
STEREOKIT_INSTANTIATE_OPS(double)

#undef STEREOKIT_INSTANTIATE_OPS

}  // namespace stereokit

#include "stereokit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "stereokit/losses.hpp"
#include "stereokit/net.hpp"
#include "stereokit/ops.hpp"
#include "stereokit/rng.hpp"

namespace stereokit {

namespace {

double eval_at(const ScalarFn& fn, const std::vector<Tensor<double>>& points) {
  Tape<double> tape;
  std::vector<Var> vars;
  vars.reserve(points.size());
  for (const auto& p : points) vars.push_back(tape.leaf(p));
  Var out = fn(tape, vars);
  return tape.value(out)[0];
}

// Central differences over a chosen coordinate set. Every step size in
// `steps` is tried and the best estimate kept: the optimal h trades
// truncation against the roundoff floor per coordinate, and a deep
// composition holds both strong- and near-zero-gradient coordinates, which
// want opposite ends of that trade.
double check_coords(const ScalarFn& fn, const std::vector<Tensor<double>>& points,
                    const std::vector<std::pair<std::size_t, std::int64_t>>& coords,
                    const std::vector<double>& steps) {
  Tape<double> tape;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < points.size(); ++i) {
    vars.push_back(tape.param("p" + std::to_string(i), points[i]));
  }
  Var out = fn(tape, vars);
  GradMap<double> grads = tape.backward(out);
  std::vector<Tensor<double>> analytic;
  for (std::size_t i = 0; i < points.size(); ++i) {
    analytic.push_back(grads.at("p" + std::to_string(i)));
  }
  std::vector<Tensor<double>> work;
  for (const auto& p : points) work.push_back(p.clone());
  double max_rel = 0.0;
  for (const auto& [i, j] : coords) {
    const double orig = work[i][j];
    const double a = analytic[i][j];
    double best = 1e300;
    for (double h : steps) {
      work[i][j] = orig + h;
      const double fp = eval_at(fn, work);
      work[i][j] = orig - h;
      const double fm = eval_at(fn, work);
      work[i][j] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      best = std::min(best, rel);
    }
    max_rel = std::max(max_rel, best);
  }
  return max_rel;
}

}  // namespace

double grad_check(const ScalarFn& fn, const std::vector<Tensor<double>>& points, double h) {
  Tape<double> tape;
  std::vector<Var> vars;
  std::vector<Tensor<double>> analytic;
  vars.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    vars.push_back(tape.param("p" + std::to_string(i), points[i]));
  }
  Var out = fn(tape, vars);
  GradMap<double> grads = tape.backward(out);
  analytic.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    analytic.push_back(grads.at("p" + std::to_string(i)));
  }

  double max_rel = 0.0;
  std::vector<Tensor<double>> work;
  work.reserve(points.size());
  for (const auto& p : points) work.push_back(p.clone());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::int64_t j = 0; j < points[i].size(); ++j) {
      const double orig = work[i][j];
      work[i][j] = orig + h;
      const double fp = eval_at(fn, work);
      work[i][j] = orig - h;
      const double fm = eval_at(fn, work);
      work[i][j] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[i][j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

namespace {

Tensor<double> rand_tensor(Rng& rng, std::vector<int> shape, double lo, double hi) {
  Tensor<double> t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Uniform in [-2,-margin] u [margin,2]; keeps kinked activations away from
// their kink by more than the step size.
Tensor<double> rand_tensor_off_zero(Rng& rng, std::vector<int> shape, double margin) {
  Tensor<double> t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) {
    double v = rng.uniform(-2.0, 2.0);
    v += v >= 0 ? margin : -margin;
    t[i] = v;
  }
  return t;
}

// Random linear functional of the op output so every output element reaches
// the scalar. The weights are re-derived from the seed on every call, so the
// functional is identical across the analytic and perturbed evaluations.
Var project(Tape<double>& t, Var v, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> r(t.value(v).shape());
  for (std::int64_t i = 0; i < r.size(); ++i) r[i] = rng.uniform(-1.0, 1.0);
  return sum_all(t, mul(t, v, t.leaf(std::move(r))));
}

DisparityMap anchored_gt(const Tensor<float>& base, Rng& rng, double offset_lo, double offset_hi) {
  Tensor<float> values(base.shape());
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(base.size()));
  for (std::int64_t i = 0; i < base.size(); ++i) {
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    double v = base[i] + sign * rng.uniform(offset_lo, offset_hi);
    if (v < 0.05) v = base[i] + rng.uniform(offset_lo, offset_hi);
    values[i] = static_cast<float>(v);
    mask[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
  }
  mask[0] = 1;  // at least one valid pixel
  return DisparityMap(std::move(values), std::move(mask));
}

// Full scaled-down network with the complete objective, checked at a random
// subset of coordinates of every parameter tensor. LIDAR targets are
// anchored half a pixel or more away from the initial prediction so the L1
// terms stay off their kinks under the finite-difference step.
double check_tiny_network(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.variant = Variant::tiny;
  cfg.height = 8;
  cfg.width = 8;
  cfg.max_disparity = 4;
  cfg.channels = 3;
  cfg.features = 4;
  cfg.allow_ragged_shapes = true;
  Model model = build_network(cfg, seed);

  Rng rng(Rng::mix(seed, 1001));
  Tensor<double> left = rand_tensor(rng, {8, 8, 3}, 0.0, 1.0);
  Tensor<double> right = rand_tensor(rng, {8, 8, 3}, 0.0, 1.0);
  ForwardResult init = forward(model, left.cast<float>(), right.cast<float>());
  DisparityMap gt_left = anchored_gt(init.left.values, rng, 0.5, 1.5);
  DisparityMap gt_right = anchored_gt(init.right.values, rng, 0.5, 1.5);
  LossWeights weights;  // combined objective, every term active

  std::vector<std::string> names;
  std::vector<Tensor<double>> points;
  for (const auto& [name, tensor] : model.params) {
    names.push_back(name);
    points.push_back(tensor.cast<double>());
  }
  const Tensor<double> left_c = left, right_c = right;
  ScalarFn fn = [&](Tape<double>& t, const std::vector<Var>& vars) {
    ParamVars pv;
    for (std::size_t i = 0; i < names.size(); ++i) pv.items.emplace_back(names[i], vars[i]);
    Var li = t.leaf(left_c);
    Var ri = t.leaf(right_c);
    ForwardVars fw = network_forward(t, model, pv, li, ri);
    LossTerms terms = total_loss(t, li, ri, fw.left, fw.right, &gt_left, &gt_right, weights,
                                 static_cast<double>(cfg.max_disparity));
    return terms.total;
  };
  std::vector<std::pair<std::size_t, std::int64_t>> coords;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::int64_t n = points[i].size();
    const int want = static_cast<int>(std::min<std::int64_t>(n, 3));
    for (int k = 0; k < want; ++k) {
      coords.emplace_back(i,
                          static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(n)));
    }
  }
  return check_coords(fn, points, coords, {1e-5, 1e-4});
}

using PointsFn = std::function<std::vector<Tensor<double>>(Rng&)>;
using MakeFn = std::function<ScalarFn(std::uint64_t, const std::vector<Tensor<double>>&)>;

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(int seeds) {
  std::vector<GradCheckCase> cases;
  std::uint64_t case_index = 0;
  auto run = [&](const std::string& name, const PointsFn& make_points, const MakeFn& make_fn) {
    GradCheckCase c;
    c.name = name;
    ++case_index;
    for (int s = 0; s < seeds; ++s) {
      Rng rng(Rng::mix(case_index * 7919, static_cast<std::uint64_t>(s)));
      std::vector<Tensor<double>> points = make_points(rng);
      const std::uint64_t ps = Rng::mix(case_index * 104729, static_cast<std::uint64_t>(s));
      ScalarFn fn = make_fn(ps, points);
      c.max_rel_err = std::max(c.max_rel_err, grad_check(fn, points));
    }
    cases.push_back(c);
  };

  auto binary_points = [](Rng& rng) {
    return std::vector<Tensor<double>>{rand_tensor(rng, {3, 4}, -2.0, 2.0),
                                       rand_tensor(rng, {3, 4}, -2.0, 2.0)};
  };
  run("add", binary_points, [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
    return [ps](Tape<double>& t, const std::vector<Var>& v) {
      return project(t, add(t, v[0], v[1]), ps);
    };
  });
  run("sub", binary_points, [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
    return [ps](Tape<double>& t, const std::vector<Var>& v) {
      return project(t, sub(t, v[0], v[1]), ps);
    };
  });
  run("mul", binary_points, [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
    return [ps](Tape<double>& t, const std::vector<Var>& v) {
      return project(t, mul(t, v[0], v[1]), ps);
    };
  });
  run("div",
      [](Rng& rng) {
        auto denom = rand_tensor(rng, {3, 4}, 0.5, 2.0);
        for (std::int64_t i = 0; i < denom.size(); ++i) {
          if (rng.bernoulli(0.5)) denom[i] = -denom[i];
        }
        return std::vector<Tensor<double>>{rand_tensor(rng, {3, 4}, -2.0, 2.0), denom};
      },
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          return project(t, div(t, v[0], v[1]), ps);
        };
      });

  auto unary_points = [](Rng& rng) {
    return std::vector<Tensor<double>>{rand_tensor_off_zero(rng, {4, 5}, 0.05)};
  };
  run("add_scalar", unary_points,
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          return project(t, add_scalar(t, v[0], 0.7), ps);
        };
      });
  run("mul_scalar", unary_points,
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          return project(t, mul_scalar(t, v[0], -1.3), ps);
        };
      });
  run("elu", unary_points, [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
    return [ps](Tape<double>& t, const std::vector<Var>& v) {
      return project(t, elu(t, v[0]), ps);
    };
  });
  run("sigmoid", unary_points,
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          return project(t, sigmoid(t, v[0]), ps);
        };
      });
  run("exp", unary_points, [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
    return [ps](Tape<double>& t, const std::vector<Var>& v) {
      return project(t, exp_elem(t, v[0]), ps);
    };
  });
  run("abs", unary_points, [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
    return [ps](Tape<double>& t, const std::vector<Var>& v) {
      return project(t, abs_elem(t, v[0]), ps);
    };
  });
  run("softmax", unary_points,
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          return project(t, softmax(t, v[0], 1), ps);
        };
      });
  run("sum_mean_axis", unary_points,
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          Var a = project(t, sum_axis(t, v[0], 0), ps);
          return add(t, a, mean_all(t, v[0]));
        };
      });
  run("reshape_permute",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{rand_tensor(rng, {2, 3, 4}, -1.0, 1.0)};
      },
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          Var p = permute(t, v[0], {2, 0, 1});
          return project(t, reshape(t, p, {4, 6}), ps);
        };
      });
  run("diff_x_diff_y",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{rand_tensor(rng, {4, 5, 2}, -1.0, 1.0)};
      },
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          return add(t, project(t, diff_x(t, v[0]), ps), project(t, diff_y(t, v[0]), ps + 1));
        };
      });
  run("box_mean3",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{rand_tensor(rng, {4, 5, 2}, -1.0, 1.0)};
      },
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          return project(t, box_mean3(t, v[0]), ps);
        };
      });
  run("sample_bilinear_x",
      [](Rng& rng) {
        Tensor<double> img = rand_tensor(rng, {3, 6, 2}, -1.0, 1.0);
        Tensor<double> coords({3, 6});
        for (int y = 0; y < 3; ++y) {
          for (int x = 0; x < 6; ++x) {
            // fractional offsets clear of integer kinks; some deep clamps
            double c = x + (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.15, 0.85);
            if (rng.bernoulli(0.15)) c = -3.0 - rng.uniform(0.0, 2.0);
            coords[y * 6 + x] = c;
          }
        }
        return std::vector<Tensor<double>>{img, coords};
      },
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          return project(t, sample_bilinear_x(t, v[0], v[1]), ps);
        };
      });

  for (int stride : {1, 2}) {
    run("conv2d_s" + std::to_string(stride),
        [](Rng& rng) {
          return std::vector<Tensor<double>>{rand_tensor(rng, {5, 6, 3}, -1.0, 1.0),
                                             rand_tensor(rng, {3, 3, 3, 4}, -0.7, 0.7),
                                             rand_tensor(rng, {4}, -0.3, 0.3)};
        },
        [stride](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
          return [ps, stride](Tape<double>& t, const std::vector<Var>& v) {
            return project(t, conv(t, v[0], v[1], v[2], stride), ps);
          };
        });
    run("conv3d_s" + std::to_string(stride),
        [](Rng& rng) {
          return std::vector<Tensor<double>>{rand_tensor(rng, {3, 4, 5, 2}, -1.0, 1.0),
                                             rand_tensor(rng, {3, 3, 3, 2, 3}, -0.5, 0.5),
                                             rand_tensor(rng, {3}, -0.3, 0.3)};
        },
        [stride](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
          return [ps, stride](Tape<double>& t, const std::vector<Var>& v) {
            return project(t, conv(t, v[0], v[1], v[2], stride), ps);
          };
        });
    run("conv_transpose2d_s" + std::to_string(stride),
        [](Rng& rng) {
          return std::vector<Tensor<double>>{rand_tensor(rng, {3, 4, 2}, -1.0, 1.0),
                                             rand_tensor(rng, {3, 3, 3, 2}, -0.7, 0.7),
                                             rand_tensor(rng, {3}, -0.3, 0.3)};
        },
        [stride](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
          return [ps, stride](Tape<double>& t, const std::vector<Var>& v) {
            return project(t, conv_transpose(t, v[0], v[1], v[2], stride), ps);
          };
        });
    run("conv_transpose3d_s" + std::to_string(stride),
        [](Rng& rng) {
          return std::vector<Tensor<double>>{rand_tensor(rng, {2, 3, 4, 3}, -1.0, 1.0),
                                             rand_tensor(rng, {3, 3, 3, 2, 3}, -0.5, 0.5),
                                             rand_tensor(rng, {2}, -0.3, 0.3)};
        },
        [stride](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
          return [ps, stride](Tape<double>& t, const std::vector<Var>& v) {
            return project(t, conv_transpose(t, v[0], v[1], v[2], stride), ps);
          };
        });
  }
  run("conv_transpose3d_ragged",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{rand_tensor(rng, {2, 3, 4, 2}, -1.0, 1.0),
                                           rand_tensor(rng, {3, 3, 3, 2, 2}, -0.5, 0.5),
                                           rand_tensor(rng, {2}, -0.3, 0.3)};
      },
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          return project(t, conv_transpose(t, v[0], v[1], v[2], 2, {3, 5, 7}), ps);
        };
      });

  for (auto dir : {CostDirection::left_ref, CostDirection::right_ref}) {
    const std::string suffix = dir == CostDirection::left_ref ? "left" : "right";
    auto vol_points = [](Rng& rng) {
      return std::vector<Tensor<double>>{rand_tensor(rng, {3, 6, 4}, -1.0, 1.0),
                                         rand_tensor(rng, {3, 6, 4}, -1.0, 1.0)};
    };
    run("cost_volume_concat_" + suffix, vol_points,
        [dir](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
          return [ps, dir](Tape<double>& t, const std::vector<Var>& v) {
            return project(t, cost_volume_concat(t, v[0], v[1], 3, dir), ps);
          };
        });
    run("cost_volume_corr_" + suffix, vol_points,
        [dir](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
          return [ps, dir](Tape<double>& t, const std::vector<Var>& v) {
            return project(t, cost_volume_corr(t, v[0], v[1], 3, dir), ps);
          };
        });
  }

  run("softargmax_pipeline",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{rand_tensor(rng, {3, 4, 5, 1}, -1.0, 1.0)};
      },
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          // the network's reshape + softmax-expectation aggregator
          Var x = reshape(t, v[0], {3, 4, 5});
          x = permute(t, x, {1, 2, 0});
          Var p = softmax(t, mul_scalar(t, x, -1.0), 2);
          Tensor<double> iota({4, 5, 3});
          for (std::int64_t i = 0; i < iota.size(); ++i) iota[i] = static_cast<double>(i % 3);
          Var e = sum_axis(t, mul(t, p, t.leaf(std::move(iota))), 2);
          return project(t, e, ps);
        };
      });

  for (auto dir : {WarpDirection::lr, WarpDirection::rl}) {
    run(dir == WarpDirection::lr ? "warp_lr" : "warp_rl",
        [](Rng& rng) {
          return std::vector<Tensor<double>>{rand_tensor(rng, {3, 7, 2}, -1.0, 1.0),
                                             rand_tensor(rng, {3, 7}, 0.15, 1.85)};
        },
        [dir](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
          return [ps, dir](Tape<double>& t, const std::vector<Var>& v) {
            return project(t, warp(t, v[0], v[1], dir), ps);
          };
        });
  }
  run("ssim",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{rand_tensor(rng, {4, 5, 2}, 0.1, 0.9),
                                           rand_tensor(rng, {4, 5, 2}, 0.1, 0.9)};
      },
      [](std::uint64_t ps, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [ps](Tape<double>& t, const std::vector<Var>& v) {
          return project(t, ssim(t, v[0], v[1], 1e-4, 1e-3), ps);
        };
      });
  run("loss_image",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{rand_tensor(rng, {4, 8, 3}, 0.0, 1.0),
                                           rand_tensor(rng, {4, 8, 3}, 0.0, 1.0),
                                           rand_tensor(rng, {4, 8}, 0.2, 1.8),
                                           rand_tensor(rng, {4, 8}, 0.2, 1.8)};
      },
      [](std::uint64_t, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [](Tape<double>& t, const std::vector<Var>& v) {
          LossWeights w;
          return loss_image(t, v[0], v[1], v[2], v[3], w);
        };
      });
  run("loss_lidar",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{rand_tensor(rng, {4, 6}, 1.0, 3.0),
                                           rand_tensor(rng, {4, 6}, 1.0, 3.0)};
      },
      [](std::uint64_t ps, const std::vector<Tensor<double>>& pts) -> ScalarFn {
        // targets anchored away from the point so |d - gt| stays off zero
        Rng rng(ps);
        auto gt_of = [&rng](const Tensor<double>& d) {
          Tensor<float> vals(d.shape());
          std::vector<std::uint8_t> mask(static_cast<std::size_t>(d.size()));
          for (std::int64_t i = 0; i < d.size(); ++i) {
            vals[i] = static_cast<float>(
                d[i] + (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.5, 1.5));
            mask[static_cast<std::size_t>(i)] = rng.bernoulli(0.6) ? 1 : 0;
          }
          mask[0] = 1;
          return DisparityMap(std::move(vals), std::move(mask));
        };
        auto gt_l = std::make_shared<DisparityMap>(gt_of(pts[0]));
        auto gt_r = std::make_shared<DisparityMap>(gt_of(pts[1]));
        return [gt_l, gt_r](Tape<double>& t, const std::vector<Var>& v) {
          return loss_lidar(t, v[0], v[1], *gt_l, *gt_r, 16.0);
        };
      });
  run("loss_lr",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{rand_tensor(rng, {4, 8}, 0.2, 1.2),
                                           rand_tensor(rng, {4, 8}, 2.0, 2.8)};
      },
      [](std::uint64_t, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [](Tape<double>& t, const std::vector<Var>& v) {
          return loss_lr(t, v[0], v[1]);
        };
      });
  run("loss_smooth",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{rand_tensor(rng, {4, 6}, 0.0, 3.0),
                                           rand_tensor(rng, {4, 6, 3}, 0.0, 1.0)};
      },
      [](std::uint64_t, const std::vector<Tensor<double>>&) -> ScalarFn {
        return [](Tape<double>& t, const std::vector<Var>& v) {
          return loss_smooth(t, v[0], v[1]);
        };
      });
  run("total_loss",
      [](Rng& rng) {
        return std::vector<Tensor<double>>{
            rand_tensor(rng, {4, 8, 3}, 0.0, 1.0), rand_tensor(rng, {4, 8, 3}, 0.0, 1.0),
            rand_tensor(rng, {4, 8}, 0.3, 1.0), rand_tensor(rng, {4, 8}, 2.0, 2.7)};
      },
      [](std::uint64_t ps, const std::vector<Tensor<double>>& pts) -> ScalarFn {
        Rng rng(ps);
        auto gt_of = [&rng](const Tensor<double>& d) {
          Tensor<float> vals(d.shape());
          std::vector<std::uint8_t> mask(static_cast<std::size_t>(d.size()));
          for (std::int64_t i = 0; i < d.size(); ++i) {
            vals[i] = static_cast<float>(
                d[i] + (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.5, 1.5));
            mask[static_cast<std::size_t>(i)] = rng.bernoulli(0.6) ? 1 : 0;
          }
          mask[0] = 1;
          return DisparityMap(std::move(vals), std::move(mask));
        };
        auto gt_l = std::make_shared<DisparityMap>(gt_of(pts[2]));
        auto gt_r = std::make_shared<DisparityMap>(gt_of(pts[3]));
        return [gt_l, gt_r](Tape<double>& t, const std::vector<Var>& v) {
          LossWeights w;
          return total_loss(t, v[0], v[1], v[2], v[3], gt_l.get(), gt_r.get(), w, 16.0).total;
        };
      });

  {
    GradCheckCase c;
    c.name = "tiny8_full_network_loss";
    for (int s = 0; s < seeds; ++s) {
      c.max_rel_err =
          std::max(c.max_rel_err, check_tiny_network(static_cast<std::uint64_t>(s) + 1));
    }
    cases.push_back(c);
  }
  return cases;
}

}  // namespace stereokit

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stereokit/losses.hpp"
#include "stereokit/stereogram.hpp"

using namespace stereokit;

namespace {

template <typename F>
float eval_scalar(F build) {
  Tape<float> t;
  Var v = build(t);
  return t.value(v)[0];
}

}  // namespace

TEST_SUITE_BEGIN("losses");

TEST_CASE("warp: identity, constructed shift, exactness on linear signals") {
  Rng rng(41);
  const int h = 4, w = 12;
  Tensor<float> img = oracles::rand_tensor(rng, {h, w, 3}, 0.0f, 1.0f);
  Tape<float> t;
  {
    Var out = warp(t, t.leaf(img), t.leaf(Tensor<float>({h, w})), WarpDirection::rl);
    CHECK(oracles::max_abs_diff(t.value(out), img) == 0.0f);
  }
  {
    // right(x) = left(x-2); warping right by d=2 (rl) reconstructs left
    Tensor<float> right({h, w, 3});
    for (int y = 0; y < h; ++y) {
      for (int x = 2; x < w; ++x) {
        for (int c = 0; c < 3; ++c) right.at({y, x, c}) = img.at({y, x - 2, c});
      }
    }
    Var out = warp(t, t.leaf(right), t.leaf(Tensor<float>::full({h, w}, 2.0f)),
                   WarpDirection::rl);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x + 2 < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          REQUIRE(t.value(out).at({y, x, c}) == doctest::Approx(img.at({y, x, c})).epsilon(1e-6));
        }
      }
    }
  }
  {
    // bilinear interpolation is exact on a linear ramp
    Tensor<float> ramp({1, 8, 1});
    for (int x = 0; x < 8; ++x) ramp.at({0, x, 0}) = static_cast<float>(x);
    Var out = warp(t, t.leaf(ramp), t.leaf(Tensor<float>::full({1, 8}, 0.5f)),
                   WarpDirection::rl);
    for (int x = 0; x + 1 < 8; ++x) {
      CHECK(t.value(out).at({0, x, 0}) == doctest::Approx(x + 0.5f).epsilon(1e-6));
    }
  }
}

TEST_CASE("ssim: self-similarity, constants, symmetry, range") {
  Rng rng(42);
  Tensor<float> x = oracles::rand_tensor(rng, {6, 7, 3}, 0.0f, 1.0f);
  Tensor<float> y = oracles::rand_tensor(rng, {6, 7, 3}, 0.0f, 1.0f);
  Tape<float> t;
  {
    Var s = ssim(t, t.leaf(x), t.leaf(x), 1e-4f, 1e-3f);
    for (std::int64_t i = 0; i < t.value(s).size(); ++i) {
      REQUIRE(std::abs(t.value(s)[i] - 1.0f) < 1e-12);
    }
  }
  {
    Var s = ssim(t, t.leaf(Tensor<float>({4, 4})), t.leaf(Tensor<float>::full({4, 4}, 1.0f)),
                 1e-4f, 1e-3f);
    const float want = 1e-4f / (1.0f + 1e-4f);  // luminance factor only
    for (std::int64_t i = 0; i < 16; ++i) {
      CHECK(t.value(s)[i] == doctest::Approx(want).epsilon(1e-4));
    }
  }
  {
    Var a = ssim(t, t.leaf(x), t.leaf(y), 1e-4f, 1e-3f);
    Var b = ssim(t, t.leaf(y), t.leaf(x), 1e-4f, 1e-3f);
    CHECK(oracles::max_abs_diff(t.value(a), t.value(b)) < 1e-7f);
    for (std::int64_t i = 0; i < t.value(a).size(); ++i) {
      CHECK(t.value(a)[i] >= -1.0f);
      CHECK(t.value(a)[i] <= 1.0f);
    }
  }
}

TEST_CASE("loss_image: zero on a perfect static pair, alpha mixing") {
  Rng rng(43);
  Tensor<float> img = oracles::rand_tensor(rng, {6, 10, 3}, 0.0f, 1.0f);
  Tensor<float> zero_d({6, 10});
  LossWeights w;
  const float perfect = eval_scalar([&](Tape<float>& t) {
    return loss_image(t, t.leaf(img), t.leaf(img), t.leaf(zero_d), t.leaf(zero_d), w);
  });
  CHECK(perfect == doctest::Approx(0.0f).epsilon(1e-9));

  // alpha = 0 reduces to the pure L1 photometric mean
  Tensor<float> other = oracles::rand_tensor(rng, {6, 10, 3}, 0.0f, 1.0f);
  LossWeights l1only = w;
  l1only.alpha = 0.0f;
  const float got = eval_scalar([&](Tape<float>& t) {
    return loss_image(t, t.leaf(img), t.leaf(other), t.leaf(zero_d), t.leaf(zero_d), l1only);
  });
  double want = 0.0;
  for (std::int64_t i = 0; i < img.size(); ++i) want += std::abs(img[i] - other[i]);
  want = 2.0 * want / static_cast<double>(img.size());  // both sides, d == 0
  CHECK(got == doctest::Approx(want).epsilon(1e-5));
}

TEST_CASE("loss_image: the true shift beats the zero hypothesis") {
  // a constructed 2-pixel-shift pair scores near zero with its true
  // disparity and strictly higher with d = 0
  Tensor<float> field = Tensor<float>::full({16, 32}, 2.0f);
  Rng rng(44);
  Tensor<float> texture = oracles::rand_tensor(rng, {16, 32, 3}, 0.0f, 1.0f);
  StereoSample s = synthesize_pair(texture, field);
  LossWeights w;
  auto image_loss_with = [&](float d) {
    return eval_scalar([&](Tape<float>& t) {
      return loss_image(t, t.leaf(s.left), t.leaf(s.right),
                        t.leaf(Tensor<float>::full({16, 32}, d)),
                        t.leaf(Tensor<float>::full({16, 32}, d)), w);
    });
  };
  const float at_truth = image_loss_with(2.0f);
  const float at_zero = image_loss_with(0.0f);
  CHECK(at_truth < at_zero);
  CHECK(at_truth < 0.25f * at_zero);
}

TEST_CASE("loss_lidar: exact zero, worked single pixel, mask invariance") {
  Tensor<float> d({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  DisparityMap gt(d.clone());
  Tape<float> t;
  {
    Var v = loss_lidar(t, t.leaf(d), t.leaf(d), gt, gt, 96.0f);
    CHECK(t.value(v)[0] == 0.0f);
  }
  {
    // one valid pixel: |10 - 14| / 96 on the left side only
    Tensor<float> est = Tensor<float>::full({2, 2}, 10.0f);
    Tensor<float> gtv = Tensor<float>::full({2, 2}, 14.0f);
    std::vector<std::uint8_t> one_pixel = {1, 0, 0, 0};
    DisparityMap gl(gtv.clone(), one_pixel);
    DisparityMap gr(gtv.clone(), std::vector<std::uint8_t>{0, 0, 0, 0});
    bool empty = false;
    Var v = loss_lidar(t, t.leaf(est), t.leaf(est), gl, gr, 96.0f, &empty);
    CHECK(t.value(v)[0] == doctest::Approx(4.0 / 96.0).epsilon(1e-6));
    CHECK(empty);  // the right side had no valid pixels and flagged it
  }
  {
    // values at masked-out pixels cannot move the loss
    Rng rng(45);
    Tensor<float> est = oracles::rand_tensor(rng, {4, 4}, 0.0f, 9.0f);
    Tensor<float> gtv = oracles::rand_tensor(rng, {4, 4}, 0.0f, 9.0f);
    std::vector<std::uint8_t> mask(16, 0);
    for (int i = 0; i < 16; i += 3) mask[static_cast<std::size_t>(i)] = 1;
    DisparityMap g1(gtv.clone(), mask);
    Tensor<float> gtv2 = gtv.clone();
    for (int i = 0; i < 16; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) gtv2[i] += 1000.0f;
    }
    DisparityMap g2(gtv2, mask);
    Var a = loss_lidar(t, t.leaf(est), t.leaf(est), g1, g1, 96.0f);
    Var b = loss_lidar(t, t.leaf(est), t.leaf(est), g2, g2, 96.0f);
    CHECK(t.value(a)[0] == t.value(b)[0]);
  }
}

TEST_CASE("loss_lr: consistent pairs score zero, inconsistent pairs do not") {
  Tape<float> t;
  const int h = 4, w = 10;
  {
    Var v = loss_lr(t, t.leaf(Tensor<float>({h, w})), t.leaf(Tensor<float>({h, w})));
    CHECK(t.value(v)[0] == 0.0f);
  }
  {
    // constant maps are mutually consistent everywhere (clamped samples
    // still read the same constant)
    Var v = loss_lr(t, t.leaf(Tensor<float>::full({h, w}, 3.0f)),
                    t.leaf(Tensor<float>::full({h, w}, 3.0f)));
    CHECK(t.value(v)[0] == doctest::Approx(0.0f).epsilon(1e-7));
  }
  {
    Var v = loss_lr(t, t.leaf(Tensor<float>({h, w})),
                    t.leaf(Tensor<float>::full({h, w}, 2.0f)));
    CHECK(t.value(v)[0] > 0.0f);
    CHECK(t.value(v)[0] == doctest::Approx(4.0f).epsilon(1e-6));  // 2c
  }
}

TEST_CASE("loss_smooth: constants, unit ramp, edge-aware suppression") {
  Tape<float> t;
  const int h = 6, w = 8;
  Tensor<float> flat_img = Tensor<float>::full({h, w, 3}, 0.5f);
  {
    Var v = loss_smooth(t, t.leaf(Tensor<float>::full({h, w}, 4.0f)), t.leaf(flat_img));
    CHECK(t.value(v)[0] == 0.0f);
  }
  Tensor<float> ramp({h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) ramp.at({y, x}) = static_cast<float>(x);
  }
  {
    // slope-one ramp against a flat image: the x term contributes exactly 1
    Var v = loss_smooth(t, t.leaf(ramp), t.leaf(flat_img));
    CHECK(t.value(v)[0] == doctest::Approx(1.0f).epsilon(1e-6));
  }
  {
    // strong image gradients suppress the same ramp
    Tensor<float> stripes({h, w, 3});
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) stripes.at({y, x, c}) = x % 2 ? 1.0f : 0.0f;
      }
    }
    Var v = loss_smooth(t, t.leaf(ramp), t.leaf(stripes));
    CHECK(t.value(v)[0] == doctest::Approx(std::exp(-3.0f)).epsilon(1e-4));
    CHECK(t.value(v)[0] < 0.06f);
  }
}

TEST_CASE("total_loss: lambda linearity and the mode presets") {
  Rng rng(46);
  const int h = 8, w = 16;
  Tensor<float> li = oracles::rand_tensor(rng, {h, w, 3}, 0.0f, 1.0f);
  Tensor<float> ri = oracles::rand_tensor(rng, {h, w, 3}, 0.0f, 1.0f);
  Tensor<float> dl = oracles::rand_tensor(rng, {h, w}, 0.5f, 6.0f);
  Tensor<float> dr = oracles::rand_tensor(rng, {h, w}, 0.5f, 6.0f);
  Tensor<float> gtv = oracles::rand_tensor(rng, {h, w}, 0.5f, 6.0f);
  DisparityMap gt(gtv);

  auto eval_terms = [&](const LossWeights& w16) {
    Tape<float> t;
    LossTerms terms = total_loss(t, t.leaf(li), t.leaf(ri), t.leaf(dl), t.leaf(dr), &gt, &gt,
                                 w16, 16.0f);
    return std::array<float, 5>{t.value(terms.total)[0], t.value(terms.image)[0],
                                t.value(terms.lidar)[0], t.value(terms.lr)[0],
                                t.value(terms.smooth)[0]};
  };

  LossWeights zero;
  zero.lambda1 = zero.lambda2 = zero.lambda3 = zero.lambda4 = 0.0f;
  CHECK(eval_terms(zero)[0] == 0.0f);

  LossWeights only_lidar = zero;
  only_lidar.lambda2 = 1.0f;
  auto r1 = eval_terms(only_lidar);
  CHECK(r1[0] == doctest::Approx(r1[2]).epsilon(1e-7));  // total == E_lidar

  LossWeights defaults;  // the validated fine-tuning weighting
  CHECK(defaults.lambda1 == 0.01f);
  CHECK(defaults.lambda2 == 1.0f);
  CHECK(defaults.lambda3 == 0.1f);
  CHECK(defaults.lambda4 == 0.1f);
  CHECK(defaults.alpha == 0.85f);
  auto r2 = eval_terms(defaults);
  const double recombined = 0.01 * r2[1] + 1.0 * r2[2] + 0.1 * r2[3] + 0.1 * r2[4];
  CHECK(r2[0] == doctest::Approx(recombined).epsilon(1e-6));

  // scaling every lambda scales the total
  LossWeights doubled = defaults;
  doubled.lambda1 *= 2;
  doubled.lambda2 *= 2;
  doubled.lambda3 *= 2;
  doubled.lambda4 *= 2;
  CHECK(eval_terms(doubled)[0] == doctest::Approx(2.0 * r2[0]).epsilon(1e-6));

  // term values are independent of the weights (pure linearity)
  for (int i = 1; i < 5; ++i) CHECK(r2[i] == doctest::Approx(eval_terms(doubled)[i]));
}

TEST_CASE("total_loss: single-tower objective drops right-map terms") {
  Rng rng(47);
  const int h = 8, w = 16;
  Tensor<float> li = oracles::rand_tensor(rng, {h, w, 3}, 0.0f, 1.0f);
  Tensor<float> ri = oracles::rand_tensor(rng, {h, w, 3}, 0.0f, 1.0f);
  Tensor<float> dl = oracles::rand_tensor(rng, {h, w}, 0.5f, 6.0f);
  DisparityMap gt(oracles::rand_tensor(rng, {h, w}, 0.5f, 6.0f));
  Tape<float> t;
  LossWeights w16;
  LossTerms terms =
      total_loss(t, t.leaf(li), t.leaf(ri), t.leaf(dl), Var{}, &gt, &gt, w16, 16.0f);
  CHECK(t.value(terms.lr)[0] == 0.0f);  // needs both maps, dropped
  CHECK(t.value(terms.total)[0] > 0.0f);
}

TEST_SUITE_END();

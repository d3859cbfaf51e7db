#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "stereokit/colormap.hpp"
#include "stereokit/image_io.hpp"
#include "stereokit/losses.hpp"
#include "stereokit/stereogram.hpp"

using namespace stereokit;

namespace {

// Lab conversion written independently of the library (same published
// constants, separate code path) for the colormap oracle.
std::array<double, 3> ref_lab(double r, double g, double b) {
  auto lin = [](double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); };
  const double rl = lin(r), gl = lin(g), bl = lin(b);
  const double xyz[3] = {
      (0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl) / 0.95047,
      (0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl) / 1.0,
      (0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl) / 1.08883,
  };
  double f[3];
  for (int i = 0; i < 3; ++i) {
    f[i] = xyz[i] > 216.0 / 24389.0 ? std::cbrt(xyz[i]) : (24389.0 / 27.0 * xyz[i] + 16.0) / 116.0;
  }
  return {116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])};
}

std::string temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() / (std::string("stereokit_test_") + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace

TEST_SUITE_BEGIN("dataio");

TEST_CASE("image codec: white pixel, round trip, truncation") {
  {
    const std::string raw = "P6\n1 1\n255\n\xff\xff\xff";
    Tensor<float> img = decode_image(std::vector<std::uint8_t>(raw.begin(), raw.end()));
    CHECK(img.shape() == std::vector<int>{1, 1, 3});
    for (int c = 0; c < 3; ++c) CHECK(img[c] == 1.0f);
  }
  {
    Rng rng(71);
    Tensor<float> img({5, 7, 3});
    for (std::int64_t i = 0; i < img.size(); ++i) {
      img[i] = static_cast<float>(rng.uniform_int(0, 255)) / 255.0f;
    }
    const auto bytes = encode_image(img);
    const auto twice = encode_image(decode_image(bytes));
    REQUIRE(bytes.size() == twice.size());
    CHECK(bytes == twice);
    // grayscale path
    Tensor<float> gray({3, 4, 1});
    for (std::int64_t i = 0; i < gray.size(); ++i) {
      gray[i] = static_cast<float>(rng.uniform_int(0, 255)) / 255.0f;
    }
    const auto gb = encode_image(gray);
    CHECK(gb == encode_image(decode_image(gb)));
  }
  {
    const std::string raw = "P6\n4 4\n255\nshort";
    CHECK_THROWS_WITH_AS(decode_image(std::vector<std::uint8_t>(raw.begin(), raw.end())),
                         doctest::Contains("byte"), std::runtime_error);
    const std::string bad = "Q6\n1 1\n255\nxxx";
    CHECK_THROWS_AS(decode_image(std::vector<std::uint8_t>(bad.begin(), bad.end())),
                    std::runtime_error);
    // comments in headers parse
    const std::string commented = "P5\n# c\n2 1\n255\nab";
    CHECK_NOTHROW(decode_image(std::vector<std::uint8_t>(commented.begin(), commented.end())));
  }
}

TEST_CASE("disparity codec: scale, invalid zeros, exact round trip") {
  {
    Tensor<float> v({1, 2}, {100.0f, 0.0f});
    DisparityMap m(v, std::vector<std::uint8_t>{1, 0});
    const auto bytes = encode_disparity(m);
    DisparityMap back = decode_disparity(bytes);
    CHECK(back.values[0] == 100.0f);  // stored 25600
    CHECK(back.valid[0] == 1);
    CHECK(back.valid[1] == 0);
    CHECK(bytes[bytes.size() - 4] == 0x00);
    CHECK(bytes[bytes.size() - 3] == 0x64);  // 25600 little-endian
  }
  {
    Rng rng(72);
    Tensor<float> v({6, 6});
    std::vector<std::uint8_t> mask(36);
    for (std::int64_t i = 0; i < 36; ++i) {
      v[i] = static_cast<float>(rng.uniform_int(1, 65535)) / 256.0f;  // already quantized
      mask[static_cast<std::size_t>(i)] = rng.bernoulli(0.8) ? 1 : 0;
    }
    DisparityMap m(v, mask);
    const auto bytes = encode_disparity(m);
    CHECK(bytes == encode_disparity(decode_disparity(bytes)));
    DisparityMap back = decode_disparity(bytes);
    for (std::int64_t i = 0; i < 36; ++i) {
      if (mask[static_cast<std::size_t>(i)]) {
        REQUIRE(back.values[i] == v[i]);
      } else {
        REQUIRE(back.valid[static_cast<std::size_t>(i)] == 0);
      }
    }
  }
  {
    // an 8-bit raster is not a disparity container
    const std::string raw = "P5\n2 2\n255\nabcd";
    CHECK_THROWS_WITH_AS(decode_disparity(std::vector<std::uint8_t>(raw.begin(), raw.end())),
                         doctest::Contains("16-bit"), std::runtime_error);
  }
}

TEST_CASE("colormap: order, Hamming steps, equal delta-E parameterization") {
  const ColormapLUT lut = build_colormap();
  const std::array<std::array<float, 3>, 8> want = {{{0, 0, 0},
                                                      {1, 0, 0},
                                                      {1, 1, 0},
                                                      {0, 1, 0},
                                                      {0, 1, 1},
                                                      {0, 0, 1},
                                                      {1, 0, 1},
                                                      {1, 1, 1}}};
  CHECK(lut.stops == want);
  for (int i = 1; i < 8; ++i) {
    int changed = 0;
    for (int c = 0; c < 3; ++c) {
      if (lut.stops[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] !=
          lut.stops[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c)]) {
        ++changed;
      }
    }
    CHECK(changed == 1);  // one RGB channel flips per step
    CHECK(lut.positions[static_cast<std::size_t>(i)] > lut.positions[static_cast<std::size_t>(i - 1)]);
  }
  CHECK(lut.positions[0] == 0.0);
  CHECK(lut.positions[7] == 1.0);

  // independent check: delta-E per unit position is the same constant on
  // every segment (the arc-length construction)
  double total = 0.0;
  std::array<double, 7> seg{};
  for (int i = 0; i < 7; ++i) {
    const auto& a = lut.stops[static_cast<std::size_t>(i)];
    const auto& b = lut.stops[static_cast<std::size_t>(i + 1)];
    seg[static_cast<std::size_t>(i)] = delta_e76(ref_lab(a[0], a[1], a[2]), ref_lab(b[0], b[1], b[2]));
    total += seg[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < 7; ++i) {
    const double per_unit = seg[static_cast<std::size_t>(i)] /
                            (lut.positions[static_cast<std::size_t>(i + 1)] -
                             lut.positions[static_cast<std::size_t>(i)]);
    CHECK(per_unit == doctest::Approx(total).epsilon(1e-6));
  }

  // luminance endpoints: K at L*=0, W at L*=100, everything else inside
  CHECK(ref_lab(0, 0, 0)[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(ref_lab(1, 1, 1)[0] == doctest::Approx(100.0).epsilon(1e-3));
  for (int i = 1; i < 7; ++i) {
    const auto& s = lut.stops[static_cast<std::size_t>(i)];
    const double l = ref_lab(s[0], s[1], s[2])[0];
    CHECK(l > 0.0);
    CHECK(l < 100.0);
  }
}

TEST_CASE("colorize: endpoints, mid-segment blends, invalid pixels, inversion") {
  const ColormapLUT lut = build_colormap();
  Tensor<float> v({1, 4}, {0.0f, 48.0f, 96.0f, 10.0f});
  DisparityMap m(v, std::vector<std::uint8_t>{1, 1, 1, 0});
  Tensor<float> rgb = colorize(m, 0.0f, 96.0f);
  CHECK(rgb.shape() == std::vector<int>{1, 4, 3});
  for (int c = 0; c < 3; ++c) {
    CHECK(rgb.at({0, 0, c}) == 0.0f);       // d_min -> black
    CHECK(rgb.at({0, 2, c}) == 1.0f);       // d_max -> white
    CHECK(rgb.at({0, 3, c}) == 0.5f);       // invalid -> gray
  }
  // midpoint of the R->Y segment blends only the green channel
  const double t_mid = 0.5 * (lut.positions[1] + lut.positions[2]);
  Tensor<float> v2({1, 1}, {static_cast<float>(96.0 * t_mid)});
  Tensor<float> rgb2 = colorize(DisparityMap(v2), 0.0f, 96.0f);
  CHECK(rgb2[0] == doctest::Approx(1.0f));
  CHECK(rgb2[1] == doctest::Approx(0.5f).epsilon(1e-4));
  CHECK(rgb2[2] == doctest::Approx(0.0f));
  // identical values map to identical colors under the same scale
  Tensor<float> rgb3 = colorize(m, 0.0f, 96.0f);
  CHECK(oracles::max_abs_diff(rgb, rgb3) == 0.0f);
  // inversion flips the endpoints
  Tensor<float> inv = colorize(m, 0.0f, 96.0f, true);
  CHECK(inv.at({0, 0, 0}) == 1.0f);
  CHECK(inv.at({0, 2, 0}) == 0.0f);
  CHECK_THROWS_AS(colorize(m, 5.0f, 5.0f), std::invalid_argument);
}

TEST_CASE("generator: zero field copies the texture exactly") {
  Rng rng(73);
  Tensor<float> texture = oracles::rand_tensor(rng, {8, 16, 3}, 0.0f, 1.0f);
  StereoSample s = synthesize_pair(texture, Tensor<float>({8, 16}));
  CHECK(oracles::max_abs_diff(s.left, s.right) == 0.0f);
  CHECK(s.gt_left.valid_count() == s.gt_left.values.size());
}

TEST_CASE("generator: warp self-consistency on integer scenes") {
  for (SceneKind scene : {SceneKind::fronto_planes, SceneKind::dots}) {
    StereoSample s = gen_stereogram(99, 32, 64, 12, scene);
    Tape<float> t;
    Var rec = warp(t, t.leaf(s.right), t.leaf(s.gt_left.values), WarpDirection::rl);
    const Tensor<float>& got = t.value(rec);
    for (std::int64_t i = 0; i < s.left.size() / 3; ++i) {
      if (!s.gt_left.valid[static_cast<std::size_t>(i)]) continue;
      for (int c = 0; c < 3; ++c) {
        REQUIRE(std::abs(got[i * 3 + c] - s.left[i * 3 + c]) < 1e-6f);
      }
    }
    // left-right ground truth agrees through the forward map
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 64; ++x) {
        const std::int64_t i = y * 64 + x;
        if (!s.gt_left.valid[static_cast<std::size_t>(i)]) continue;
        const int xr = x + static_cast<int>(std::lround(s.gt_left.values[i]));
        REQUIRE(xr < 64);
        REQUIRE(s.gt_right.valid[static_cast<std::size_t>(y * 64 + xr)] == 1);
        REQUIRE(s.gt_right.values[y * 64 + xr] == s.gt_left.values[i]);
      }
    }
    // disparities stay within the requested range
    for (std::int64_t i = 0; i < s.gt_left.values.size(); ++i) {
      CHECK(s.gt_left.values[i] >= 0.0f);
      CHECK(s.gt_left.values[i] <= 12.0f);
    }
  }
}

TEST_CASE("generator: determinism and sparsity") {
  StereoSample a = gen_stereogram(5, 32, 64, 10, SceneKind::dots);
  StereoSample b = gen_stereogram(5, 32, 64, 10, SceneKind::dots);
  CHECK(oracles::max_abs_diff(a.left, b.left) == 0.0f);
  CHECK(oracles::max_abs_diff(a.right, b.right) == 0.0f);
  CHECK(a.gt_left.valid == b.gt_left.valid);
  CHECK(a.gt_left_sparse.valid == b.gt_left_sparse.valid);

  // the sparse mask is a ~5% subset of the dense one
  std::int64_t dense = a.gt_left.valid_count();
  std::int64_t sparse = a.gt_left_sparse.valid_count();
  CHECK(sparse > 0);
  CHECK(sparse < dense / 8);
  for (std::size_t i = 0; i < a.gt_left.valid.size(); ++i) {
    if (a.gt_left_sparse.valid[i]) CHECK(a.gt_left.valid[i]);
  }
  CHECK_THROWS_AS(gen_stereogram(1, 32, 64, 16, SceneKind::dots), std::invalid_argument);
}

TEST_CASE("sample directory round trip") {
  const std::string dir = temp_dir("samples");
  StereoSample s = gen_stereogram(31, 16, 32, 6, SceneKind::fronto_planes);
  save_sample(dir, s, /*sparse_gt=*/false);
  write_manifest(dir, {s.id});
  const auto ids = read_manifest(dir);
  REQUIRE(ids.size() == 1);
  StereoSample back = load_sample(dir, ids[0]);
  // images round-trip through 8-bit quantization
  CHECK(encode_image(back.left) == encode_image(s.left));
  CHECK(encode_image(back.right) == encode_image(s.right));
  // integer ground truth is exact through the 1/256 container
  CHECK(back.gt_left.valid == s.gt_left.valid);
  for (std::int64_t i = 0; i < s.gt_left.values.size(); ++i) {
    if (s.gt_left.valid[static_cast<std::size_t>(i)]) {
      REQUIRE(back.gt_left.values[i] == s.gt_left.values[i]);
    }
  }
}

TEST_CASE("crop_top_rows removes the requested fraction") {
  Tensor<float> img({320, 4, 3});
  for (std::int64_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i);
  Tensor<float> cropped = crop_top_rows(img, 0.378f);
  CHECK(cropped.shape() == std::vector<int>{199, 4, 3});  // 320 - round(120.96)
  CHECK(cropped[0] == img[static_cast<std::int64_t>(121) * 4 * 3]);
  DisparityMap m(Tensor<float>({10, 4}));
  CHECK(crop_top_rows(m, 0.2f).height() == 8);
  CHECK_THROWS_AS(crop_top_rows(m, 1.0f), std::invalid_argument);
}

TEST_SUITE_END();

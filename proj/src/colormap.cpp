#include "stereokit/colormap.hpp"

#include <cmath>
#include <stdexcept>

namespace stereokit {

namespace {

double srgb_linearize(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kCube = (6.0 / 29.0) * (6.0 / 29.0) * (6.0 / 29.0);
  constexpr double kScale = (29.0 / 6.0) * (29.0 / 6.0) / 3.0;
  return t > kCube ? std::cbrt(t) : kScale * t + 4.0 / 29.0;
}

}  // namespace

std::array<double, 3> srgb_to_lab(double r, double g, double b) {
  const double rl = srgb_linearize(r), gl = srgb_linearize(g), bl = srgb_linearize(b);
  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  const double fx = lab_f(x / 0.95047);
  const double fy = lab_f(y / 1.0);
  const double fz = lab_f(z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double delta_e76(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dl = a[0] - b[0], da = a[1] - b[1], db = a[2] - b[2];
  return std::sqrt(dl * dl + da * da + db * db);
}

ColormapLUT build_colormap() {
  ColormapLUT lut;
  lut.stops = {{{0, 0, 0},  // K
                {1, 0, 0},  // R
                {1, 1, 0},  // Y
                {0, 1, 0},  // G
                {0, 1, 1},  // C
                {0, 0, 1},  // B
                {1, 0, 1},  // M
                {1, 1, 1}}};  // W
  std::array<double, 8> cumulative{};
  cumulative[0] = 0.0;
  for (int i = 1; i < 8; ++i) {
    const auto& p = lut.stops[static_cast<std::size_t>(i - 1)];
    const auto& q = lut.stops[static_cast<std::size_t>(i)];
    cumulative[static_cast<std::size_t>(i)] =
        cumulative[static_cast<std::size_t>(i - 1)] +
        delta_e76(srgb_to_lab(p[0], p[1], p[2]), srgb_to_lab(q[0], q[1], q[2]));
  }
  const double total = cumulative[7];
  for (int i = 0; i < 8; ++i) lut.positions[static_cast<std::size_t>(i)] = cumulative[static_cast<std::size_t>(i)] / total;
  return lut;
}

Tensor<float> colorize(const DisparityMap& map, float d_min, float d_max, bool invert) {
  if (!(d_max > d_min)) {
    throw std::invalid_argument("colorize: d_max must exceed d_min");
  }
  static const ColormapLUT lut = build_colormap();
  const int h = map.height(), w = map.width();
  Tensor<float> out({h, w, 3});
  const double range = static_cast<double>(d_max) - d_min;
  for (std::int64_t i = 0; i < map.values.size(); ++i) {
    float* px = out.data() + i * 3;
    if (!map.valid[static_cast<std::size_t>(i)]) {
      px[0] = px[1] = px[2] = 0.5f;
      continue;
    }
    double t = (static_cast<double>(map.values[i]) - d_min) / range;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    if (invert) t = 1.0 - t;
    int seg = 0;
    while (seg < 6 && t > lut.positions[static_cast<std::size_t>(seg + 1)]) ++seg;
    const double p0 = lut.positions[static_cast<std::size_t>(seg)];
    const double p1 = lut.positions[static_cast<std::size_t>(seg + 1)];
    const double u = (t - p0) / (p1 - p0);
    const auto& a = lut.stops[static_cast<std::size_t>(seg)];
    const auto& b = lut.stops[static_cast<std::size_t>(seg + 1)];
    for (int c = 0; c < 3; ++c) {
      px[c] = static_cast<float>((1.0 - u) * a[static_cast<std::size_t>(c)] +
                                 u * b[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

}  // namespace stereokit

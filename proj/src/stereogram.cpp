#include "stereokit/stereogram.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "stereokit/image_io.hpp"
#include "stereokit/rng.hpp"

namespace stereokit {

const char* scene_name(SceneKind s) {
  switch (s) {
    case SceneKind::fronto_planes: return "fronto_planes";
    case SceneKind::slanted: return "slanted";
    case SceneKind::dots: return "dots";
  }
  return "?";
}

SceneKind scene_from_name(const std::string& name) {
  for (SceneKind s : {SceneKind::fronto_planes, SceneKind::slanted, SceneKind::dots}) {
    if (name == scene_name(s)) return s;
  }
  throw std::invalid_argument("unknown scene '" + name + "'");
}

namespace {

// Random dots at two block sizes. The coarse blocks survive the feature
// tower's stride-2 downsampling and give the photometric term a wide
// alignment basin; the fine blocks carry the sub-pixel signal.
Tensor<float> dot_texture(Rng& rng, int h, int w) {
  Tensor<float> img({h, w, 3});
  for (int block : {4, 2}) {
    for (int y = 0; y < h; y += block) {
      for (int x = 0; x < w; x += block) {
        const float v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
        for (int yy = y; yy < std::min(h, y + block); ++yy) {
          for (int xx = x; xx < std::min(w, x + block); ++xx) {
            float* px = img.data() + (static_cast<std::int64_t>(yy) * w + xx) * 3;
            const float mixed = block == 4 ? v : 0.65f * px[0] + 0.35f * v;
            px[0] = px[1] = px[2] = mixed;
          }
        }
      }
    }
  }
  return img;
}

Tensor<float> smooth_texture(Rng& rng, int h, int w) {
  Tensor<float> img({h, w, 3});
  for (std::int64_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(rng.uniform());
  // two box blurs for spatial coherence, then restretch the contrast
  for (int pass = 0; pass < 2; ++pass) {
    Tensor<float> next({h, w, 3});
    for (int y = 0; y < h; ++y) {
      const int y0 = std::max(0, y - 1), y1 = std::min(h - 1, y + 1);
      for (int x = 0; x < w; ++x) {
        const int x0 = std::max(0, x - 1), x1 = std::min(w - 1, x + 1);
        for (int c = 0; c < 3; ++c) {
          float s = 0.0f;
          for (int yy = y0; yy <= y1; ++yy) {
            for (int xx = x0; xx <= x1; ++xx) {
              s += img[(static_cast<std::int64_t>(yy) * w + xx) * 3 + c];
            }
          }
          next[(static_cast<std::int64_t>(y) * w + x) * 3 + c] =
              s / static_cast<float>((y1 - y0 + 1) * (x1 - x0 + 1));
        }
      }
    }
    img = next;
  }
  for (std::int64_t i = 0; i < img.size(); ++i) {
    const float v = (img[i] - 0.5f) * 2.5f + 0.5f;
    img[i] = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  }
  return img;
}

// Piecewise disparity field on the left grid: a background plane plus
// rectangles standing in front of it. The dots scene is the classic
// stereogram layout (one raised square over a background plane) with the
// plane close to max_d, where the relative outlier threshold is loosest.
Tensor<float> disparity_field(Rng& rng, int h, int w, int max_d, SceneKind scene) {
  Tensor<float> d({h, w});
  const int bg = scene == SceneKind::dots
                     ? std::max(1, max_d - 3)
                     : rng.uniform_int(std::max(1, max_d / 4), std::max(1, max_d / 2));
  for (std::int64_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(bg);
  const int rects = scene == SceneKind::dots ? 1 : rng.uniform_int(2, 4);
  for (int r = 0; r < rects; ++r) {
    const bool julesz = scene == SceneKind::dots;
    const int rw = julesz ? rng.uniform_int(std::max(3, w / 4), std::max(4, w / 2))
                          : rng.uniform_int(std::max(3, w / 6), std::max(4, w / 3));
    const int rh = julesz ? rng.uniform_int(std::max(3, h / 3), std::max(4, 2 * h / 3))
                          : rng.uniform_int(std::max(3, h / 5), std::max(4, h / 2));
    const int x0 = rng.uniform_int(0, std::max(0, w - rw - 1));
    const int y0 = rng.uniform_int(0, std::max(0, h - rh - 1));
    // dots pins the square one level under max_d: far enough from the
    // background to matter, and clear of the aggregator's output ceiling
    const int lo = julesz ? std::min(std::max(bg + 1, max_d - 1), max_d)
                          : std::min(bg + 2, max_d);
    const int d0 = julesz ? lo : rng.uniform_int(lo, max_d);
    if (scene == SceneKind::slanted) {
      const double d1 = rng.uniform(static_cast<double>(lo), static_cast<double>(max_d));
      for (int y = y0; y < y0 + rh; ++y) {
        for (int x = x0; x < x0 + rw; ++x) {
          const double u = rw > 1 ? static_cast<double>(x - x0) / (rw - 1) : 0.0;
          const double v = d0 + (d1 - d0) * u;
          d[static_cast<std::int64_t>(y) * w + x] = static_cast<float>(std::max(0.5, v));
        }
      }
    } else {
      for (int y = y0; y < y0 + rh; ++y) {
        for (int x = x0; x < x0 + rw; ++x) {
          d[static_cast<std::int64_t>(y) * w + x] = static_cast<float>(d0);
        }
      }
    }
  }
  return d;
}

}  // namespace

StereoSample synthesize_pair(const Tensor<float>& right_texture,
                             const Tensor<float>& field) {
  if (right_texture.rank() != 3 || right_texture.dim(2) != 3 || field.rank() != 2 ||
      field.dim(0) != right_texture.dim(0) || field.dim(1) != right_texture.dim(1)) {
    throw std::invalid_argument("synthesize_pair: texture " + shape_str(right_texture.shape()) +
                                " and field " + shape_str(field.shape()) + " do not match");
  }
  const int height = field.dim(0), width = field.dim(1);
  StereoSample s;
  s.right = right_texture;
  s.left = Tensor<float>({height, width, 3});
  Tensor<float> gt_l(field.shape());
  std::vector<std::uint8_t> valid_l(static_cast<std::size_t>(field.size()), 0);
  Tensor<float> gt_r(field.shape());
  std::vector<std::uint8_t> valid_r(static_cast<std::size_t>(field.size()), 0);

  std::vector<int> winner(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    // Forward map every left pixel to its right-image bin; when several
    // left pixels land in one bin the larger disparity (closer surface)
    // wins and the losers are occluded.
    std::fill(winner.begin(), winner.end(), -1);
    for (int x = 0; x < width; ++x) {
      const float d = field[static_cast<std::int64_t>(y) * width + x];
      const double target = static_cast<double>(x) + d;
      if (target > width - 1 + 1e-9) continue;  // walks off the right edge
      const int bin = static_cast<int>(std::lround(target));
      if (bin < 0 || bin >= width) continue;
      if (winner[static_cast<std::size_t>(bin)] < 0 ||
          field[static_cast<std::int64_t>(y) * width + winner[static_cast<std::size_t>(bin)]] < d) {
        winner[static_cast<std::size_t>(bin)] = x;
      }
    }
    for (int x = 0; x < width; ++x) {
      const std::int64_t i = static_cast<std::int64_t>(y) * width + x;
      const float d = field[i];
      const double target = static_cast<double>(x) + d;
      // synthesize the left view by sampling the right texture
      double q = std::min(std::max(target, 0.0), static_cast<double>(width - 1));
      const int x0 = std::min(static_cast<int>(q), width - 2);
      const double f = q - x0;
      for (int c = 0; c < 3; ++c) {
        const float a = s.right[(static_cast<std::int64_t>(y) * width + x0) * 3 + c];
        const float b = s.right[(static_cast<std::int64_t>(y) * width + x0 + 1) * 3 + c];
        s.left[i * 3 + c] = static_cast<float>((1.0 - f) * a + f * b);
      }
      gt_l[i] = d;
      if (target <= width - 1 + 1e-9) {
        const int bin = static_cast<int>(std::lround(target));
        if (bin >= 0 && bin < width && winner[static_cast<std::size_t>(bin)] == x) {
          valid_l[static_cast<std::size_t>(i)] = 1;
          gt_r[static_cast<std::int64_t>(y) * width + bin] = d;
          valid_r[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(bin)] = 1;
        }
      }
    }
  }
  s.gt_left = DisparityMap(std::move(gt_l), std::move(valid_l));
  s.gt_right = DisparityMap(std::move(gt_r), std::move(valid_r));
  s.gt_left_sparse = s.gt_left;
  s.gt_right_sparse = s.gt_right;
  return s;
}

StereoSample gen_stereogram(std::uint64_t seed, int height, int width, int max_d, SceneKind scene,
                            double sparsity) {
  if (height < 4 || width < 8) throw std::invalid_argument("gen_stereogram: image too small");
  if (max_d < 1 || max_d >= width / 4) {
    throw std::invalid_argument("gen_stereogram: max_d " + std::to_string(max_d) +
                                " must satisfy 1 <= max_d < width/4 (" + std::to_string(width / 4) +
                                ")");
  }
  Rng rng(Rng::mix(seed, 1));
  Tensor<float> texture = scene == SceneKind::dots ? dot_texture(rng, height, width)
                                                   : smooth_texture(rng, height, width);
  Tensor<float> field = disparity_field(rng, height, width, max_d, scene);
  StereoSample s = synthesize_pair(texture, field);
  s.id = "seed" + std::to_string(seed) + "_" + scene_name(scene);

  // LIDAR-like subsample of the dense maps
  Rng pick(Rng::mix(seed, 2));
  auto subsample = [&](const DisparityMap& dense) {
    std::vector<std::uint8_t> mask(dense.valid.size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      mask[i] = dense.valid[i] && pick.bernoulli(sparsity) ? 1 : 0;
    }
    return DisparityMap(dense.values, std::move(mask));
  };
  s.gt_left_sparse = subsample(s.gt_left);
  s.gt_right_sparse = subsample(s.gt_right);
  return s;
}

void save_sample(const std::string& dir, const StereoSample& sample, bool sparse_gt) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(dir) / sample.id;
  fs::create_directories(base);
  save_image((base / "left.ppm").string(), sample.left);
  save_image((base / "right.ppm").string(), sample.right);
  const DisparityMap& l = sparse_gt ? sample.gt_left_sparse : sample.gt_left;
  const DisparityMap& r = sparse_gt ? sample.gt_right_sparse : sample.gt_right;
  save_disparity((base / "disp_left.pgm16").string(), l);
  save_disparity((base / "disp_right.pgm16").string(), r);
}

StereoSample load_sample(const std::string& dir, const std::string& id) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(dir) / id;
  StereoSample s;
  s.id = id;
  s.left = load_image((base / "left.ppm").string());
  s.right = load_image((base / "right.ppm").string());
  s.gt_left = load_disparity((base / "disp_left.pgm16").string());
  s.gt_right = load_disparity((base / "disp_right.pgm16").string());
  s.gt_left_sparse = s.gt_left;
  s.gt_right_sparse = s.gt_right;
  return s;
}

void write_manifest(const std::string& dir, const std::vector<std::string>& ids) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / "manifest.txt");
  if (!out) throw std::runtime_error("cannot write manifest in '" + dir + "'");
  for (const auto& id : ids) out << id << "\n";
}

std::vector<std::string> read_manifest(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.txt");
  if (!in) throw std::runtime_error("no manifest in '" + dir + "'");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ids.push_back(line);
  }
  return ids;
}

}  // namespace stereokit

#include "stereokit/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace stereokit {

namespace {

struct Cursor {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error("decode error at byte " + std::to_string(pos) + ": " + msg);
  }

  std::uint8_t peek() const {
    if (pos >= bytes.size()) fail("unexpected end of data");
    return bytes[pos];
  }

  std::uint8_t take() {
    std::uint8_t b = peek();
    ++pos;
    return b;
  }

  // whitespace and '#' comments between header tokens
  void skip_separators() {
    for (;;) {
      if (pos >= bytes.size()) return;
      std::uint8_t b = bytes[pos];
      if (b == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (b == ' ' || b == '\t' || b == '\r' || b == '\n') {
        ++pos;
      } else {
        return;
      }
    }
  }

  int read_int(const char* what) {
    skip_separators();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
      fail(std::string("expected ") + what);
    }
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1 << 30) fail(std::string(what) + " out of range");
      ++pos;
    }
    return static_cast<int>(v);
  }
};

struct PnmHeader {
  char type;  // '5' or '6'
  int width = 0, height = 0, maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_header(const std::vector<std::uint8_t>& bytes) {
  Cursor c{bytes};
  if (c.take() != 'P') c.fail("not a PNM file (missing magic)");
  const char type = static_cast<char>(c.take());
  if (type != '5' && type != '6') c.fail("unsupported PNM type");
  PnmHeader h;
  h.type = type;
  h.width = c.read_int("width");
  h.height = c.read_int("height");
  h.maxval = c.read_int("maxval");
  if (h.width <= 0 || h.height <= 0) c.fail("non-positive image dims");
  // exactly one whitespace byte before the raster
  const std::uint8_t sep = c.take();
  if (sep != '\n' && sep != ' ' && sep != '\t' && sep != '\r') c.fail("missing raster separator");
  h.data_offset = c.pos;
  return h;
}

void check_raster_size(const PnmHeader& h, std::size_t total, std::size_t need) {
  if (total - h.data_offset < need) {
    throw std::runtime_error("decode error at byte " + std::to_string(total) +
                             ": truncated raster, need " + std::to_string(need) + " bytes, have " +
                             std::to_string(total - h.data_offset));
  }
}

std::string header_text(char type, int w, int h, int maxval) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "P%c\n%d %d\n%d\n", type, w, h, maxval);
  return buf;
}

}  // namespace

Tensor<float> decode_image(const std::vector<std::uint8_t>& bytes) {
  const PnmHeader h = parse_header(bytes);
  if (h.maxval != 255) {
    throw std::runtime_error("decode error at byte " + std::to_string(h.data_offset) +
                             ": expected 8-bit raster (maxval 255), got " +
                             std::to_string(h.maxval));
  }
  const int channels = h.type == '6' ? 3 : 1;
  const std::size_t need =
      static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) * channels;
  check_raster_size(h, bytes.size(), need);
  Tensor<float> img({h.height, h.width, channels});
  const std::uint8_t* src = bytes.data() + h.data_offset;
  for (std::int64_t i = 0; i < img.size(); ++i) {
    img[i] = static_cast<float>(src[i]) / 255.0f;
  }
  return img;
}

std::vector<std::uint8_t> encode_image(const Tensor<float>& image) {
  if (image.rank() != 3 || (image.dim(2) != 1 && image.dim(2) != 3)) {
    throw std::invalid_argument("encode_image: expected HxWx1 or HxWx3, got " +
                                shape_str(image.shape()));
  }
  const char type = image.dim(2) == 3 ? '6' : '5';
  const std::string head = header_text(type, image.dim(1), image.dim(0), 255);
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.reserve(out.size() + static_cast<std::size_t>(image.size()));
  for (std::int64_t i = 0; i < image.size(); ++i) {
    float v = image[i];
    v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
  }
  return out;
}

DisparityMap decode_disparity(const std::vector<std::uint8_t>& bytes) {
  const PnmHeader h = parse_header(bytes);
  if (h.type != '5') {
    throw std::runtime_error("decode error at byte 1: disparity raster must be single channel");
  }
  if (h.maxval != 65535) {
    throw std::runtime_error("decode error at byte " + std::to_string(h.data_offset) +
                             ": expected 16-bit raster (maxval 65535), got " +
                             std::to_string(h.maxval));
  }
  const std::size_t need =
      static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) * 2;
  check_raster_size(h, bytes.size(), need);
  Tensor<float> values({h.height, h.width});
  std::vector<std::uint8_t> valid(static_cast<std::size_t>(values.size()), 0);
  const std::uint8_t* src = bytes.data() + h.data_offset;
  for (std::int64_t i = 0; i < values.size(); ++i) {
    const std::uint32_t v = static_cast<std::uint32_t>(src[2 * i]) |
                            (static_cast<std::uint32_t>(src[2 * i + 1]) << 8);
    if (v > 0) {
      values[i] = static_cast<float>(v) / 256.0f;
      valid[static_cast<std::size_t>(i)] = 1;
    }
  }
  return DisparityMap(std::move(values), std::move(valid));
}

std::vector<std::uint8_t> encode_disparity(const DisparityMap& map) {
  const std::string head = header_text('5', map.width(), map.height(), 65535);
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.reserve(out.size() + static_cast<std::size_t>(map.values.size()) * 2);
  for (std::int64_t i = 0; i < map.values.size(); ++i) {
    std::uint32_t v = 0;
    if (map.valid[static_cast<std::size_t>(i)]) {
      const long q = std::lround(static_cast<double>(map.values[i]) * 256.0);
      v = static_cast<std::uint32_t>(q < 1 ? 1 : (q > 65535 ? 65535 : q));
    }
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::fseek(f, 0, SEEK_END);
  const long size = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size < 0 ? 0 : size));
  const std::size_t got = bytes.empty() ? 0 : std::fread(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (got != bytes.size()) throw std::runtime_error("short read from '" + path + "'");
  return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  const std::size_t put = bytes.empty() ? 0 : std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (put != bytes.size()) throw std::runtime_error("short write to '" + path + "'");
}

Tensor<float> load_image(const std::string& path) { return decode_image(read_file(path)); }

void save_image(const std::string& path, const Tensor<float>& image) {
  write_file(path, encode_image(image));
}

DisparityMap load_disparity(const std::string& path) { return decode_disparity(read_file(path)); }

void save_disparity(const std::string& path, const DisparityMap& map) {
  write_file(path, encode_disparity(map));
}

Tensor<float> crop_top_rows(const Tensor<float>& image, float fraction) {
  if (image.rank() != 3) {
    throw std::invalid_argument("crop_top_rows: expected HxWxC, got " + shape_str(image.shape()));
  }
  const int h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const int drop = static_cast<int>(std::lround(static_cast<double>(h) * fraction));
  if (drop <= 0) return image;
  if (drop >= h) throw std::invalid_argument("crop_top_rows: fraction removes every row");
  Tensor<float> out({h - drop, w, c});
  const std::int64_t row = static_cast<std::int64_t>(w) * c;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = image[drop * row + i];
  return out;
}

DisparityMap crop_top_rows(const DisparityMap& map, float fraction) {
  const int h = map.height(), w = map.width();
  const int drop = static_cast<int>(std::lround(static_cast<double>(h) * fraction));
  if (drop <= 0) return map;
  if (drop >= h) throw std::invalid_argument("crop_top_rows: fraction removes every row");
  Tensor<float> values({h - drop, w});
  std::vector<std::uint8_t> valid(static_cast<std::size_t>(values.size()));
  for (std::int64_t i = 0; i < values.size(); ++i) {
    values[i] = map.values[static_cast<std::int64_t>(drop) * w + i];
    valid[static_cast<std::size_t>(i)] = map.valid[static_cast<std::size_t>(drop * w + i)];
  }
  return DisparityMap(std::move(values), std::move(valid));
}

}  // namespace stereokit

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stereokit/disparity.hpp"
#include "stereokit/tensor.hpp"

namespace stereokit {

// NetPBM codecs. Images are 8-bit PGM (P5, HxWx1) or PPM (P6, HxWx3),
// values scaled to [0,1]; encode emits the canonical header so
// encode(decode(x)) is byte identical. Disparity maps use a raw 16-bit
// single-channel PGM with little-endian samples ('.pgm16'): stored value
// v > 0 means disparity v/256 with the pixel valid, v == 0 means invalid.
// Malformed input is rejected with the failing byte offset; nothing is
// decoded partially.

Tensor<float> decode_image(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_image(const Tensor<float>& image);

DisparityMap decode_disparity(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_disparity(const DisparityMap& map);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

Tensor<float> load_image(const std::string& path);
void save_image(const std::string& path, const Tensor<float>& image);
DisparityMap load_disparity(const std::string& path);
void save_disparity(const std::string& path, const DisparityMap& map);

// Drops the top `fraction` of rows (rounded to the nearest row count);
// mirrors the LIDAR-only training crop.
Tensor<float> crop_top_rows(const Tensor<float>& image, float fraction);
DisparityMap crop_top_rows(const DisparityMap& map, float fraction);

}  // namespace stereokit

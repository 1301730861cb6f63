#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "grvs/tensor.hpp"

namespace grvs {

/// 8-bit image, interleaved row-major (H x W x channels).
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;
};

/// Reads gray, gray+alpha, RGB or RGBA PNGs; alpha is dropped and 16-bit
/// samples are reduced to 8 bits.
ImageU8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageU8& image);

/// 3 x H x W floats in [0, 1] <-> 8-bit RGB, rounding to nearest.
ImageU8 tensor_to_image(const Tensor& chw);
Tensor image_to_tensor(const ImageU8& image);

/// Raw little-endian float32 sidecar without header.
void write_f32(const std::filesystem::path& path, std::span<const float> values);
std::vector<float> read_f32(const std::filesystem::path& path, size_t expected_count);

}  // namespace grvs

#include "grvs/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "grvs/errors.hpp"

namespace grvs {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

}  // namespace

ImageU8 read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  ImageU8 img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("malformed PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_packing(png);
  png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  const size_t stride = png_get_rowbytes(png, info);
  img.pixels.resize(stride * static_cast<size_t>(img.height));
  rows.resize(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y) rows[static_cast<size_t>(y)] = img.pixels.data() + stride * static_cast<size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::filesystem::path& path, const ImageU8& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw IoError("write_png supports 1 or 3 channels, got " + std::to_string(image.channels));
  }
  if (image.pixels.size() != static_cast<size_t>(image.width * image.height * image.channels)) {
    throw IoError("image buffer size mismatch for " + path.string());
  }
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const size_t stride = static_cast<size_t>(image.width * image.channels);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, image.pixels.data() + stride * static_cast<size_t>(y));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw IoError("failed flushing " + path.string());
}

ImageU8 tensor_to_image(const Tensor& chw) {
  if (chw.rank() != 3 || chw.dim(0) != 3) {
    throw ShapeError("expected 3 x H x W image, got " + to_string(chw.shape()));
  }
  ImageU8 img;
  img.height = static_cast<int>(chw.dim(1));
  img.width = static_cast<int>(chw.dim(2));
  img.channels = 3;
  const size_t hw = static_cast<size_t>(img.width * img.height);
  img.pixels.resize(3 * hw);
  auto src = chw.data();
  for (size_t i = 0; i < hw; ++i) {
    for (size_t c = 0; c < 3; ++c) {
      const float v = std::clamp(src[c * hw + i], 0.0f, 1.0f);
      img.pixels[3 * i + c] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
  }
  return img;
}

Tensor image_to_tensor(const ImageU8& image) {
  if (image.channels != 3) throw ShapeError("expected an RGB image");
  const size_t hw = static_cast<size_t>(image.width * image.height);
  std::vector<float> out(3 * hw);
  for (size_t i = 0; i < hw; ++i) {
    for (size_t c = 0; c < 3; ++c) out[c * hw + i] = image.pixels[3 * i + c] / 255.0f;
  }
  return Tensor(Shape{3, image.height, image.width}, std::move(out));
}

void write_f32(const std::filesystem::path& path, std::span<const float> values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string());
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size_bytes()));
  if (!os) throw IoError("failed writing " + path.string());
}

std::vector<float> read_f32(const std::filesystem::path& path, size_t expected_count) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<float> out(expected_count);
  is.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(expected_count * sizeof(float)));
  if (is.gcount() != static_cast<std::streamsize>(expected_count * sizeof(float)) ||
      is.peek() != std::char_traits<char>::eof()) {
    throw IoError(path.string() + " does not hold " + std::to_string(expected_count) + " floats");
  }
  return out;
}

}  // namespace grvs

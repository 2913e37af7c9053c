/* Copyright 2026 The orf Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "orf/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace orf {

std::uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

Tensor quantize_image(const Tensor& image) {
  Tensor out = Tensor::zeros(image.shape(), image.dtype());
  for (std::size_t i = 0; i < image.numel(); ++i)
    out.mutable_buffer().set(i, to_byte(image.at(i)) / 255.0);
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& rows,
               std::size_t height, std::size_t width, int color_type, std::size_t channels) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw ImageIoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw ImageIoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageIoError("failed to encode " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(rows.data() + r * width * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> read_png(const std::filesystem::path& path, std::size_t& height,
                                   std::size_t& width, bool rgb) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw ImageIoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw ImageIoError(path.string() + " is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("libpng initialization failed");
  }
  std::vector<std::uint8_t> data;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("failed to decode " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS) || (color & PNG_COLOR_MASK_ALPHA))
    png_set_strip_alpha(png);
  const bool is_gray = (color & PNG_COLOR_MASK_COLOR) == 0;
  if (rgb && is_gray) png_set_gray_to_rgb(png);
  if (!rgb && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  const std::size_t channels = rgb ? 3 : 1;
  data.resize(height * width * channels);
  for (std::size_t r = 0; r < height; ++r) png_read_row(png, data.data() + r * width * channels, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return data;
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3)
    throw ImageIoError("expected an image [3 x H x W], got " + shape_str(image.shape()));
  const std::size_t h = image.dim(1), w = image.dim(2), plane = h * w;
  std::vector<std::uint8_t> rows(plane * 3);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) rows[i * 3 + c] = to_byte(image.at(c * plane + i));
  write_png(path, rows, h, w, PNG_COLOR_TYPE_RGB, 3);
}

void write_png_gray(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                    std::size_t height, std::size_t width) {
  if (pixels.size() != height * width) throw ImageIoError("gray image size mismatch");
  write_png(path, pixels, height, width, PNG_COLOR_TYPE_GRAY, 1);
}

Tensor read_png_rgb(const std::filesystem::path& path) {
  std::size_t h = 0, w = 0;
  const auto data = read_png(path, h, w, true);
  Tensor out = Tensor::zeros({3, h, w});
  const std::size_t plane = h * w;
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) out.mutable_buffer().set(c * plane + i, data[i * 3 + c] / 255.0);
  return out;
}

std::vector<std::uint8_t> read_png_gray(const std::filesystem::path& path, std::size_t& height,
                                        std::size_t& width) {
  return read_png(path, height, width, false);
}

}  // namespace orf

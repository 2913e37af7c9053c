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

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "orf/tensor.hpp"

namespace orf {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear [0, 1] value -> byte: clamp, scale by 255, round half up.
std::uint8_t to_byte(double v);

// Rounds every value of an image [3 x H x W] to the nearest byte level so a
// PNG roundtrip is exact.
Tensor quantize_image(const Tensor& image);

void write_png_rgb(const std::filesystem::path& path, const Tensor& image);
void write_png_gray(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                    std::size_t height, std::size_t width);

// [3 x H x W] with values k / 255.
Tensor read_png_rgb(const std::filesystem::path& path);
std::vector<std::uint8_t> read_png_gray(const std::filesystem::path& path, std::size_t& height,
                                        std::size_t& width);

}  // namespace orf

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

#include <cmath>
#include <vector>

#include "orf/model.hpp"
#include "orf/rng.hpp"
#include "orf/scenegen.hpp"
#include "orf/tensor.hpp"

namespace orf::testing {

inline Tensor random_tensor(Rng& rng, const Shape& shape, double lo = -1, double hi = 1,
                            DType dt = default_dtype()) {
  Tensor t = Tensor::zeros(shape, dt);
  for (std::size_t i = 0; i < t.numel(); ++i) t.mutable_buffer().set(i, rng.uniform(lo, hi));
  return t;
}

inline ModelConfig small_model_config() {
  ModelConfig cfg;
  cfg.num_slots = 2;
  cfg.slot_dim = 8;
  cfg.input_resolution = 8;
  cfg.decoder_width = 16;
  cfg.frequencies = 3;
  cfg.frame.world_scale = 4.0;
  cfg.frame.viewer_center_depth = 4.5;
  cfg.frame.viewer_scale = 4.0;
  return cfg;
}

inline SlotSet random_slots(Rng& rng, std::size_t k, std::size_t d, DType dt = default_dtype()) {
  return {random_tensor(rng, {1, d}, -1, 1, dt), random_tensor(rng, {k, d}, -1, 1, dt)};
}

inline CameraView ring_camera(double azimuth, std::size_t res, double radius = 4.5) {
  const double e = 30.0 * M_PI / 180.0;
  const Vec3 target{0, 0, 0.3};
  const Vec3 eye =
      target + Vec3{std::cos(e) * std::cos(azimuth), std::cos(e) * std::sin(azimuth), std::sin(e)} *
                   radius;
  return look_at(eye, target, {0, 0, 1}, static_cast<double>(res), res, res);
}

// Pixel (row, col) containing the projection of a world point, or false when
// it is behind the camera or off-image.
inline bool project(const CameraView& cam, const Vec3& p, std::size_t& row, std::size_t& col) {
  const Vec3 v = cam.world_to_viewer(p);
  if (v.z >= 0) return false;
  const double u = cam.focal * v.x / -v.z + cam.cx;
  const double r = cam.cy - cam.focal * v.y / -v.z;
  if (u < 0 || r < 0 || u >= static_cast<double>(cam.width) || r >= static_cast<double>(cam.height))
    return false;
  row = static_cast<std::size_t>(r);
  col = static_cast<std::size_t>(u);
  return true;
}

inline double agreement(const std::vector<int>& a, const std::vector<std::uint8_t>& b) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == static_cast<int>(b[i]);
  return static_cast<double>(same) / static_cast<double>(a.size());
}

}  // namespace orf::testing

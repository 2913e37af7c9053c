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

#include <array>
#include <cstddef>
#include <stdexcept>

#include "orf/tensor.hpp"

namespace orf {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const;
  Vec3 normalized() const;
  bool operator==(const Vec3&) const = default;
};

class CameraError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Pinhole camera. Right-handed camera frame looking down -z with +y up;
// pixel (row v, column u) maps to the direction
// ((u + 0.5 - cx) / focal, -(v + 0.5 - cy) / focal, -1).
struct CameraView {
  double focal = 1.0;
  double cx = 0.0, cy = 0.0;
  std::size_t width = 0, height = 0;
  std::array<double, 16> cam_to_world{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  // Throws CameraError unless focal > 0, extents are positive, the rotation
  // block is orthonormal with determinant +1 within 1e-6 and the last row is
  // (0, 0, 0, 1).
  void validate() const;

  Vec3 position() const { return {cam_to_world[3], cam_to_world[7], cam_to_world[11]}; }
  Vec3 rotate(const Vec3& v) const;          // camera -> world direction
  Vec3 rotate_inverse(const Vec3& v) const;  // world -> camera direction
  Vec3 world_to_viewer(const Vec3& p) const;
  Vec3 viewer_to_world(const Vec3& p) const;

  // Same pose and field of view at another resolution.
  CameraView resized(std::size_t w, std::size_t h) const;

  bool operator==(const CameraView&) const = default;
};

// Camera at `eye` looking at `target`; principal point at the image center.
CameraView look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal,
                   std::size_t width, std::size_t height);

CameraView identity_camera(double focal, std::size_t width, std::size_t height);

// Applies the inverse pose to every row of points[N x 3]. Constant op.
Tensor world_to_viewer(const Tensor& points, const CameraView& view);
Tensor viewer_to_world(const Tensor& points, const CameraView& view);

}  // namespace orf

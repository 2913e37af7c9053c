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

#include "orf/camera.hpp"

#include <cmath>
#include <string>

namespace orf {

double Vec3::norm() const { return std::sqrt(dot(*this)); }

Vec3 Vec3::normalized() const {
  const double n = norm();
  return {x / n, y / n, z / n};
}

void CameraView::validate() const {
  if (!(focal > 0.0) || !std::isfinite(focal))
    throw CameraError("camera focal length must be positive, got " + std::to_string(focal));
  if (width == 0 || height == 0) throw CameraError("camera extents must be positive");
  for (double v : cam_to_world)
    if (!std::isfinite(v)) throw CameraError("camera pose has non-finite entries");
  const auto& m = cam_to_world;
  if (m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0)
    throw CameraError("camera pose must be a rigid transform with last row (0, 0, 0, 1)");
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double d = 0.0;
      for (int k = 0; k < 3; ++k) d += m[k * 4 + i] * m[k * 4 + j];
      if (std::abs(d - (i == j ? 1.0 : 0.0)) > 1e-6)
        throw CameraError("camera rotation is not orthonormal");
    }
  const Vec3 c0{m[0], m[4], m[8]}, c1{m[1], m[5], m[9]}, c2{m[2], m[6], m[10]};
  if (c0.cross(c1).dot(c2) < 0.0) throw CameraError("camera rotation is a reflection");
}

Vec3 CameraView::rotate(const Vec3& v) const {
  const auto& m = cam_to_world;
  return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[4] * v.x + m[5] * v.y + m[6] * v.z,
          m[8] * v.x + m[9] * v.y + m[10] * v.z};
}

Vec3 CameraView::rotate_inverse(const Vec3& v) const {
  const auto& m = cam_to_world;
  return {m[0] * v.x + m[4] * v.y + m[8] * v.z, m[1] * v.x + m[5] * v.y + m[9] * v.z,
          m[2] * v.x + m[6] * v.y + m[10] * v.z};
}

Vec3 CameraView::world_to_viewer(const Vec3& p) const { return rotate_inverse(p - position()); }

Vec3 CameraView::viewer_to_world(const Vec3& p) const { return rotate(p) + position(); }

CameraView CameraView::resized(std::size_t w, std::size_t h) const {
  CameraView out = *this;
  const double sx = static_cast<double>(w) / static_cast<double>(width);
  const double sy = static_cast<double>(h) / static_cast<double>(height);
  out.width = w;
  out.height = h;
  out.focal = focal * sx;
  out.cx = cx * sx;
  out.cy = cy * sy;
  return out;
}

CameraView look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal,
                   std::size_t width, std::size_t height) {
  const Vec3 back = (eye - target).normalized();  // camera +z
  const Vec3 right = up.cross(back).normalized();
  const Vec3 true_up = back.cross(right);
  CameraView v;
  v.focal = focal;
  v.width = width;
  v.height = height;
  v.cx = static_cast<double>(width) / 2.0;
  v.cy = static_cast<double>(height) / 2.0;
  v.cam_to_world = {right.x, true_up.x, back.x, eye.x, right.y, true_up.y, back.y, eye.y,
                    right.z, true_up.z, back.z, eye.z, 0,       0,         0,      1};
  v.validate();
  return v;
}

CameraView identity_camera(double focal, std::size_t width, std::size_t height) {
  CameraView v;
  v.focal = focal;
  v.width = width;
  v.height = height;
  v.cx = static_cast<double>(width) / 2.0;
  v.cy = static_cast<double>(height) / 2.0;
  return v;
}

namespace {

template <typename F>
Tensor map_points(const Tensor& points, const CameraView& view, F f) {
  if (points.rank() != 2 || points.dim(1) != 3)
    throw ShapeError("expected points [N x 3], got " + shape_str(points.shape()));
  view.validate();
  Tensor out = Tensor::zeros(points.shape(), points.dtype());
  dispatch(points.dtype(), [&]<typename T>(T) {
    const T* p = points.data<T>().data();
    T* o = out.mutable_data<T>().data();
    for (std::size_t i = 0; i < points.dim(0); ++i) {
      const Vec3 r = f(Vec3{double(p[i * 3]), double(p[i * 3 + 1]), double(p[i * 3 + 2])});
      o[i * 3] = static_cast<T>(r.x);
      o[i * 3 + 1] = static_cast<T>(r.y);
      o[i * 3 + 2] = static_cast<T>(r.z);
    }
  });
  return out;
}

}  // namespace

Tensor world_to_viewer(const Tensor& points, const CameraView& view) {
  return map_points(points, view, [&](const Vec3& p) { return view.world_to_viewer(p); });
}

Tensor viewer_to_world(const Tensor& points, const CameraView& view) {
  return map_points(points, view, [&](const Vec3& p) { return view.viewer_to_world(p); });
}

}  // namespace orf

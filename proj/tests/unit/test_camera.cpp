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

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "orf/camera.hpp"
#include "orf/ops.hpp"

using namespace orf;
using namespace orf::testing;

TEST_SUITE("camera") {
  TEST_CASE("identity pose leaves points unchanged") {
    const CameraView cam = identity_camera(10, 4, 4);
    Rng rng(1);
    const Tensor p = random_tensor(rng, {5, 3}, -3, 3, DType::kF64);
    const Tensor v = world_to_viewer(p, cam);
    for (std::size_t i = 0; i < p.numel(); ++i) CHECK(v.at(i) == p.at(i));
  }

  TEST_CASE("pure translation subtracts the camera position") {
    CameraView cam = identity_camera(10, 4, 4);
    cam.cam_to_world[3] = 1.5;
    cam.cam_to_world[7] = -2.0;
    cam.cam_to_world[11] = 0.25;
    const Vec3 v = cam.world_to_viewer({1, 1, 1});
    CHECK(v.x == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(v.y == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(v.z == doctest::Approx(0.75).epsilon(1e-15));
  }

  TEST_CASE("viewer and world transforms are inverse") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
      const CameraView cam = ring_camera(rng.uniform(0, 2 * M_PI), 16, rng.uniform(2, 6));
      cam.validate();
      const Vec3 p{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
      const Vec3 back = cam.viewer_to_world(cam.world_to_viewer(p));
      CHECK((back - p).norm() < 1e-6);
    }
    PrecisionScope f64(DType::kF64);
    const CameraView cam = ring_camera(0.7, 16);
    const Tensor p = random_tensor(rng, {20, 3}, -3, 3);
    const Tensor back = viewer_to_world(world_to_viewer(p, cam), cam);
    for (std::size_t i = 0; i < p.numel(); ++i) CHECK(std::abs(back.at(i) - p.at(i)) < 1e-12);
  }

  TEST_CASE("look_at points the principal axis at the target") {
    const CameraView cam = ring_camera(1.1, 9);
    const Vec3 dir = cam.rotate({0, 0, -1});
    const Vec3 want = (Vec3{0, 0, 0.3} - cam.position()).normalized();
    CHECK((dir - want).norm() < 1e-12);
    CHECK(cam.cx == 4.5);
    CHECK(cam.cy == 4.5);
    // +z world is up in the image.
    CHECK(cam.rotate({0, 1, 0}).z > 0);
  }

  TEST_CASE("invalid poses are rejected") {
    CameraView cam = identity_camera(10, 4, 4);
    cam.cam_to_world[0] = 2.0;
    CHECK_THROWS_AS(cam.validate(), CameraError);
    cam = identity_camera(10, 4, 4);
    cam.cam_to_world[0] = -1.0;  // reflection
    CHECK_THROWS_AS(cam.validate(), CameraError);
    cam = identity_camera(0, 4, 4);
    CHECK_THROWS_AS(cam.validate(), CameraError);
    cam = identity_camera(10, 0, 4);
    CHECK_THROWS_AS(cam.validate(), CameraError);
    cam = identity_camera(10, 4, 4);
    cam.cam_to_world[12] = 1.0;
    CHECK_THROWS_AS(cam.validate(), CameraError);
  }

  TEST_CASE("resized keeps the field of view") {
    const CameraView cam = ring_camera(0.3, 48);
    const CameraView half = cam.resized(24, 24);
    CHECK(half.focal == doctest::Approx(24.0));
    CHECK(half.cx == doctest::Approx(12.0));
    CHECK(half.cam_to_world == cam.cam_to_world);
  }
}

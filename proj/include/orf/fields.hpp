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

#include <string>
#include <vector>

#include "orf/camera.hpp"
#include "orf/nets.hpp"
#include "orf/tensor.hpp"

namespace orf {

// Per-component field outputs on a shared set of P query points.
struct RadianceSampleBatch {
  Tensor color;    // [C x P x 3], in [0, 1]
  Tensor density;  // [C x P], >= 0
};

// Axis-aligned region of the input camera's frame. Foreground density is
// forced to zero outside it while active.
struct LocalityBox {
  Vec3 min, max;
  bool active = false;

  void validate() const;  // min < max per axis
  bool contains(const Vec3& viewer_point) const;
};

// x, y in [-B, B] and depth in [depth_near, depth_far] (viewer z in
// [-depth_far, -depth_near]), with B the smallest half-width whose image
// footprint covers `coverage` of the view's pixel centers.
LocalityBox fit_locality_box(const CameraView& view, double depth_near, double depth_far,
                             double coverage = 0.9);

// Affine maps into the roughly unit cube the positional encoding expects.
struct FieldFrame {
  double world_scale = 1.0;        // world point / world_scale
  double viewer_center_depth = 0;  // viewer point shifted by (0, 0, depth) first
  double viewer_scale = 1.0;

  Tensor normalize_world(const Tensor& points) const;
  Tensor normalize_viewer(const Tensor& points) const;
};

struct FieldConfig {
  std::size_t latent_dim = 32;
  std::size_t width = 64;
  std::size_t hidden_layers = 5;
  // 1-based hidden layer that additionally receives [encoding, latent];
  // 0 disables the skip.
  std::size_t skip_layer = 3;
  std::size_t frequencies = 5;
};

// Latent-conditioned MLP: the first layer sees [encoding(x), z], the skip
// layer sees [h, encoding(x), z]; heads give ReLU density and sigmoid color.
// The point and latent halves of each conditioned layer are evaluated
// separately so one point set is shared by every latent.
class ConditionalField {
 public:
  ConditionalField() = default;
  ConditionalField(ParamRegistry& reg, const std::string& name, const FieldConfig& cfg, Rng& rng);

  // points[P x 3] (normalized), latents[C x D] -> C components on P points.
  RadianceSampleBatch decode(const Tensor& points, const Tensor& latents) const;
  const FieldConfig& config() const { return cfg_; }

 private:
  FieldConfig cfg_;
  PositionalEncoder encoder_;
  LinearMap first_point_, first_latent_;
  std::vector<LinearMap> hidden_;  // layers 2..L on h
  LinearMap skip_point_, skip_latent_;
  LinearMap density_head_, color_head_;
};

// Foreground decoder shared by all object slots; queried in the input
// camera's frame.
class ForegroundDecoder {
 public:
  ForegroundDecoder() = default;
  ForegroundDecoder(ParamRegistry& reg, const std::string& name, const FieldConfig& cfg,
                    const FieldFrame& frame, Rng& rng);

  // viewer_points[P x 3] (unnormalized viewer coordinates), latents[K x D].
  // Density is exactly zero outside an active box.
  RadianceSampleBatch decode(const Tensor& viewer_points, const Tensor& latents,
                             const LocalityBox& box) const;

  const ConditionalField& field() const { return field_; }

 private:
  FieldFrame frame_;
  ConditionalField field_;
};

// Background decoder; queried in world coordinates.
class BackgroundDecoder {
 public:
  BackgroundDecoder() = default;
  BackgroundDecoder(ParamRegistry& reg, const std::string& name, const FieldConfig& cfg,
                    const FieldFrame& frame, Rng& rng);

  RadianceSampleBatch decode(const Tensor& world_points, const Tensor& latent) const;

  const ConditionalField& field() const { return field_; }

 private:
  FieldFrame frame_;
  ConditionalField field_;
};

// Constant [1 x P] mask of box membership for viewer_points[P x 3].
Tensor box_mask(const Tensor& viewer_points, const LocalityBox& box);

}  // namespace orf

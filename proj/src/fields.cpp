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

#include "orf/fields.hpp"

#include <cmath>
#include <stdexcept>

#include "orf/ops.hpp"

namespace orf {

// ------------------------------------------------------------------- box --

void LocalityBox::validate() const {
  if (!(min.x < max.x && min.y < max.y && min.z < max.z))
    throw std::invalid_argument("locality box bounds must satisfy min < max on every axis");
}

bool LocalityBox::contains(const Vec3& p) const {
  return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
         p.z <= max.z;
}

LocalityBox fit_locality_box(const CameraView& view, double depth_near, double depth_far,
                             double coverage) {
  view.validate();
  if (!(depth_near > 0.0 && depth_near < depth_far))
    throw std::invalid_argument("locality box depth range must satisfy 0 < near < far");
  if (!(coverage > 0.0 && coverage <= 1.0))
    throw std::invalid_argument("locality box coverage must lie in (0, 1]");
  // A pixel ray meets the box iff its footprint at the nearest depth fits
  // inside [-B, B]^2, so coverage is monotone in B.
  auto covered = [&](double half) {
    std::size_t hits = 0;
    for (std::size_t v = 0; v < view.height; ++v)
      for (std::size_t u = 0; u < view.width; ++u) {
        const double x = (static_cast<double>(u) + 0.5 - view.cx) / view.focal * depth_near;
        const double y = (static_cast<double>(v) + 0.5 - view.cy) / view.focal * depth_near;
        if (std::abs(x) <= half && std::abs(y) <= half) ++hits;
      }
    return static_cast<double>(hits) / static_cast<double>(view.width * view.height);
  };
  double lo = 0.0;
  double hi = depth_near * (static_cast<double>(std::max(view.width, view.height)) + 1.0) /
              view.focal;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (covered(mid) >= coverage ? hi : lo) = mid;
  }
  LocalityBox box;
  box.min = {-hi, -hi, -depth_far};
  box.max = {hi, hi, -depth_near};
  box.active = true;
  return box;
}

Tensor box_mask(const Tensor& viewer_points, const LocalityBox& box) {
  const std::size_t p = viewer_points.dim(0);
  Tensor mask = Tensor::zeros({1, p}, viewer_points.dtype());
  Buffer& m = mask.mutable_buffer();
  const Buffer& v = viewer_points.buffer();
  for (std::size_t i = 0; i < p; ++i)
    if (box.contains({v.get(i * 3), v.get(i * 3 + 1), v.get(i * 3 + 2)})) m.set(i, 1.0);
  return mask;
}

// ----------------------------------------------------------------- frame --

Tensor FieldFrame::normalize_world(const Tensor& points) const {
  return ops::scale(points, 1.0 / world_scale);
}

Tensor FieldFrame::normalize_viewer(const Tensor& points) const {
  Tensor shift = Tensor::from({1, 3}, {0.0, 0.0, viewer_center_depth}, points.dtype());
  return ops::scale(points + shift, 1.0 / viewer_scale);
}

// ----------------------------------------------------------------- field --

ConditionalField::ConditionalField(ParamRegistry& reg, const std::string& name,
                                   const FieldConfig& cfg, Rng& rng)
    : cfg_(cfg), encoder_(cfg.frequencies, true) {
  if (cfg.hidden_layers == 0 || cfg.width == 0)
    throw std::invalid_argument("field needs at least one hidden layer of positive width");
  if (cfg.skip_layer == 1 || cfg.skip_layer > cfg.hidden_layers)
    throw std::invalid_argument("field skip layer must lie in [2, hidden_layers] or be 0");
  const std::size_t e = encoder_.output_dim();
  const std::size_t d = cfg.latent_dim;
  const std::size_t w = cfg.width;
  const Init xavier = Init::kXavierUniform;
  first_point_ = LinearMap(reg, name + ".l1.point", e, w, true, rng, xavier, e + d);
  first_latent_ = LinearMap(reg, name + ".l1.latent", d, w, false, rng, xavier, e + d);
  for (std::size_t l = 2; l <= cfg.hidden_layers; ++l) {
    const std::size_t fan = l == cfg.skip_layer ? w + e + d : w;
    hidden_.emplace_back(reg, name + ".l" + std::to_string(l), w, w, true, rng, xavier, fan);
    if (l == cfg.skip_layer) {
      skip_point_ = LinearMap(reg, name + ".l" + std::to_string(l) + ".point", e, w, false, rng,
                              xavier, fan);
      skip_latent_ = LinearMap(reg, name + ".l" + std::to_string(l) + ".latent", d, w, false,
                               rng, xavier, fan);
    }
  }
  density_head_ = LinearMap(reg, name + ".density", w, 1, true, rng, xavier);
  color_head_ = LinearMap(reg, name + ".color", w, 3, true, rng, xavier);
}

RadianceSampleBatch ConditionalField::decode(const Tensor& points, const Tensor& latents) const {
  if (latents.rank() != 2 || latents.dim(1) != cfg_.latent_dim)
    throw ShapeError("field latents must be [C x " + std::to_string(cfg_.latent_dim) + "], got " +
                     shape_str(latents.shape()));
  const std::size_t c = latents.dim(0);
  const std::size_t p = points.dim(0);
  const std::size_t w = cfg_.width;
  const Tensor pe = encoder_(points);
  auto conditioned = [&](const Tensor& point_part, const Tensor& latent_part) {
    return ops::reshape(point_part, {1, p, w}) + ops::reshape(latent_part, {c, 1, w});
  };
  Tensor h = ops::relu(conditioned(first_point_(pe), first_latent_(latents)));
  h = ops::reshape(h, {c * p, w});
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    const std::size_t layer = i + 2;
    Tensor pre = hidden_[i](h);
    if (layer == cfg_.skip_layer) {
      pre = ops::reshape(ops::reshape(pre, {c, p, w}) +
                             conditioned(skip_point_(pe), skip_latent_(latents)),
                         {c * p, w});
    }
    h = ops::relu(pre);
  }
  RadianceSampleBatch out;
  out.density = ops::reshape(ops::relu(density_head_(h)), {c, p});
  out.color = ops::reshape(ops::sigmoid(color_head_(h)), {c, p, 3});
  return out;
}

// -------------------------------------------------------------- decoders --

ForegroundDecoder::ForegroundDecoder(ParamRegistry& reg, const std::string& name,
                                     const FieldConfig& cfg, const FieldFrame& frame, Rng& rng)
    : frame_(frame), field_(reg, name, cfg, rng) {}

RadianceSampleBatch ForegroundDecoder::decode(const Tensor& viewer_points, const Tensor& latents,
                                              const LocalityBox& box) const {
  RadianceSampleBatch out = field_.decode(frame_.normalize_viewer(viewer_points), latents);
  if (box.active) out.density = out.density * box_mask(viewer_points, box);
  return out;
}

BackgroundDecoder::BackgroundDecoder(ParamRegistry& reg, const std::string& name,
                                     const FieldConfig& cfg, const FieldFrame& frame, Rng& rng)
    : frame_(frame), field_(reg, name, cfg, rng) {}

RadianceSampleBatch BackgroundDecoder::decode(const Tensor& world_points,
                                              const Tensor& latent) const {
  return field_.decode(frame_.normalize_world(world_points), latent);
}

}  // namespace orf

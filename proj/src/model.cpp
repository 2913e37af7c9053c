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

#include "orf/model.hpp"

#include <stdexcept>

#include "orf/ops.hpp"
#include "orf/rng.hpp"

namespace orf {

namespace {

FieldConfig field_config(const ModelConfig& cfg, std::size_t layers) {
  FieldConfig f;
  f.latent_dim = cfg.slot_dim;
  f.width = cfg.decoder_width;
  f.hidden_layers = layers;
  f.skip_layer = cfg.skip_layer <= layers ? cfg.skip_layer : 0;
  f.frequencies = cfg.frequencies;
  return f;
}

}  // namespace

SceneModel::SceneModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.num_slots == 0) throw std::invalid_argument("model needs at least one foreground slot");
  Rng enc_rng(derive_seed(seed, "init.encoder"));
  Rng att_rng(derive_seed(seed, "init.attention"));
  Rng fg_rng(derive_seed(seed, "init.foreground"));
  Rng bg_rng(derive_seed(seed, "init.background"));
  encoder_ = UNetEncoder(params_, "encoder",
                         {cfg.input_resolution, cfg.slot_dim, cfg.encoder_stem}, enc_rng);
  attention_ =
      SlotAttention(params_, "slots", cfg.slot_dim, cfg.attention_iterations, att_rng);
  foreground_ = ForegroundDecoder(params_, "fg", field_config(cfg, cfg.foreground_layers),
                                  cfg.frame, fg_rng);
  background_ = BackgroundDecoder(params_, "bg", field_config(cfg, cfg.background_layers),
                                  cfg.frame, bg_rng);
}

SlotAttentionResult SceneModel::infer(const Tensor& image, std::uint64_t slot_seed) const {
  Tensor input = image;
  const std::size_t r = cfg_.input_resolution;
  if (image.rank() == 3 && (image.dim(1) != r || image.dim(2) != r)) {
    NoGradGuard no_grad;
    input = ops::bilinear_resize(image.detach(), r, r);
  }
  const FeatureMap fm = encoder_.extract(input);
  const SlotSet init = sample_slots(attention_.priors(), cfg_.num_slots, slot_seed);
  return attention_.run(fm.features, init);
}

bool SlotEdits::empty() const {
  for (const Vec3& o : offsets)
    if (o.x != 0.0 || o.y != 0.0 || o.z != 0.0) return false;
  for (bool r : removed)
    if (r) return false;
  return true;
}

NeuralScene::NeuralScene(const SceneModel& model, SlotSet slots, CameraView input_view,
                         LocalityBox box, SlotEdits edits)
    : model_(&model),
      slots_(std::move(slots)),
      input_view_(input_view),
      box_(box),
      edits_(std::move(edits)) {
  input_view_.validate();
  const std::size_t k = slots_.num_foreground();
  if (edits_.offsets.empty()) edits_.offsets.assign(k, Vec3{});
  if (edits_.removed.empty()) edits_.removed.assign(k, false);
  if (edits_.offsets.size() != k || edits_.removed.size() != k)
    throw std::invalid_argument("slot edits must cover every foreground slot");
  if (box_.active) box_.validate();
}

RadianceSampleBatch NeuralScene::query(const Tensor& world_points) const {
  const std::size_t k = slots_.num_foreground();
  RadianceSampleBatch bg = model_->background().decode(world_points, slots_.background);

  bool shifted = false;
  for (const Vec3& o : edits_.offsets) shifted = shifted || !(o == Vec3{});
  RadianceSampleBatch fg;
  if (!shifted) {
    fg = model_->foreground().decode(world_to_viewer(world_points, input_view_),
                                     slots_.foreground, box_);
  } else {
    std::vector<Tensor> colors, densities;
    for (std::size_t i = 0; i < k; ++i) {
      Tensor pts = world_points;
      const Vec3& o = edits_.offsets[i];
      if (!(o == Vec3{}))
        pts = world_points - Tensor::from({1, 3}, {o.x, o.y, o.z}, world_points.dtype());
      RadianceSampleBatch one = model_->foreground().decode(
          world_to_viewer(pts, input_view_), ops::slice(slots_.foreground, 0, i, i + 1), box_);
      colors.push_back(one.color);
      densities.push_back(one.density);
    }
    fg.color = ops::concat(colors, 0);
    fg.density = ops::concat(densities, 0);
  }
  bool any_removed = false;
  for (bool r : edits_.removed) any_removed = any_removed || r;
  if (any_removed) {
    Tensor keep = Tensor::ones({k, 1}, fg.density.dtype());
    for (std::size_t i = 0; i < k; ++i)
      if (edits_.removed[i]) keep.mutable_buffer().set(i, 0.0);
    fg.density = fg.density * keep;
  }
  RadianceSampleBatch out;
  out.color = ops::concat({bg.color, fg.color}, 0);
  out.density = ops::concat({bg.density, fg.density}, 0);
  return out;
}

}  // namespace orf

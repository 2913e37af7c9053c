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
#include <vector>

#include "orf/camera.hpp"
#include "orf/encoder.hpp"
#include "orf/fields.hpp"
#include "orf/nets.hpp"
#include "orf/renderer.hpp"

namespace orf {

struct ModelConfig {
  std::size_t num_slots = 4;  // K foreground slots
  std::size_t slot_dim = 32;  // D
  std::size_t input_resolution = 48;
  bool encoder_stem = false;
  std::size_t attention_iterations = 3;
  std::size_t decoder_width = 64;
  std::size_t foreground_layers = 5;
  std::size_t background_layers = 3;
  std::size_t skip_layer = 3;
  std::size_t frequencies = 5;
  FieldFrame frame{6.0, 4.5, 3.0};  // room half-extent; camera distance; object spread
};

// Encoder, slot attention, and the two decoders, with every parameter in
// one registry.
class SceneModel {
 public:
  SceneModel(const ModelConfig& cfg, std::uint64_t seed);
  SceneModel(const SceneModel&) = delete;
  SceneModel& operator=(const SceneModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }

  // image [3 x H x W] in [0, 1]; resized to the encoder resolution when needed.
  SlotAttentionResult infer(const Tensor& image, std::uint64_t slot_seed) const;

  const UNetEncoder& encoder() const { return encoder_; }
  const SlotAttention& attention() const { return attention_; }
  const ForegroundDecoder& foreground() const { return foreground_; }
  const BackgroundDecoder& background() const { return background_; }

 private:
  ModelConfig cfg_;
  ParamRegistry params_;
  UNetEncoder encoder_;
  SlotAttention attention_;
  ForegroundDecoder foreground_;
  BackgroundDecoder background_;
};

// Query-time edits per foreground slot: the slot's field is evaluated at
// x - offset (world units), and removed slots emit zero density.
struct SlotEdits {
  std::vector<Vec3> offsets;
  std::vector<bool> removed;

  bool empty() const;
};

// A scene inferred from one input view: the background decoded in world
// space, foreground slots in the input camera's frame.
class NeuralScene : public RadianceSource {
 public:
  NeuralScene(const SceneModel& model, SlotSet slots, CameraView input_view,
              LocalityBox box = {}, SlotEdits edits = {});

  std::size_t components() const override { return slots_.num_foreground() + 1; }
  RadianceSampleBatch query(const Tensor& world_points) const override;

  const SlotSet& slots() const { return slots_; }
  const CameraView& input_view() const { return input_view_; }
  const LocalityBox& box() const { return box_; }
  const SlotEdits& edits() const { return edits_; }

 private:
  const SceneModel* model_;
  SlotSet slots_;
  CameraView input_view_;
  LocalityBox box_;
  SlotEdits edits_;
};

}  // namespace orf

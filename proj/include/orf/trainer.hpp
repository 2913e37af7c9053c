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
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "orf/checkpoint.hpp"
#include "orf/losses.hpp"
#include "orf/model.hpp"
#include "orf/optim.hpp"
#include "orf/scenegen.hpp"

namespace orf {

struct TrainConfig {
  std::size_t coarse_steps = 30000;
  std::size_t fine_steps = 30000;
  std::size_t coarse_resolution = 48;
  std::size_t full_resolution = 96;
  std::size_t patch_size = 48;
  std::size_t samples_coarse = 48;
  std::size_t samples_fine = 64;
  bool jitter = true;
  std::size_t chunk_rays = 256;

  double lr = 3e-4;
  double disc_lr = 1e-3;
  AdamConfig model_adam{0.9, 0.999, 1e-8};
  AdamConfig disc_adam{0.0, 0.9, 1e-8};
  std::size_t warmup_steps = 100;
  std::size_t decay_period = 0;  // 0: total steps / 6
  std::size_t max_halvings = 3;

  double locality_fraction = 0.3;  // of coarse steps
  double box_depth_near = 2.5;     // viewer depth range of the box
  double box_depth_far = 6.5;
  double box_coverage = 0.9;

  double percept_onset = 1.0 / 6.0;  // fraction of total steps
  bool adversarial = false;
  double adversarial_onset = 1.0 / 6.0;
  LossWeights weights;

  std::uint64_t seed = 0;

  std::size_t total_steps() const { return coarse_steps + fine_steps; }
  // Throws std::invalid_argument naming the violated rule.
  void validate() const;
};

enum class Stage { kCoarse, kFine };
const char* stage_name(Stage s);

double lr_at(std::uint64_t step, double base, const TrainConfig& cfg);

struct StepMetrics {
  std::uint64_t step = 0;
  Stage stage = Stage::kCoarse;
  std::size_t scene = 0;
  double loss = 0, recon = 0, percept = 0, adv = 0;
  double disc_loss = 0, r1 = 0;
  double lr = 0, grad_norm = 0;
  bool box_active = false, skipped = false;
  double seconds = 0;
};

struct RunOptions {
  std::filesystem::path out_dir;  // log and checkpoints; empty disables both
  std::size_t checkpoint_every = 1000;
  std::size_t eval_every = 0;
  std::function<void(std::uint64_t step, const class Trainer&)> on_eval;
  std::function<void(const StepMetrics&)> on_step;
  std::uint64_t stop_after = 0;  // run at most this many steps (0: to the end)
};

// Owns the model, the discriminator, the frozen feature extractor and both
// optimizers. Every random choice in a step is keyed by (seed, step), so a
// run restored from a checkpoint continues bit-identically.
class Trainer {
 public:
  Trainer(const ModelConfig& model_cfg, const TrainConfig& cfg);

  const TrainConfig& config() const { return cfg_; }
  const ModelConfig& model_config() const { return model_->config(); }
  SceneModel& model() { return *model_; }
  const SceneModel& model() const { return *model_; }
  const ParamRegistry& aux_params() const { return aux_; }
  std::uint64_t next_step() const { return next_step_; }
  std::uint64_t digest() const { return digest_; }

  Stage stage_at(std::uint64_t step) const;
  bool box_active(std::uint64_t step) const;
  bool percept_active(std::uint64_t step) const;
  bool adversarial_active(std::uint64_t step) const;
  LocalityBox locality_box(const CameraView& input_view, bool active) const;
  std::size_t scene_index(std::uint64_t step, std::size_t count) const;

  // Runs step next_step() on the scene it selects and advances.
  StepMetrics train_step(const std::vector<SceneRecord>& data);
  // Runs `step` on `scene` without touching the step counter.
  StepMetrics train_step_on(const SceneRecord& scene, std::uint64_t step);

  void run(const std::vector<SceneRecord>& data, const RunOptions& opts);

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& ckpt, bool force = false);

 private:
  TrainConfig cfg_;
  std::unique_ptr<SceneModel> model_;
  ParamRegistry aux_;
  FeatureExtractor extractor_;
  Discriminator disc_;
  std::vector<std::string> disc_names_;
  Adam model_opt_, disc_opt_;
  std::uint64_t next_step_ = 0;
  std::uint64_t digest_ = 0;
};

// Rebuilds the model recorded in a trainer checkpoint (configuration from
// the metadata, parameters from the "model." entries).
std::unique_ptr<SceneModel> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace orf

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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "orf/config.hpp"

namespace orf::cli {

// Bad input the user can fix: paths, files, flags. Exits with code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A check the command ran came back negative (e.g. a failed gradient check).
// Exits with code 3.
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenDataArgs {
  std::filesystem::path out;
  std::optional<std::size_t> count;
};

struct TrainArgs {
  std::filesystem::path data, out;
  std::optional<std::filesystem::path> resume;
  bool force = false;
  std::size_t checkpoint_every = 1000;
  std::size_t eval_every = 0;
  std::size_t progress_every = 100;
  std::uint64_t stop_after = 0;
};

struct EvalArgs {
  std::optional<std::filesystem::path> ckpt;
  bool oracle = false;
  std::filesystem::path data;
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> max_scenes;
  bool seed_given = false;
};

struct RenderArgs {
  std::filesystem::path ckpt, scene, out;
  std::size_t orbit = 0;  // 0: the scene's own cameras
};

struct EditArgs {
  std::filesystem::path ckpt, scene, plan, out;
  std::optional<std::filesystem::path> swap_scene;
};

struct GradcheckArgs {
  std::string module = "all";
  std::size_t trials = 20;
};

void gen_data(const Config& cfg, const GenDataArgs& args);
void train(const Config& cfg, const TrainArgs& args);
void eval(const Config& cfg, const EvalArgs& args);
void render(const Config& cfg, const RenderArgs& args);
void edit(const Config& cfg, const EditArgs& args);
void gradcheck(const Config& cfg, const GradcheckArgs& args);

}  // namespace orf::cli

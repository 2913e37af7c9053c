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
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "orf/eval.hpp"
#include "orf/model.hpp"
#include "orf/scenegen.hpp"
#include "orf/trainer.hpp"

namespace orf {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a command needs. Every key has a default; `config dump` prints
// the full tree.
struct Config {
  std::uint64_t seed = 0;  // also the training seed; train.seed is not a key of its own
  std::size_t threads = 1;
  SceneGenConfig scenegen;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
};

// Serialization writes every field. Parsing keeps defaults for missing keys
// and throws ConfigError naming the dotted key path on unknown keys or type
// errors.
nlohmann::json to_json(const SceneGenConfig& c);
nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const EvalConfig& c);
nlohmann::json to_json(const Config& c);
void from_json(const nlohmann::json& j, SceneGenConfig& c, const std::string& path = "scenegen");
void from_json(const nlohmann::json& j, ModelConfig& c, const std::string& path = "model");
void from_json(const nlohmann::json& j, TrainConfig& c, const std::string& path = "train");
void from_json(const nlohmann::json& j, EvalConfig& c, const std::string& path = "eval");
void from_json(const nlohmann::json& j, Config& c);

Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);
std::string dump_config(const Config& c);

std::string canonical_json(const SceneGenConfig& c);
// Identifies checkpoints: model and training configuration, seed included.
std::uint64_t config_digest(const ModelConfig& model, const TrainConfig& train);

}  // namespace orf

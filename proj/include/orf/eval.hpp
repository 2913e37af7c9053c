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
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "orf/losses.hpp"
#include "orf/model.hpp"
#include "orf/scenegen.hpp"

namespace orf {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalConfig {
  std::size_t samples = 64;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t max_scenes = 0;  // 0: all
  std::size_t input_view = 0;
};

// Adjusted Rand index over the pixels where `mask` is true (all pixels when
// the mask is empty). Both partitions single-cluster, or any other case
// where the index cannot exceed its expectation, gives 1. Throws EvalError
// on an empty selection or mismatched sizes.
double ari(std::span<const int> truth, std::span<const int> pred, std::span<const bool> mask = {});

// 10 log10(1 / MSE); +infinity when the images are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();
double psnr(const Tensor& a, const Tensor& b);

// Mean SSIM of the channel-mean grayscale images over all valid 11x11
// Gaussian (sigma 1.5) windows, C1 = 0.01^2, C2 = 0.03^2.
double ssim(const Tensor& a, const Tensor& b);

// Random-feature perceptual distance: the perceptual loss under a frozen
// random extractor. Not LPIPS.
double rfpd(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor);

struct SceneEval {
  std::uint64_t seed = 0;
  std::string scene;
  double ari = 0, fg_ari = 0, nv_ari = 0, nv_fg_ari = 0;
  double psnr = 0, ssim = 0, rfpd = 0;  // novel views
  double random_ari = 0;  // uniform labels over the source's components, input view
};

struct MetricSummary {
  double mean = 0, std = 0;  // across seeds of the per-seed scene means
};

struct EvalReport {
  std::vector<SceneEval> rows;
  std::vector<std::pair<std::string, MetricSummary>> aggregate;

  const MetricSummary& metric(const std::string& name) const;
  nlohmann::json to_json() const;
  std::string table() const;
};

// Builds the scene to evaluate from a record's input view.
using SourceFactory = std::function<std::unique_ptr<RadianceSource>(
    const SceneRecord& scene, std::size_t input_view, std::uint64_t seed)>;

SceneEval eval_scene(const RadianceSource& source, const SceneRecord& scene, const EvalConfig& cfg,
                     const FeatureExtractor& extractor, std::uint64_t seed);

EvalReport eval_run(const SourceFactory& make_source, const std::vector<SceneRecord>& data,
                    const EvalConfig& cfg, const FeatureExtractor& extractor);

// Slots inferred from the input view under a seed-keyed initialization.
SourceFactory model_source(const SceneModel& model);
// Scenegen's analytic fields as oracle decoders.
SourceFactory analytic_source();

// Extractor used for RFPD when none comes from a checkpoint.
FeatureExtractor default_extractor(ParamRegistry& reg, std::uint64_t seed);

// ARI of uniformly random labels in [0, components) against `truth`.
double random_label_ari(std::span<const int> truth, std::size_t components, std::uint64_t seed);

}  // namespace orf

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
#include <string>
#include <vector>

#include "orf/nets.hpp"
#include "orf/tensor.hpp"

namespace orf {

// Channels (x, y, -x, -y) with x = 2c/(W-1) - 1 over columns and
// y = 2r/(H-1) - 1 over rows (0 for a single row or column). [4 x H x W]
Tensor coordinate_channels(std::size_t height, std::size_t width);

struct FeatureMap {
  Tensor features;  // [N x D], row-major over (row, column)
  std::size_t height = 0, width = 0;
};

struct EncoderConfig {
  std::size_t resolution = 48;  // square input
  std::size_t channels = 32;    // D
  // Extra stride-1 stem before a stride-2 first block; halves the output.
  bool stem = false;
};

// U-net: conv1, conv2 (stride 2), conv3 (stride 2), conv4, upsample + skip
// from conv2 into conv5, upsample + skip from conv1 into conv6. ReLU after
// every convolution.
class UNetEncoder {
 public:
  UNetEncoder() = default;
  UNetEncoder(ParamRegistry& reg, const std::string& name, const EncoderConfig& cfg, Rng& rng);

  // image [3 x R x R] with R = cfg.resolution.
  FeatureMap extract(const Tensor& image) const;
  std::size_t output_resolution() const;
  const EncoderConfig& config() const { return cfg_; }

 private:
  struct Conv {
    Tensor weight, bias;
    std::size_t stride = 1;
  };
  Conv make_conv(ParamRegistry& reg, const std::string& name, std::size_t in, std::size_t out,
                 std::size_t stride, Rng& rng);
  static Tensor apply(const Conv& c, const Tensor& x);

  EncoderConfig cfg_;
  bool has_stem_ = false;
  Conv conv0_, conv1_, conv2_, conv3_, conv4_, conv5_, conv6_;
};

struct SlotSet {
  Tensor background;  // [1 x D]
  Tensor foreground;  // [K x D]

  std::size_t num_foreground() const { return foreground.dim(0); }
  std::size_t dim() const { return background.dim(1); }
  SlotSet detached() const { return {background.detach(), foreground.detach()}; }
};

// Gaussian priors, scales stored as log sigma.
struct SlotPriors {
  Tensor mu_bg, log_sigma_bg;  // [1 x D]
  Tensor mu_fg, log_sigma_fg;  // [1 x D]
};

// slot = mu + exp(log_sigma) * eps with eps drawn from Rng(seed): first the
// background row, then the K foreground rows.
SlotSet sample_slots(const SlotPriors& priors, std::size_t k, std::uint64_t seed);

struct SlotAttentionResult {
  SlotSet slots;
  Tensor attention;  // [N x (K+1)] from the last iteration, column 0 = background
  Tensor weights;    // attention normalized over features, same shape
  bool collapsed = false;
};

// Foreground slots whose pairwise cosine similarity exceeds 0.999.
bool slots_collapsed(const Tensor& foreground, double threshold = 0.999);

class SlotAttention {
 public:
  SlotAttention() = default;
  SlotAttention(ParamRegistry& reg, const std::string& name, std::size_t dim,
                std::size_t iterations, Rng& rng);

  SlotAttentionResult run(const Tensor& features, const SlotSet& init) const;

  const SlotPriors& priors() const { return priors_; }
  std::size_t iterations() const { return iterations_; }

  // Per-slot normalizer guard; only applied to columns whose total attention
  // underflowed to zero.
  static constexpr double kColumnEpsilon = 1e-12;

 private:
  std::size_t dim_ = 0, iterations_ = 3;
  SlotPriors priors_;
  LinearMap key_, query_bg_, query_fg_, value_bg_, value_fg_;
  GruCell gru_bg_, gru_fg_;
  Mlp mlp_bg_, mlp_fg_;
};

}  // namespace orf

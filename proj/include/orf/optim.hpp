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

#include "orf/tensor.hpp"

namespace orf {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moments share each
// parameter's dtype so checkpoints round-trip them exactly.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor> params, AdamConfig cfg);

  // One update with learning rate `lr` from the accumulated gradients, which
  // are then cleared. Parameters without a gradient are left alone.
  void step(double lr);

  std::uint64_t steps() const { return t_; }
  void set_steps(std::uint64_t t) { t_ = t; }
  const std::vector<Tensor>& params() const { return params_; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_, m_, v_;
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
};

// L2 norm over all accumulated gradients.
double grad_norm(const std::vector<Tensor>& params);

}  // namespace orf

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

#include "orf/rng.hpp"
#include "orf/tensor.hpp"

namespace orf {

struct NamedParam {
  std::string name;
  Tensor value;
  bool trainable = true;
};

// Every parameter of a model, in registration order. Names are unique.
// Frozen entries are persisted but excluded from optimization.
class ParamRegistry {
 public:
  Tensor add(const std::string& name, Tensor value, bool trainable = true);

  const std::vector<NamedParam>& entries() const { return entries_; }
  bool contains(const std::string& name) const;
  const NamedParam& find(const std::string& name) const;
  std::vector<Tensor> trainable() const;
  std::size_t scalar_count() const;

  // Deep copy of all values, for restore-and-skip.
  std::vector<Buffer> snapshot() const;
  void restore(const std::vector<Buffer>& saved);
  void zero_grads();

  // FNV-1a over names, shapes and raw value bytes.
  std::uint64_t checksum() const;

 private:
  std::vector<NamedParam> entries_;
};

// kFanInUniform: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
// kHeUniform: U(-sqrt(6/fan_in), sqrt(6/fan_in)), for ReLU stacks.
// kXavierUniform: U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
enum class Init { kFanInUniform, kHeUniform, kXavierUniform, kZero };

Tensor init_weight(Rng& rng, const Shape& shape, std::size_t fan_in, std::size_t fan_out, Init kind);

class LinearMap {
 public:
  LinearMap() = default;
  // fan_in overrides the initialization fan-in when this map is one block of
  // a wider layer.
  LinearMap(ParamRegistry& reg, const std::string& name, std::size_t in, std::size_t out,
            bool bias, Rng& rng, Init init = Init::kFanInUniform, std::size_t fan_in = 0);

  // x[... x in] -> [... x out]
  Tensor operator()(const Tensor& x) const;

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Tensor weight_;  // out x in
  Tensor bias_;    // out, or undefined
};

// r = sigmoid(W_r [x, h] + b_r), u = sigmoid(W_u [x, h] + b_u),
// c = tanh(W_c [x, r*h] + b_c), h' = (1 - u) h + u c.
class GruCell {
 public:
  GruCell() = default;
  GruCell(ParamRegistry& reg, const std::string& name, std::size_t dim, Rng& rng);

  Tensor step(const Tensor& state, const Tensor& input) const;
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_ = 0;
  LinearMap reset_, update_, candidate_;
};

// Two-layer ReLU MLP; used as a residual slot refinement.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamRegistry& reg, const std::string& name, std::size_t dim, std::size_t hidden, Rng& rng);
  Tensor operator()(const Tensor& x) const;

 private:
  LinearMap first_, second_;
};

// Layout per point: [p, sin(f_0 p), cos(f_0 p), sin(f_1 p), cos(f_1 p), ...]
// with f_k = 2^k * pi and each sin/cos block covering x, y, z in order.
class PositionalEncoder {
 public:
  explicit PositionalEncoder(std::size_t num_frequencies = 5, bool include_input = true)
      : frequencies_(num_frequencies), include_input_(include_input) {}

  std::size_t output_dim() const { return frequencies_ * 6 + (include_input_ ? 3 : 0); }
  // points[N x 3] -> [N x output_dim()]
  Tensor operator()(const Tensor& points) const;

 private:
  std::size_t frequencies_;
  bool include_input_;
};

}  // namespace orf

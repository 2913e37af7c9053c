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

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace orf {

std::uint64_t splitmix64(std::uint64_t x);

inline constexpr std::uint64_t kFnvBasis = 0xCBF29CE484222325ull;
// FNV-1a, chainable through `h`.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = kFnvBasis);
std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvBasis);

// Seed hierarchy: every random stream is keyed by (parent seed, purpose tag)
// so adding a consumer never perturbs the others.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

// Counter-based uniform in [0, 1); a pure function of the key.
double uniform_from_key(std::uint64_t key);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  // Inclusive range.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace orf

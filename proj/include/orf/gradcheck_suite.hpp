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

#include "orf/gradcheck.hpp"

namespace orf {

// Finite-difference checks of every differentiable operation, each over
// `trials` seeded random inputs at 64-bit. One result per (operation, trial).
std::vector<GradCheckResult> run_tensor_gradchecks(std::size_t trials, std::uint64_t seed);

// Finite-difference checks of the encode -> decode -> compose -> integrate ->
// loss pipeline on a 4x4-pixel, 4-sample micro-scene; every parameter of the
// model is checked. One result per trial.
std::vector<GradCheckResult> run_pipeline_gradchecks(std::size_t trials, std::uint64_t seed);

bool all_passed(const std::vector<GradCheckResult>& results);

}  // namespace orf

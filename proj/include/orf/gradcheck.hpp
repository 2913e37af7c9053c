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

#include <functional>
#include <string>
#include <vector>

#include "orf/tensor.hpp"

namespace orf {

struct GradCheckResult {
  std::string name;
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||, floor)
  std::size_t entries = 0;
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor so all-zero gradients compare by absolute error.
  double floor = 1e-8;
};

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                      double floor = 1e-8);

// Central differences of a scalar function with respect to every entry of
// each parameter. Parameter data is perturbed in place and restored.
std::vector<double> numeric_gradient(const std::function<double()>& f,
                                     std::vector<Tensor>& params, double step);

// Compares the taped gradient of loss_fn() with central differences. The
// function must build a fresh graph on each call and be a pure function of
// the parameter values. Parameters should be 64-bit leaves.
GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& loss_fn,
                                std::vector<Tensor> params, const GradCheckOptions& opts = {});

}  // namespace orf

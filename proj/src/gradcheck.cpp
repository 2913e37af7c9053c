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

#include "orf/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace orf {

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                      double floor) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double d = analytic[i] - numeric[i];
    diff += d * d;
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
}

std::vector<double> numeric_gradient(const std::function<double()>& f,
                                     std::vector<Tensor>& params, double step) {
  // Each evaluation records onto a scratch tape so functions that take
  // gradients internally still see a graph.
  auto eval = [&f] {
    Tape scratch;
    TapeScope scope(scratch);
    return f();
  };
  std::vector<double> out;
  for (Tensor& p : params) {
    Buffer& buf = p.mutable_buffer();
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const double x0 = buf.get(i);
      buf.set(i, x0 + step);
      const double fp = eval();
      buf.set(i, x0 - step);
      const double fm = eval();
      buf.set(i, x0);
      out.push_back((fp - fm) / (2.0 * step));
    }
  }
  return out;
}

GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& loss_fn,
                                std::vector<Tensor> params, const GradCheckOptions& opts) {
  Tape tape;
  TapeScope scope(tape);
  for (Tensor& p : params) {
    if (!p.requires_grad()) p.set_requires_grad(true);
    p.zero_grad();
  }
  Tensor loss = loss_fn();
  backward(loss);
  std::vector<double> analytic;
  for (const Tensor& p : params) {
    const std::vector<double> g = p.grad().to_vector();
    analytic.insert(analytic.end(), g.begin(), g.end());
  }
  const std::vector<double> numeric =
      numeric_gradient([&] { return loss_fn().item(); }, params, opts.step);
  GradCheckResult r;
  r.name = name;
  r.entries = analytic.size();
  r.relative_error = relative_error(analytic, numeric, opts.floor);
  r.passed = std::isfinite(r.relative_error) && r.relative_error < opts.tolerance;
  for (Tensor& p : params) p.zero_grad();
  return r;
}

}  // namespace orf

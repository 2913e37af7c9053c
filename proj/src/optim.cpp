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

#include "orf/optim.hpp"

#include <cmath>

namespace orf {

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (const Tensor& p : params_) {
    m_.push_back(Tensor::zeros(p.shape(), p.dtype()));
    v_.push_back(Tensor::zeros(p.shape(), p.dtype()));
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    const Tensor g = p.grad();
    dispatch(p.dtype(), [&]<typename T>(T) {
      auto w = p.mutable_data<T>();
      auto m = m_[i].mutable_data<T>();
      auto v = v_[i].mutable_data<T>();
      auto gs = g.data<T>();
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double gk = gs[k];
        const double mk = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk;
        const double vk = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk;
        m[k] = static_cast<T>(mk);
        v[k] = static_cast<T>(vk);
        w[k] = static_cast<T>(w[k] - lr * (mk / c1) / (std::sqrt(vk / c2) + cfg_.eps));
      }
    });
    p.zero_grad();
  }
}

double grad_norm(const std::vector<Tensor>& params) {
  double s = 0.0;
  for (const Tensor& p : params) {
    if (!p.has_grad()) continue;
    const Tensor g = p.grad();
    for (std::size_t k = 0; k < g.numel(); ++k) s += g.at(k) * g.at(k);
  }
  return std::sqrt(s);
}

}  // namespace orf

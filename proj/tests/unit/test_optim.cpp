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


#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "orf/ops.hpp"
#include "orf/optim.hpp"

using namespace orf;
using namespace orf::testing;

TEST_SUITE("optim") {
  TEST_CASE("Adam matches the reference update on a scalar quadratic") {
    PrecisionScope precision(DType::kF64);
    Tensor x = Tensor::from({1}, {2.0}).set_requires_grad(true);
    const AdamConfig cfg{0.9, 0.999, 1e-8};
    Adam opt({x}, cfg);
    double rx = 2.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 50; ++t) {
      const double lr = 0.05 * (1.0 + 0.01 * t);
      {
        Tape tape;
        TapeScope scope(tape);
        backward(ops::sum(ops::square(x - Tensor::from({1}, {-1.0}))));
      }
      const double g = 2.0 * (rx + 1.0);
      m = cfg.beta1 * m + (1 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
      const double mh = m / (1 - std::pow(cfg.beta1, t));
      const double vh = v / (1 - std::pow(cfg.beta2, t));
      rx -= lr * mh / (std::sqrt(vh) + cfg.eps);
      opt.step(lr);
      CHECK(std::fabs(x.item() - rx) < 1e-12);
      CHECK_FALSE(x.has_grad());
    }
    CHECK(opt.steps() == 50);
  }

  TEST_CASE("zero first-moment decay follows the gradient sign") {
    PrecisionScope precision(DType::kF64);
    Tensor x = Tensor::from({2}, {0.0, 0.0}).set_requires_grad(true);
    Adam opt({x}, {0.0, 0.9, 1e-8});
    {
      Tape tape;
      TapeScope scope(tape);
      backward(ops::sum(x * Tensor::from({2}, {3.0, -0.5})));
    }
    opt.step(0.1);
    CHECK(x.at(0) == doctest::Approx(-0.1));
    CHECK(x.at(1) == doctest::Approx(0.1));
  }

  TEST_CASE("parameters without gradients are left alone") {
    PrecisionScope precision(DType::kF64);
    Tensor a = Tensor::from({1}, {1.0}).set_requires_grad(true);
    Tensor b = Tensor::from({1}, {5.0}).set_requires_grad(true);
    Adam opt({a, b}, {});
    {
      Tape tape;
      TapeScope scope(tape);
      backward(ops::sum(a * 2.0));
    }
    opt.step(0.01);
    CHECK(a.item() < 1.0);
    CHECK(b.item() == 5.0);
    CHECK(opt.second_moments()[1].at(0) == 0.0);
  }

  TEST_CASE("gradient norm") {
    PrecisionScope precision(DType::kF64);
    Tensor a = Tensor::from({2}, {1.0, 1.0}).set_requires_grad(true);
    Tensor b = Tensor::from({1}, {1.0}).set_requires_grad(true);
    CHECK(grad_norm({a, b}) == 0.0);
    Tape tape;
    TapeScope scope(tape);
    backward(ops::sum(a * Tensor::from({2}, {3.0, 0.0})) + ops::sum(b * 4.0));
    CHECK(grad_norm({a, b}) == doctest::Approx(5.0));
  }
}

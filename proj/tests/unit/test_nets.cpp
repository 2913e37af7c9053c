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
#include <numbers>

#include "doctest.h"
#include "orf/nets.hpp"
#include "orf/ops.hpp"

using namespace orf;

namespace {

void fill(Tensor t, double v) { t.mutable_buffer().fill(v); }

}  // namespace

TEST_SUITE("nets") {
  TEST_CASE("linear map trivial weights") {
    ParamRegistry reg;
    Rng rng(1);
    LinearMap m(reg, "m", 3, 3, true, rng);
    fill(m.weight(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) m.weight().impl()->data.set(i * 3 + i, 1.0);
    fill(m.bias(), 0.0);
    Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor y = m(x);
    for (std::size_t i = 0; i < 6; ++i) CHECK(y.at(i) == x.at(i));
    fill(m.weight(), 0.0);
    m.bias().impl()->data.set(1, 2.5);
    Tensor z = m(Tensor::ones({2, 2, 3}));
    CHECK(z.shape() == Shape{2, 2, 3});
    for (std::size_t i = 0; i < 12; ++i) CHECK(z.at(i) == (i % 3 == 1 ? 2.5 : 0.0));
    CHECK_THROWS_AS(m(Tensor::ones({2, 4})), ShapeError);
  }

  TEST_CASE("gru zero weights halves the state") {
    PrecisionScope p(DType::kF64);
    ParamRegistry reg;
    Rng rng(2);
    GruCell cell(reg, "gru", 4, rng);
    for (const auto& e : reg.entries()) fill(e.value, 0.0);
    Tensor h = Tensor::from({2, 4}, {1, -2, 3, 0.5, 0.25, 4, -1, 2});
    Tensor out = cell.step(h, Tensor::from({2, 4}, {9, 9, 9, 9, -9, -9, -9, -9}));
    CHECK(out.shape() == h.shape());
    for (std::size_t i = 0; i < 8; ++i) CHECK(out.at(i) == doctest::Approx(0.5 * h.at(i)).epsilon(1e-15));
  }

  TEST_CASE("gru saturated update gate returns the candidate") {
    PrecisionScope p(DType::kF64);
    ParamRegistry reg;
    Rng rng(3);
    GruCell cell(reg, "gru", 3, rng);
    fill(reg.find("gru.update.weight").value, 0.0);
    fill(reg.find("gru.update.bias").value, 50.0);
    Tensor h = Tensor::from({1, 3}, {0.3, -0.7, 0.1});
    Tensor x = Tensor::from({1, 3}, {0.5, 0.2, -0.4});
    Tensor out = cell.step(h, x);
    // Candidate recomputed from the gate definitions.
    const auto& wr = reg.find("gru.reset.weight").value;
    const auto& br = reg.find("gru.reset.bias").value;
    const auto& wc = reg.find("gru.candidate.weight").value;
    const auto& bc = reg.find("gru.candidate.bias").value;
    double xh[6] = {0.5, 0.2, -0.4, 0.3, -0.7, 0.1};
    double r[3];
    for (int i = 0; i < 3; ++i) {
      double s = br.at(i);
      for (int j = 0; j < 6; ++j) s += wr.at(i * 6 + j) * xh[j];
      r[i] = 1.0 / (1.0 + std::exp(-s));
    }
    double xrh[6] = {0.5, 0.2, -0.4, r[0] * 0.3, r[1] * -0.7, r[2] * 0.1};
    for (int i = 0; i < 3; ++i) {
      double s = bc.at(i);
      for (int j = 0; j < 6; ++j) s += wc.at(i * 6 + j) * xrh[j];
      CHECK(std::abs(out.at(i) - std::tanh(s)) < 1e-6);
    }
  }

  TEST_CASE("gru output lies between state and candidate") {
    PrecisionScope p(DType::kF64);
    ParamRegistry reg;
    Rng rng(4);
    GruCell cell(reg, "gru", 5, rng);
    Rng data(5);
    for (int trial = 0; trial < 20; ++trial) {
      Tensor h = Tensor::zeros({3, 5}), x = Tensor::zeros({3, 5});
      for (std::size_t i = 0; i < 15; ++i) {
        h.mutable_buffer().set(i, data.uniform(-2, 2));
        x.mutable_buffer().set(i, data.uniform(-2, 2));
      }
      Tensor out = cell.step(h, x);
      for (std::size_t i = 0; i < 15; ++i) {
        // |h'| can exceed neither max(|h|, 1) since the candidate lies in (-1, 1).
        const double lo = std::min(h.at(i), -1.0), hi = std::max(h.at(i), 1.0);
        CHECK(out.at(i) >= lo);
        CHECK(out.at(i) <= hi);
      }
    }
  }

  TEST_CASE("positional encoding layout") {
    PrecisionScope p(DType::kF64);
    PositionalEncoder pe;
    CHECK(pe.output_dim() == 33);
    Tensor z = pe(Tensor::zeros({1, 3}));
    CHECK(z.shape() == Shape{1, 33});
    for (std::size_t i = 0; i < 3; ++i) CHECK(z.at(i) == 0.0);
    for (std::size_t k = 0; k < 5; ++k)
      for (std::size_t a = 0; a < 3; ++a) {
        CHECK(z.at(3 + k * 6 + a) == 0.0);
        CHECK(z.at(3 + k * 6 + 3 + a) == 1.0);
      }
    Tensor h = pe(Tensor::from({1, 3}, {0.5, 0, 0}));
    CHECK(std::abs(h.at(3) - 1.0) < 1e-15);
    CHECK(std::abs(h.at(6)) < 1e-15);
    // Layout checksum over a fixed probe.
    Tensor probe = pe(Tensor::from({2, 3}, {0.1, -0.2, 0.3, 0.7, 0.05, -0.9}));
    double checksum = 0.0;
    for (std::size_t i = 0; i < probe.numel(); ++i) checksum += probe.at(i) * static_cast<double>(i + 1);
    double expect = 0.0;
    const double pts[2][3] = {{0.1, -0.2, 0.3}, {0.7, 0.05, -0.9}};
    for (std::size_t n = 0; n < 2; ++n) {
      std::size_t idx = n * 33;
      for (int a = 0; a < 3; ++a) expect += pts[n][a] * static_cast<double>(++idx);
      for (int k = 0; k < 5; ++k) {
        const double f = std::ldexp(std::numbers::pi, k);
        for (int a = 0; a < 3; ++a) expect += std::sin(f * pts[n][a]) * static_cast<double>(++idx);
        for (int a = 0; a < 3; ++a) expect += std::cos(f * pts[n][a]) * static_cast<double>(++idx);
      }
    }
    CHECK(std::abs(checksum - expect) < 1e-10);
  }

  TEST_CASE("registry names are unique") {
    ParamRegistry reg;
    Rng rng(6);
    LinearMap a(reg, "a", 2, 2, true, rng);
    CHECK_THROWS(LinearMap(reg, "a", 2, 2, true, rng));
    CHECK(reg.entries().size() == 2);
    const auto snap = reg.snapshot();
    const std::uint64_t before = reg.checksum();
    fill(a.weight(), 3.0);
    CHECK(reg.checksum() != before);
    reg.restore(snap);
    CHECK(reg.checksum() == before);
  }
}

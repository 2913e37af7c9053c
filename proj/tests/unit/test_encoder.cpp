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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "orf/encoder.hpp"
#include "orf/ops.hpp"

using namespace orf;

namespace {

Tensor random_tensor(Rng& rng, const Shape& shape, double lo = -1, double hi = 1) {
  Tensor t = Tensor::zeros(shape);
  for (std::size_t i = 0; i < t.numel(); ++i) t.mutable_buffer().set(i, rng.uniform(lo, hi));
  return t;
}

void zero_params(const ParamRegistry& reg, const std::string& prefix) {
  for (const auto& e : reg.entries())
    if (e.name.rfind(prefix, 0) == 0) {
      Tensor t = e.value;
      t.mutable_buffer().fill(0.0);
    }
}

std::vector<double> row(const Tensor& t, std::size_t r) {
  const std::size_t w = t.dim(1);
  std::vector<double> out(w);
  for (std::size_t i = 0; i < w; ++i) out[i] = t.at(r * w + i);
  return out;
}

// Scalar GRU + residual MLP from registry values, zero input.
std::vector<double> reference_update(const ParamRegistry& reg, const std::string& gru,
                                     const std::string& mlp, std::vector<double> h) {
  const std::size_t d = h.size();
  auto affine = [&](const std::string& name, const std::vector<double>& x) {
    const Tensor& w = reg.find(name + ".weight").value;
    const Tensor& b = reg.find(name + ".bias").value;
    std::vector<double> y(w.dim(0));
    for (std::size_t i = 0; i < y.size(); ++i) {
      double s = b.at(i);
      for (std::size_t j = 0; j < x.size(); ++j) s += w.at(i * x.size() + j) * x[j];
      y[i] = s;
    }
    return y;
  };
  std::vector<double> xh(2 * d, 0.0);
  std::copy(h.begin(), h.end(), xh.begin() + d);
  auto r = affine(gru + ".reset", xh);
  auto u = affine(gru + ".update", xh);
  std::vector<double> xrh(2 * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) xrh[d + i] = h[i] / (1.0 + std::exp(-r[i]));
  auto c = affine(gru + ".candidate", xrh);
  std::vector<double> hn(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double ui = 1.0 / (1.0 + std::exp(-u[i]));
    hn[i] = (1 - ui) * h[i] + ui * std::tanh(c[i]);
  }
  auto hidden = affine(mlp + ".0", hn);
  for (double& v : hidden) v = std::max(v, 0.0);
  auto delta = affine(mlp + ".1", hidden);
  for (std::size_t i = 0; i < d; ++i) hn[i] += delta[i];
  return hn;
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("coordinate channels") {
    Tensor c = coordinate_channels(5, 7);
    CHECK(c.shape() == Shape{4, 5, 7});
    const std::size_t center = 2 * 7 + 3, plane = 35;
    for (std::size_t ch = 0; ch < 4; ++ch) CHECK(c.at(ch * plane + center) == 0.0);
    CHECK(c.at(0) == -1.0);
    CHECK(c.at(6) == 1.0);
    CHECK(c.at(plane) == -1.0);
    CHECK(c.at(plane + 4 * 7) == 1.0);
    CHECK(c.at(2 * plane) == 1.0);
  }

  TEST_CASE("zero weights give zero features") {
    ParamRegistry reg;
    Rng rng(1);
    UNetEncoder enc(reg, "e", {12, 8, false}, rng);
    for (const auto& e : reg.entries()) {
      Tensor t = e.value;
      t.mutable_buffer().fill(0.0);
    }
    FeatureMap fm = enc.extract(Tensor::zeros({3, 12, 12}));
    CHECK(fm.features.shape() == Shape{144, 8});
    for (double v : fm.features.to_vector()) CHECK(v == 0.0);
    CHECK_THROWS_AS(enc.extract(Tensor::zeros({3, 10, 10})), ShapeError);
  }

  TEST_CASE("reference encoder configuration yields 64 channels at 64x64") {
    ParamRegistry reg;
    Rng rng(2);
    UNetEncoder enc(reg, "e", {64, 64, false}, rng);
    Rng data(3);
    FeatureMap fm = enc.extract(random_tensor(data, {3, 64, 64}, 0, 1));
    CHECK(fm.height == 64);
    CHECK(fm.width == 64);
    CHECK(fm.features.shape() == Shape{4096, 64});
    ParamRegistry reg2;
    UNetEncoder stem(reg2, "e", {32, 16, true}, rng);
    FeatureMap fs = stem.extract(random_tensor(data, {3, 32, 32}, 0, 1));
    CHECK(fs.height == 16);
    CHECK(fs.features.shape() == Shape{256, 16});
  }

  TEST_CASE("slot sampling") {
    PrecisionScope p(DType::kF64);
    SlotPriors pr;
    Rng rng(4);
    pr.mu_bg = random_tensor(rng, {1, 4});
    pr.mu_fg = random_tensor(rng, {1, 4});
    pr.log_sigma_bg = Tensor::full({1, 4}, -50.0);
    pr.log_sigma_fg = Tensor::full({1, 4}, -50.0);
    SlotSet s = sample_slots(pr, 3, 9);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(s.background.at(i) - pr.mu_bg.at(i)) < 1e-15);
    for (std::size_t i = 0; i < 12; ++i)
      CHECK(std::abs(s.foreground.at(i) - pr.mu_fg.at(i % 4)) < 1e-15);
    pr.log_sigma_fg = Tensor::from({1, 4}, {0.0, -1.0, 0.5, -0.3});
    SlotSet a = sample_slots(pr, 3, 17), b = sample_slots(pr, 3, 17);
    CHECK(a.foreground.to_vector() == b.foreground.to_vector());
    const std::size_t n = 100000;
    SlotSet many = sample_slots(pr, n, 23);
    for (std::size_t c = 0; c < 4; ++c) {
      double mean = 0;
      for (std::size_t i = 0; i < n; ++i) mean += many.foreground.at(i * 4 + c);
      mean /= static_cast<double>(n);
      const double sigma = std::exp(pr.log_sigma_fg.at(c));
      CHECK(std::abs(mean - pr.mu_fg.at(c)) < 3 * sigma / std::sqrt(double(n)));
    }
  }

  TEST_CASE("single feature vector: attention sums to one and weights are one") {
    ParamRegistry reg;
    Rng rng(5);
    SlotAttention sa(reg, "slots", 6, 2, rng);
    Rng data(6);
    SlotSet init = sample_slots(sa.priors(), 3, 1);
    auto r = sa.run(random_tensor(data, {1, 6}), init);
    double total = 0;
    for (std::size_t j = 0; j < 4; ++j) total += r.attention.at(j);
    CHECK(std::abs(total - 1.0) < 1e-6);
    for (std::size_t j = 0; j < 4; ++j) CHECK(r.weights.at(j) == 1.0);
  }

  TEST_CASE("identical queries give identical attention") {
    ParamRegistry reg;
    Rng rng(7);
    SlotAttention sa(reg, "slots", 5, 1, rng);
    // Background and foreground query maps share weights, and both slots
    // start at the same point.
    const Tensor& qb = reg.find("slots.query_bg.weight").value;
    Tensor qf = reg.find("slots.query_fg.weight").value;
    qf.mutable_buffer() = qb.buffer();
    Rng data(8);
    Tensor start = random_tensor(data, {1, 5});
    SlotSet init{start, start.clone()};
    auto r = sa.run(random_tensor(data, {9, 5}), init);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(r.attention.at(i * 2) == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(r.attention.at(i * 2 + 1) == r.attention.at(i * 2));
    }
  }

  TEST_CASE("zero linear maps match a scalar reference") {
    PrecisionScope p(DType::kF64);
    ParamRegistry reg;
    Rng rng(9);
    const std::size_t d = 4, k = 2, iters = 3;
    SlotAttention sa(reg, "slots", d, iters, rng);
    for (const char* m : {"slots.key", "slots.query_bg", "slots.query_fg", "slots.value_bg",
                          "slots.value_fg"})
      zero_params(reg, m);
    Rng data(10);
    SlotSet init{random_tensor(data, {1, d}), random_tensor(data, {k, d})};
    auto r = sa.run(random_tensor(data, {7, d}), init);
    for (double a : r.attention.to_vector()) CHECK(std::abs(a - 1.0 / 3.0) < 1e-15);
    std::vector<double> bg = row(init.background, 0);
    std::vector<std::vector<double>> fg = {row(init.foreground, 0), row(init.foreground, 1)};
    for (std::size_t t = 0; t < iters; ++t) {
      bg = reference_update(reg, "slots.gru_bg", "slots.mlp_bg", bg);
      for (auto& f : fg) f = reference_update(reg, "slots.gru_fg", "slots.mlp_fg", f);
    }
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(std::abs(r.slots.background.at(i) - bg[i]) < 1e-12);
      for (std::size_t s = 0; s < k; ++s) CHECK(std::abs(r.slots.foreground.at(s * d + i) - fg[s][i]) < 1e-12);
    }
  }

  TEST_CASE("normalization invariants and permutation equivariance") {
    PrecisionScope p(DType::kF64);
    ParamRegistry reg;
    Rng rng(11);
    SlotAttention sa(reg, "slots", 6, 3, rng);
    Rng data(12);
    Tensor feat = random_tensor(data, {20, 6});
    SlotSet init{random_tensor(data, {1, 6}), random_tensor(data, {3, 6})};
    auto r = sa.run(feat, init);
    for (std::size_t i = 0; i < 20; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 4; ++j) s += r.attention.at(i * 4 + j);
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < 20; ++i) s += r.weights.at(i * 4 + j);
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
    const std::size_t perm[3] = {2, 0, 1};
    Tensor permuted = Tensor::zeros({3, 6});
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t c = 0; c < 6; ++c)
        permuted.mutable_buffer().set(s * 6 + c, init.foreground.at(perm[s] * 6 + c));
    auto rp = sa.run(feat, {init.background, permuted});
    for (std::size_t c = 0; c < 6; ++c)
      CHECK(std::abs(rp.slots.background.at(c) - r.slots.background.at(c)) < 1e-12);
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t c = 0; c < 6; ++c)
        CHECK(std::abs(rp.slots.foreground.at(s * 6 + c) - r.slots.foreground.at(perm[s] * 6 + c)) < 1e-12);
  }

  TEST_CASE("gradients reach every prior parameter") {
    ParamRegistry reg;
    Rng rng(13);
    SlotAttention sa(reg, "slots", 4, 2, rng);
    Rng data(14);
    Tape tape;
    TapeScope scope(tape);
    SlotSet init = sample_slots(sa.priors(), 2, 5);
    auto r = sa.run(random_tensor(data, {6, 4}), init);
    backward(ops::sum(ops::square(r.slots.background)) + ops::sum(ops::square(r.slots.foreground)));
    for (const Tensor* t : {&sa.priors().mu_bg, &sa.priors().log_sigma_bg, &sa.priors().mu_fg,
                            &sa.priors().log_sigma_fg}) {
      double n = 0;
      for (double g : t->grad().to_vector()) n += g * g;
      CHECK(n > 0.0);
    }
  }

  TEST_CASE("collapse detection") {
    CHECK(slots_collapsed(Tensor::from({2, 3}, {1, 2, 3, 2, 4, 6})));
    CHECK_FALSE(slots_collapsed(Tensor::from({2, 3}, {1, 0, 0, 0, 1, 0})));
  }
}

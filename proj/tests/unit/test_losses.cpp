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
#include <span>

#include "doctest.h"
#include "helpers.hpp"
#include "orf/losses.hpp"
#include "orf/ops.hpp"

using namespace orf;
using namespace orf::testing;

namespace {

// D(I) = a * mean(I): grad_I D = a / N everywhere, so |grad|^2 = a^2 / N.
class LinearCritic : public ImageCritic {
 public:
  explicit LinearCritic(double a) : a_(a) {}
  Tensor logit(const Tensor& image, bool) const override {
    return ops::reshape(ops::mean(image) * a_, {1});
  }

 private:
  double a_;
};

void zero_all(const ParamRegistry& reg) {
  for (const NamedParam& p : reg.entries()) {
    Tensor t = p.value;
    for (std::size_t i = 0; i < t.numel(); ++i) t.mutable_buffer().set(i, 0.0);
  }
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("reconstruction loss is the mean squared error") {
    PrecisionScope precision(DType::kF64);
    CHECK(recon_loss(Tensor::ones({3, 4, 4}), Tensor::ones({3, 4, 4})).item() == 0.0);
    CHECK(recon_loss(Tensor::zeros({3, 4, 4}), Tensor::ones({3, 4, 4})).item() == 1.0);
    CHECK_THROWS_AS(recon_loss(Tensor::zeros({3, 4, 4}), Tensor::zeros({3, 4, 5})), ShapeError);
  }

  TEST_CASE("reconstruction gradient is 2 (render - reference) / N") {
    PrecisionScope precision(DType::kF64);
    Rng rng(3);
    Tensor render = random_tensor(rng, {3, 2, 2}).set_requires_grad(true);
    const Tensor ref = random_tensor(rng, {3, 2, 2});
    Tape tape;
    TapeScope scope(tape);
    backward(recon_loss(render, ref));
    const Tensor g = render.grad();
    for (std::size_t i = 0; i < 12; ++i)
      CHECK(g.at(i) == doctest::Approx(2.0 * (render.at(i) - ref.at(i)) / 12.0).epsilon(1e-14));
  }

  TEST_CASE("adversarial f at reference points") {
    CHECK(adv_f(0.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
    CHECK(adv_f(50.0) <= 0.0);
    CHECK(adv_f(50.0) > -1e-20);
    CHECK(std::fabs(adv_f(-50.0) + 50.0) < 1e-6);
    CHECK(std::isfinite(adv_f(1e4)));
    CHECK(std::isfinite(adv_f(-1e4)));
    CHECK(adv_f(-1e4) == doctest::Approx(-1e4));
  }

  TEST_CASE("adversarial f is monotone increasing and concave on a grid") {
    double prev = adv_f(-20.0), prev_slope = INFINITY;
    for (int i = 1; i <= 400; ++i) {
      const double t = -20.0 + 0.1 * i;
      const double v = adv_f(t);
      CHECK(v > prev);
      const double slope = (v - prev) / 0.1;
      CHECK(slope <= prev_slope + 1e-12);
      prev = v;
      prev_slope = slope;
    }
  }

  TEST_CASE("tensor form of f matches the scalar form") {
    PrecisionScope precision(DType::kF64);
    const Tensor t = Tensor::from({5}, {-60.0, -1.0, 0.0, 2.0, 60.0});
    const Tensor f = adv_f(t);
    for (std::size_t i = 0; i < 5; ++i) CHECK(f.at(i) == doctest::Approx(adv_f(t.at(i))));
  }

  TEST_CASE("constant-zero discriminator: -2 log 2, zero R1, log 2 for the generator") {
    PrecisionScope precision(DType::kF64);
    ParamRegistry reg;
    Rng rng(1);
    Discriminator d(reg, "disc", 16, rng);
    zero_all(reg);
    const Tensor real = random_tensor(rng, {3, 16, 16}, 0, 1);
    const Tensor fake = random_tensor(rng, {3, 16, 16}, 0, 1);
    Tape tape;
    TapeScope scope(tape);
    const DiscriminatorLoss l =
        discriminator_loss(d, std::span<const Tensor>(&real, 1), std::span<const Tensor>(&fake, 1), 10.0);
    CHECK(l.adv.item() == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-14));
    CHECK(l.r1.item() == 0.0);
    CHECK(l.total.item() == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-14));
    const Tensor g = generator_adv_term(d, std::span<const Tensor>(&fake, 1));
    CHECK(g.item() == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }

  TEST_CASE("R1 of a linear critic is lambda a^2 / N") {
    PrecisionScope precision(DType::kF64);
    Rng rng(2);
    const double a = 3.0, lambda = 10.0;
    const LinearCritic critic(a);
    const Tensor real = random_tensor(rng, {3, 4, 5}, 0, 1);
    const Tensor fake = random_tensor(rng, {3, 4, 5}, 0, 1);
    Tape tape;
    TapeScope scope(tape);
    const DiscriminatorLoss l = discriminator_loss(critic, std::span<const Tensor>(&real, 1),
                                                   std::span<const Tensor>(&fake, 1), lambda);
    const double n = 60.0;
    CHECK(l.r1.item() == doctest::Approx(a * a / n).epsilon(1e-13));
    CHECK(l.total.item() - l.adv.item() == doctest::Approx(lambda * a * a / n).epsilon(1e-12));
  }

  TEST_CASE("R1 is zero exactly when the input gradient is zero") {
    PrecisionScope precision(DType::kF64);
    Rng rng(4);
    const Tensor real = random_tensor(rng, {3, 4, 4}, 0, 1);
    Tape tape;
    TapeScope scope(tape);
    auto r1 = [&](double a) {
      return discriminator_loss(LinearCritic(a), std::span<const Tensor>(&real, 1),
                                std::span<const Tensor>(&real, 1), 10.0)
          .r1.item();
    };
    CHECK(r1(0.0) == 0.0);
    CHECK(r1(0.5) > 0.0);
  }

  TEST_CASE("R1 needs gradient recording") {
    Rng rng(5);
    const Tensor real = random_tensor(rng, {3, 4, 4}, 0, 1);
    NoGradGuard no_grad;
    CHECK_THROWS_AS(discriminator_loss(LinearCritic(1.0), std::span<const Tensor>(&real, 1),
                                       std::span<const Tensor>(&real, 1), 10.0),
                    AutogradError);
  }

  TEST_CASE("generator term leaves discriminator gradients exactly zero") {
    PrecisionScope precision(DType::kF64);
    ParamRegistry reg;
    Rng rng(6);
    Discriminator d(reg, "disc", 16, rng);
    Tensor fake = random_tensor(rng, {3, 16, 16}, 0, 1).set_requires_grad(true);
    Tape tape;
    TapeScope scope(tape);
    backward(generator_adv_term(d, std::span<const Tensor>(&fake, 1)));
    REQUIRE(fake.has_grad());
    double fake_norm = 0;
    for (double v : fake.grad().to_vector()) fake_norm += v * v;
    CHECK(fake_norm > 0);
    for (const NamedParam& p : reg.entries()) {
      if (!p.value.has_grad()) continue;
      for (double v : p.value.grad().to_vector()) CHECK(v == 0.0);
    }
  }

  TEST_CASE("discriminator loss does not reach the generator") {
    PrecisionScope precision(DType::kF64);
    ParamRegistry reg;
    Rng rng(7);
    Discriminator d(reg, "disc", 16, rng);
    const Tensor real = random_tensor(rng, {3, 16, 16}, 0, 1);
    Tensor fake = random_tensor(rng, {3, 16, 16}, 0, 1).set_requires_grad(true);
    Tape tape;
    TapeScope scope(tape);
    backward(discriminator_loss(d, std::span<const Tensor>(&real, 1),
                                std::span<const Tensor>(&fake, 1), 10.0)
                 .total);
    CHECK_FALSE(fake.has_grad());
    bool any = false;
    for (const NamedParam& p : reg.entries())
      for (double v : p.value.has_grad() ? p.value.grad().to_vector() : std::vector<double>{})
        any = any || v != 0.0;
    CHECK(any);
  }

  TEST_CASE("discriminator shape and resizing") {
    ParamRegistry reg;
    Rng rng(8);
    Discriminator d(reg, "disc", 24, rng);
    CHECK(d.logit(Tensor::zeros({3, 24, 24})).shape() == Shape{1});
    CHECK(d.logit(Tensor::zeros({3, 48, 48})).shape() == Shape{1});
    CHECK_THROWS(Discriminator(reg, "small", 8, rng));
  }

  TEST_CASE("default weights") {
    const LossWeights w;
    CHECK(w.percept == 0.006);
    CHECK(w.adv == 0.01);
    CHECK(w.r1 == 10.0);
  }

  TEST_CASE("total loss reduces to recon with zero weights and is linear in each weight") {
    PrecisionScope precision(DType::kF64);
    LossParts parts{Tensor::scalar(0.3), Tensor::scalar(2.0), Tensor::scalar(-0.5)};
    CHECK(total_loss(parts, {0.0, 0.0, 10.0}).item() == 0.3);
    CHECK(total_loss(parts, {}).item() == doctest::Approx(0.3 + 0.006 * 2.0 - 0.01 * 0.5));
    const double base = total_loss(parts, {0.006, 0.0, 10}).item() - 0.3;
    const double doubled = total_loss(parts, {0.012, 0.0, 10}).item() - 0.3;
    CHECK(doubled == doctest::Approx(2.0 * base).epsilon(1e-14));
    CHECK(total_loss({Tensor::scalar(0.3), Tensor(), Tensor()}, {}).item() == 0.3);
  }

  TEST_CASE("total loss gradient is the sum of per-term gradients") {
    PrecisionScope precision(DType::kF64);
    Rng rng(9);
    ParamRegistry reg, disc_reg;
    FeatureExtractor ext(reg, "p", rng);
    Discriminator d(disc_reg, "disc", 16, rng);
    Tensor render = random_tensor(rng, {3, 16, 16}, 0, 1).set_requires_grad(true);
    const Tensor ref = random_tensor(rng, {3, 16, 16}, 0, 1);
    const LossWeights w;
    auto grad_of = [&](int which) {
      render.zero_grad();
      Tape tape;
      TapeScope scope(tape);
      Tensor r = recon_loss(render, ref);
      Tensor p = perceptual_loss(render, ref, ext);
      Tensor a = generator_adv_term(d, std::span<const Tensor>(&render, 1));
      Tensor l = which == 0 ? total_loss({r, p, a}, w)
                 : which == 1 ? r
                 : which == 2 ? p * w.percept
                              : a * w.adv;
      backward(l);
      return render.grad().to_vector();
    };
    const auto total = grad_of(0);
    const auto g1 = grad_of(1), g2 = grad_of(2), g3 = grad_of(3);
    for (std::size_t i = 0; i < total.size(); ++i)
      CHECK(total[i] == doctest::Approx(g1[i] + g2[i] + g3[i]).epsilon(1e-12));
  }

  TEST_CASE("perceptual loss: zero on identical, symmetric, positive on random pairs") {
    PrecisionScope precision(DType::kF64);
    Rng rng(10);
    ParamRegistry reg;
    FeatureExtractor ext(reg, "p", rng);
    CHECK(ext.levels() == 3);
    for (const NamedParam& p : reg.entries()) CHECK_FALSE(p.trainable);
    for (int trial = 0; trial < 10; ++trial) {
      const Tensor a = random_tensor(rng, {3, 16, 16}, 0, 1);
      const Tensor b = random_tensor(rng, {3, 16, 16}, 0, 1);
      CHECK(perceptual_loss(a, a, ext).item() == 0.0);
      const double ab = perceptual_loss(a, b, ext).item();
      CHECK(ab > 0.0);
      CHECK(perceptual_loss(b, a, ext).item() == doctest::Approx(ab).epsilon(1e-14));
    }
  }

  TEST_CASE("perceptual gradient reaches the render only") {
    PrecisionScope precision(DType::kF64);
    Rng rng(11);
    ParamRegistry reg;
    FeatureExtractor ext(reg, "p", rng);
    Tensor a = random_tensor(rng, {3, 8, 8}, 0, 1).set_requires_grad(true);
    Tensor b = random_tensor(rng, {3, 8, 8}, 0, 1).set_requires_grad(true);
    Tape tape;
    TapeScope scope(tape);
    backward(perceptual_loss(a, b, ext));
    CHECK(a.has_grad());
    CHECK_FALSE(b.has_grad());
    for (const NamedParam& p : reg.entries()) CHECK_FALSE(p.value.has_grad());
  }

  TEST_CASE("extractor is deterministic in its seed") {
    ParamRegistry r1, r2;
    Rng a(12), b(12);
    FeatureExtractor e1(r1, "p", a), e2(r2, "p", b);
    CHECK(r1.checksum() == r2.checksum());
  }
}

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
#include <vector>

#include "doctest.h"
#include "orf/gradcheck.hpp"
#include "orf/gradcheck_suite.hpp"
#include "orf/ops.hpp"
#include "orf/tensor.hpp"

using namespace orf;

namespace {

void require_values(const Tensor& t, const std::vector<double>& expect, double tol = 0.0) {
  REQUIRE(t.numel() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(std::abs(t.at(i) - expect[i]) <= tol);
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("relu and sum definitions") {
    require_values(ops::relu(Tensor::from({3}, {-1, 0, 2})), {0, 0, 2});
    CHECK(ops::sum(Tensor::ones({2, 3})).item() == 6.0);
  }

  TEST_CASE("sigmoid derivative at zero") {
    PrecisionScope p(DType::kF64);
    Tensor x = Tensor::from({1}, {0.0});
    GradCheckResult r = check_gradients("sigmoid", [&] { return ops::sigmoid(x); }, {x});
    CHECK(r.passed);
    Tape tape;
    TapeScope scope(tape);
    x.zero_grad();
    backward(ops::sigmoid(x));
    CHECK(x.grad().item() == doctest::Approx(0.25).epsilon(1e-15));
    std::vector<Tensor> ps{x};
    const auto numeric = numeric_gradient([&] { return ops::sigmoid(x).item(); }, ps, 1e-5);
    CHECK(std::abs(numeric[0] - 0.25) < 1e-8);
  }

  TEST_CASE("matmul examples and gradient") {
    PrecisionScope p(DType::kF64);
    Tensor eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor x = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
    require_values(ops::matmul(eye, x), x.to_vector());
    require_values(ops::matmul(Tensor::from({2, 2}, {1, 2, 3, 4}), Tensor::from({2, 1}, {1, 1})),
                   {3, 7});
    Tensor a = Tensor::from({2, 3}, {0.3, -0.2, 0.5, 1.1, 0.7, -0.4});
    Tensor b = Tensor::from({3, 2}, {0.9, 0.1, -0.3, 0.8, 0.2, -0.6});
    auto r = check_gradients("matmul_sq", [&] { return ops::sum(ops::square(ops::matmul(a, b))); },
                             {a}, {1e-5, 1e-6});
    CHECK(r.passed);
    CHECK_THROWS_AS(ops::matmul(a, a), ShapeError);
  }

  TEST_CASE("softmax") {
    PrecisionScope p(DType::kF64);
    require_values(ops::softmax(Tensor::from({3}, {0, 0, 0}), 0), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
    Tensor s = ops::softmax(Tensor::from({2}, {10, 0}), 0);
    CHECK(std::abs(s.at(0) - 0.9999546) < 1e-7);
    CHECK(std::abs(s.at(1) - 0.0000454) < 1e-7);
    Tensor x = Tensor::from({2, 3}, {0.1, -2.0, 3.0, 700.0, 699.0, -5.0});
    Tensor sx = ops::softmax(x, 1);
    Tensor shifted = ops::softmax(x + 12.5, 1);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(sx.at(i) - shifted.at(i)) < 1e-12);
    for (std::size_t r = 0; r < 2; ++r)
      CHECK(std::abs(sx.at(r * 3) + sx.at(r * 3 + 1) + sx.at(r * 3 + 2) - 1.0) < 1e-6);
    CHECK(ops::all_finite(sx));
  }

  TEST_CASE("conv2d identity and ones kernels") {
    Tensor x = Tensor::zeros({1, 4, 5});
    for (std::size_t i = 0; i < 20; ++i) x.mutable_buffer().set(i, 0.1 * i);
    Tensor w = Tensor::zeros({1, 1, 3, 3});
    w.mutable_buffer().set(4, 1.0);
    require_values(ops::conv2d(x, w, Tensor(), 1), x.to_vector());
    Tensor ones = Tensor::ones({1, 5, 5});
    Tensor y = ops::conv2d(ones, Tensor::ones({1, 1, 3, 3}), Tensor(), 1);
    for (std::size_t r = 1; r < 4; ++r)
      for (std::size_t c = 1; c < 4; ++c) CHECK(y.at(r * 5 + c) == 9.0);
    CHECK(ops::conv2d(ones, Tensor::ones({2, 1, 3, 3}), Tensor(), 2).shape() == Shape{2, 3, 3});
    CHECK_THROWS_AS(ops::conv2d(ones, Tensor::ones({1, 2, 3, 3}), Tensor(), 1), ShapeError);
  }

  TEST_CASE("conv2d weight gradient on a 1x4x4 input") {
    PrecisionScope p(DType::kF64);
    Tensor x = Tensor::zeros({1, 4, 4});
    for (std::size_t i = 0; i < 16; ++i) x.mutable_buffer().set(i, std::sin(0.7 * i));
    Tensor w = Tensor::zeros({2, 1, 3, 3});
    for (std::size_t i = 0; i < 18; ++i) w.mutable_buffer().set(i, std::cos(1.3 * i));
    auto r = check_gradients("conv_w", [&] { return ops::sum(ops::square(ops::conv2d(x, w, Tensor(), 1))); },
                             {w}, {1e-5, 1e-5});
    CHECK(r.passed);
  }

  TEST_CASE("bilinear resize") {
    PrecisionScope p(DType::kF64);
    Tensor x = Tensor::from({1, 2, 3}, {0.1, 0.5, 0.2, 0.9, 0.3, 0.4});
    require_values(ops::bilinear_resize(x, 2, 3), x.to_vector());
    Tensor c = Tensor::full({2, 3, 5}, 0.37);
    Tensor rc = ops::bilinear_resize(c, 7, 2);
    for (double v : rc.to_vector()) CHECK(std::abs(v - 0.37) < 1e-15);
    // Scalar reference: half-pixel centers, source clamped at the border.
    Tensor img = Tensor::from({1, 2, 2}, {0, 1, 0, 1});
    Tensor up = ops::bilinear_resize(img, 2, 4);
    auto ref = [](double d) {
      double s = std::max((d + 0.5) * 2.0 / 4.0 - 0.5, 0.0);
      const double i0 = std::floor(s);
      const double i1 = std::min(i0 + 1.0, 1.0);
      const double f = s - i0;
      return (1 - f) * i0 + f * i1;  // column values equal their index
    };
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(up.at(r * 4 + c) - ref(c)) < 1e-15);
    CHECK(up.at(1) == doctest::Approx(0.25));
    CHECK(up.at(2) == doctest::Approx(0.75));
  }

  TEST_CASE("backward contract") {
    Tape tape;
    TapeScope scope(tape);
    Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4}).set_requires_grad(true);
    backward(ops::sum(x));
    require_values(x.grad(), {1, 1, 1, 1});
    CHECK(tape.empty());
    Tensor c = Tensor::from({1}, {3.0});
    CHECK_NOTHROW(backward(ops::square(c)));
    Tensor v = x * 2.0;
    CHECK_THROWS_AS(backward(v), AutogradError);
    tape.clear();
  }

  TEST_CASE("backward is deterministic") {
    PrecisionScope p(DType::kF64);
    Tensor a = Tensor::from({3, 3}, {0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8, -0.9}).set_requires_grad(true);
    auto run = [&] {
      Tape tape;
      TapeScope scope(tape);
      a.zero_grad();
      Tensor y = ops::softmax(ops::matmul(a, ops::tanh(a)), 1);
      backward(ops::sum(ops::square(y)));
      return a.grad().to_vector();
    };
    const auto g1 = run();
    const auto g2 = run();
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
  }

  TEST_CASE("broadcast shape table") {
    struct Row {
      Shape a, b, out;
    };
    const std::vector<Row> ok = {
        {{3}, {3}, {3}},           {{2, 3}, {3}, {2, 3}},       {{2, 1}, {1, 3}, {2, 3}},
        {{4, 1, 5}, {3, 1}, {4, 3, 5}}, {{1}, {2, 2}, {2, 2}}, {{5, 1, 1}, {1, 6}, {5, 1, 6}},
    };
    for (const auto& r : ok) CHECK(ops::broadcast_shapes(r.a, r.b) == r.out);
    CHECK_THROWS_AS(ops::broadcast_shapes({2, 3}, {3, 2}), ShapeError);
    CHECK_THROWS_AS(ops::broadcast_shapes({4}, {3}), ShapeError);
    try {
      ops::add(Tensor::zeros({2, 3}), Tensor::zeros({4}));
      FAIL("expected a shape error");
    } catch (const ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("[4]") != std::string::npos);
    }
  }

  TEST_CASE("log and div sentinels fail the finiteness check") {
    CHECK_FALSE(ops::all_finite(ops::log(Tensor::from({2}, {1.0, 0.0}))));
    CHECK_FALSE(ops::all_finite(ops::div(Tensor::ones({1}), Tensor::zeros({1}))));
    CHECK(ops::all_finite(ops::log(Tensor::from({2}, {1.0, 2.0}))));
  }

  TEST_CASE("finite-difference suite, reduced trials") {
    const auto results = run_tensor_gradchecks(2, 11);
    for (const auto& r : results) {
      INFO(r.name << " rel err " << r.relative_error);
      CHECK(r.passed);
    }
  }
}

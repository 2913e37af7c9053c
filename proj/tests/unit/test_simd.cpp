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
#include <random>
#include <vector>

#include "doctest.h"
#include "orf/simd/kernels.hpp"

using namespace orf::simd;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(dist(gen));
  return v;
}

template <typename T>
double tol() {
  return std::is_same_v<T, float> ? 1e-5 : 1e-13;
}

template <typename T>
void check_gemm(const KernelTable& ref, const KernelTable& wide, std::mt19937_64& gen) {
  const std::size_t sizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 33};
  for (std::size_t m : sizes)
    for (std::size_t n : sizes)
      for (std::size_t k : {1ul, 3ul, 8ul, 19ul}) {
        auto a = random_vec<T>(m * k, gen);
        auto b = random_vec<T>(k * n, gen);
        auto c0 = random_vec<T>(m * n, gen);
        for (bool acc : {false, true}) {
          auto c1 = c0, c2 = c0;
          if constexpr (std::is_same_v<T, float>) {
            ref.gemm_f32(m, n, k, a.data(), b.data(), c1.data(), acc);
            wide.gemm_f32(m, n, k, a.data(), b.data(), c2.data(), acc);
          } else {
            ref.gemm_f64(m, n, k, a.data(), b.data(), c1.data(), acc);
            wide.gemm_f64(m, n, k, a.data(), b.data(), c2.data(), acc);
          }
          for (std::size_t i = 0; i < m * n; ++i)
            REQUIRE(std::abs(double(c1[i]) - double(c2[i])) <= tol<T>() * (1.0 + k));
        }
      }
}

template <typename T>
void check_vector_kernels(const KernelTable& ref, const KernelTable& wide, std::mt19937_64& gen) {
  for (std::size_t n : {0ul, 1ul, 3ul, 4ul, 7ul, 8ul, 9ul, 16ul, 31ul, 100ul, 1027ul}) {
    auto a = random_vec<T>(n, gen);
    auto b = random_vec<T>(n, gen);
    if (n > 2) a[1] = T(0);  // relu boundary
    std::vector<T> r(n), w(n);
    auto same = [&](const char* what) {
      INFO(what << " n=" << n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(r[i] == w[i]);
    };
    if constexpr (std::is_same_v<T, float>) {
      ref.add_f32(n, a.data(), b.data(), r.data());
      wide.add_f32(n, a.data(), b.data(), w.data());
      same("add");
      ref.mul_f32(n, a.data(), b.data(), r.data());
      wide.mul_f32(n, a.data(), b.data(), w.data());
      same("mul");
      ref.relu_f32(n, a.data(), r.data());
      wide.relu_f32(n, a.data(), w.data());
      same("relu");
      ref.relu_grad_f32(n, a.data(), b.data(), r.data());
      wide.relu_grad_f32(n, a.data(), b.data(), w.data());
      same("relu_grad");
      r = b;
      w = b;
      ref.axpy_f32(n, T(0.37), a.data(), r.data());
      wide.axpy_f32(n, T(0.37), a.data(), w.data());
      for (std::size_t i = 0; i < n; ++i) REQUIRE(std::abs(r[i] - w[i]) <= 1e-6);
      REQUIRE(std::abs(ref.sum_f32(n, a.data()) - wide.sum_f32(n, a.data())) <= 1e-4);
    } else {
      ref.add_f64(n, a.data(), b.data(), r.data());
      wide.add_f64(n, a.data(), b.data(), w.data());
      same("add");
      ref.mul_f64(n, a.data(), b.data(), r.data());
      wide.mul_f64(n, a.data(), b.data(), w.data());
      same("mul");
      ref.relu_f64(n, a.data(), r.data());
      wide.relu_f64(n, a.data(), w.data());
      same("relu");
      ref.relu_grad_f64(n, a.data(), b.data(), r.data());
      wide.relu_grad_f64(n, a.data(), b.data(), w.data());
      same("relu_grad");
      r = b;
      w = b;
      ref.axpy_f64(n, T(0.37), a.data(), r.data());
      wide.axpy_f64(n, T(0.37), a.data(), w.data());
      for (std::size_t i = 0; i < n; ++i) REQUIRE(std::abs(r[i] - w[i]) <= 1e-14);
      REQUIRE(std::abs(ref.sum_f64(n, a.data()) - wide.sum_f64(n, a.data())) <= 1e-12);
    }
  }
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("wide kernels agree with the scalar reference") {
    const KernelTable* wide = avx2_kernels();
    if (wide == nullptr) {
      MESSAGE("AVX2 variant unavailable on this host; equivalence not exercised");
      return;
    }
    std::mt19937_64 gen(7);
    check_gemm<float>(scalar_kernels(), *wide, gen);
    check_gemm<double>(scalar_kernels(), *wide, gen);
    check_vector_kernels<float>(scalar_kernels(), *wide, gen);
    check_vector_kernels<double>(scalar_kernels(), *wide, gen);
  }

  TEST_CASE("gemm rows do not depend on how many rows share the call") {
    // Patch renders must match full-frame renders bit for bit, so a row's
    // result may not depend on its position inside a register block.
    const KernelTable& k = active();
    std::mt19937_64 gen(3);
    const std::size_t m = 11, n = 13, kk = 21;
    auto a = random_vec<float>(m * kk, gen);
    auto b = random_vec<float>(kk * n, gen);
    std::vector<float> full(m * n);
    k.gemm_f32(m, n, kk, a.data(), b.data(), full.data(), false);
    for (std::size_t start = 0; start < m; ++start) {
      for (std::size_t rows = 1; start + rows <= m; ++rows) {
        std::vector<float> part(rows * n);
        k.gemm_f32(rows, n, kk, a.data() + start * kk, b.data(), part.data(), false);
        for (std::size_t i = 0; i < rows * n; ++i) REQUIRE(part[i] == full[start * n + i]);
      }
    }
  }

  TEST_CASE("scalar isa can be forced") {
    const Isa original = active().isa;
    force_isa(Isa::kScalar);
    CHECK(active().isa == Isa::kScalar);
    if (avx2_kernels() != nullptr) {
      force_isa(Isa::kAvx2);
      CHECK(active().isa == Isa::kAvx2);
    }
    force_isa(original);
  }
}

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

// AVX2 + FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here may run before dispatch has checked the CPU.

#include <immintrin.h>

#include <algorithm>

#include "orf/simd/kernels.hpp"

namespace orf::simd {
namespace {

struct F32x8 {
  using Scalar = float;
  using Reg = __m256;
  static constexpr std::size_t kLanes = 8;
  static Reg zero() { return _mm256_setzero_ps(); }
  static Reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, Reg v) { _mm256_storeu_ps(p, v); }
  static Reg set1(float v) { return _mm256_set1_ps(v); }
  static Reg fmadd(Reg a, Reg b, Reg c) { return _mm256_fmadd_ps(a, b, c); }
  static Reg add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
  static Reg mul(Reg a, Reg b) { return _mm256_mul_ps(a, b); }
  static Reg max(Reg a, Reg b) { return _mm256_max_ps(a, b); }
  static Reg gt_mask_and(Reg x, Reg g) {
    return _mm256_and_ps(_mm256_cmp_ps(x, _mm256_setzero_ps(), _CMP_GT_OQ), g);
  }
  static float hsum(Reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

struct F64x4 {
  using Scalar = double;
  using Reg = __m256d;
  static constexpr std::size_t kLanes = 4;
  static Reg zero() { return _mm256_setzero_pd(); }
  static Reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, Reg v) { _mm256_storeu_pd(p, v); }
  static Reg set1(double v) { return _mm256_set1_pd(v); }
  static Reg fmadd(Reg a, Reg b, Reg c) { return _mm256_fmadd_pd(a, b, c); }
  static Reg add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
  static Reg mul(Reg a, Reg b) { return _mm256_mul_pd(a, b); }
  static Reg max(Reg a, Reg b) { return _mm256_max_pd(a, b); }
  static Reg gt_mask_and(Reg x, Reg g) {
    return _mm256_and_pd(_mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_GT_OQ), g);
  }
  static double hsum(Reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d hi64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, hi64));
  }
};

// Register-blocked rows x (2 vector) tile. Accumulators stay in registers for
// the whole k loop; B rows are streamed once per tile.
template <typename V, int Rows>
void gemm_tile(std::size_t n, std::size_t k, const typename V::Scalar* a,
               const typename V::Scalar* b, typename V::Scalar* c, std::size_t j0,
               bool accumulate) {
  using T = typename V::Scalar;
  constexpr std::size_t L = V::kLanes;
  typename V::Reg acc0[Rows];
  typename V::Reg acc1[Rows];
  for (int r = 0; r < Rows; ++r) {
    if (accumulate) {
      acc0[r] = V::load(c + r * n + j0);
      acc1[r] = V::load(c + r * n + j0 + L);
    } else {
      acc0[r] = V::zero();
      acc1[r] = V::zero();
    }
  }
  for (std::size_t p = 0; p < k; ++p) {
    const T* brow = b + p * n + j0;
    const auto b0 = V::load(brow);
    const auto b1 = V::load(brow + L);
    for (int r = 0; r < Rows; ++r) {
      const auto av = V::set1(a[r * k + p]);
      acc0[r] = V::fmadd(av, b0, acc0[r]);
      acc1[r] = V::fmadd(av, b1, acc1[r]);
    }
  }
  for (int r = 0; r < Rows; ++r) {
    V::store(c + r * n + j0, acc0[r]);
    V::store(c + r * n + j0 + L, acc1[r]);
  }
}

template <typename V, int Rows>
void gemm_tile_single(std::size_t n, std::size_t k, const typename V::Scalar* a,
                      const typename V::Scalar* b, typename V::Scalar* c, std::size_t j0,
                      bool accumulate) {
  typename V::Reg acc[Rows];
  for (int r = 0; r < Rows; ++r) acc[r] = accumulate ? V::load(c + r * n + j0) : V::zero();
  for (std::size_t p = 0; p < k; ++p) {
    const auto bv = V::load(b + p * n + j0);
    for (int r = 0; r < Rows; ++r) acc[r] = V::fmadd(V::set1(a[r * k + p]), bv, acc[r]);
  }
  for (int r = 0; r < Rows; ++r) V::store(c + r * n + j0, acc[r]);
}

template <typename V, int Rows>
void gemm_rows(std::size_t n, std::size_t k, const typename V::Scalar* a,
               const typename V::Scalar* b, typename V::Scalar* c, bool accumulate) {
  using T = typename V::Scalar;
  constexpr std::size_t L = V::kLanes;
  std::size_t j = 0;
  for (; j + 2 * L <= n; j += 2 * L) gemm_tile<V, Rows>(n, k, a, b, c, j, accumulate);
  for (; j + L <= n; j += L) gemm_tile_single<V, Rows>(n, k, a, b, c, j, accumulate);
  for (; j < n; ++j) {
    for (int r = 0; r < Rows; ++r) {
      T s = accumulate ? c[r * n + j] : T(0);
      for (std::size_t p = 0; p < k; ++p) s += a[r * k + p] * b[p * n + j];
      c[r * n + j] = s;
    }
  }
}

template <typename V>
void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const typename V::Scalar* a,
               const typename V::Scalar* b, typename V::Scalar* c, bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) gemm_rows<V, 4>(n, k, a + i * k, b, c + i * n, accumulate);
  for (; i < m; ++i) gemm_rows<V, 1>(n, k, a + i * k, b, c + i * n, accumulate);
}

template <typename V>
void axpy_avx2(std::size_t n, typename V::Scalar alpha, const typename V::Scalar* x,
               typename V::Scalar* y) {
  const auto av = V::set1(alpha);
  std::size_t i = 0;
  for (; i + V::kLanes <= n; i += V::kLanes)
    V::store(y + i, V::fmadd(av, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <typename V>
void add_avx2(std::size_t n, const typename V::Scalar* a, const typename V::Scalar* b,
              typename V::Scalar* out) {
  std::size_t i = 0;
  for (; i + V::kLanes <= n; i += V::kLanes)
    V::store(out + i, V::add(V::load(a + i), V::load(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename V>
void mul_avx2(std::size_t n, const typename V::Scalar* a, const typename V::Scalar* b,
              typename V::Scalar* out) {
  std::size_t i = 0;
  for (; i + V::kLanes <= n; i += V::kLanes)
    V::store(out + i, V::mul(V::load(a + i), V::load(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename V>
void relu_avx2(std::size_t n, const typename V::Scalar* x, typename V::Scalar* out) {
  using T = typename V::Scalar;
  const auto z = V::zero();
  std::size_t i = 0;
  for (; i + V::kLanes <= n; i += V::kLanes) V::store(out + i, V::max(V::load(x + i), z));
  for (; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename V>
void relu_grad_avx2(std::size_t n, const typename V::Scalar* x, const typename V::Scalar* g,
                    typename V::Scalar* out) {
  using T = typename V::Scalar;
  std::size_t i = 0;
  for (; i + V::kLanes <= n; i += V::kLanes)
    V::store(out + i, V::gt_mask_and(V::load(x + i), V::load(g + i)));
  for (; i < n; ++i) out[i] = x[i] > T(0) ? g[i] : T(0);
}

template <typename V>
typename V::Scalar sum_avx2(std::size_t n, const typename V::Scalar* x) {
  auto acc0 = V::zero();
  auto acc1 = V::zero();
  std::size_t i = 0;
  for (; i + 2 * V::kLanes <= n; i += 2 * V::kLanes) {
    acc0 = V::add(acc0, V::load(x + i));
    acc1 = V::add(acc1, V::load(x + i + V::kLanes));
  }
  for (; i + V::kLanes <= n; i += V::kLanes) acc0 = V::add(acc0, V::load(x + i));
  typename V::Scalar s = V::hsum(V::add(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{
      Isa::kAvx2,
      &gemm_avx2<F32x8>,      &gemm_avx2<F64x4>,
      &axpy_avx2<F32x8>,      &axpy_avx2<F64x4>,
      &add_avx2<F32x8>,       &add_avx2<F64x4>,
      &mul_avx2<F32x8>,       &mul_avx2<F64x4>,
      &relu_avx2<F32x8>,      &relu_avx2<F64x4>,
      &relu_grad_avx2<F32x8>, &relu_grad_avx2<F64x4>,
      &sum_avx2<F32x8>,       &sum_avx2<F64x4>,
  };
  return table;
}

}  // namespace orf::simd

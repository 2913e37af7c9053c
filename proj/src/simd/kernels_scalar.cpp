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

#include "orf/simd/kernels.hpp"

#include <algorithm>

namespace orf::simd {
namespace {

template <typename T>
void gemm_ref(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
              bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void axpy_ref(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void add_ref(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void mul_ref(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void relu_ref(std::size_t n, const T* x, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_grad_ref(std::size_t n, const T* x, const T* g, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? g[i] : T(0);
}

template <typename T>
T sum_ref(std::size_t n, const T* x) {
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Isa::kScalar,
      &gemm_ref<float>,      &gemm_ref<double>,
      &axpy_ref<float>,      &axpy_ref<double>,
      &add_ref<float>,       &add_ref<double>,
      &mul_ref<float>,       &mul_ref<double>,
      &relu_ref<float>,      &relu_ref<double>,
      &relu_grad_ref<float>, &relu_grad_ref<double>,
      &sum_ref<float>,       &sum_ref<double>,
  };
  return table;
}

}  // namespace orf::simd

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

#pragma once

// Data-parallel inner loops used by the tensor core. Every kernel has a scalar
// reference implementation; wider variants are selected once at startup
// based on what the running CPU supports and must agree with the reference
// up to floating-point reassociation.

#include <cstddef>
#include <string_view>

namespace orf::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // C[m x n] = (accumulate ? C : 0) + A[m x k] * B[k x n]; row-major, dense.
  void (*gemm_f32)(std::size_t m, std::size_t n, std::size_t k, const float* a,
                   const float* b, float* c, bool accumulate);
  void (*gemm_f64)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                   const double* b, double* c, bool accumulate);

  // y += alpha * x
  void (*axpy_f32)(std::size_t n, float alpha, const float* x, float* y);
  void (*axpy_f64)(std::size_t n, double alpha, const double* x, double* y);

  void (*add_f32)(std::size_t n, const float* a, const float* b, float* out);
  void (*add_f64)(std::size_t n, const double* a, const double* b, double* out);
  void (*mul_f32)(std::size_t n, const float* a, const float* b, float* out);
  void (*mul_f64)(std::size_t n, const double* a, const double* b, double* out);

  void (*relu_f32)(std::size_t n, const float* x, float* out);
  void (*relu_f64)(std::size_t n, const double* x, double* out);
  // out = grad * (x > 0)
  void (*relu_grad_f32)(std::size_t n, const float* x, const float* grad, float* out);
  void (*relu_grad_f64)(std::size_t n, const double* x, const double* grad,
                        double* out);

  float (*sum_f32)(std::size_t n, const float* x);
  double (*sum_f64)(std::size_t n, const double* x);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_kernels();

// The table every tensor operation goes through. Defaults to the widest
// supported ISA; ORF_ISA=scalar in the environment forces the reference path.
const KernelTable& active();

// Test hook. Not thread-safe; call before any concurrent work starts.
void force_isa(Isa isa);

// Typed front-ends so templated callers do not branch on the scalar type.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate);
template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y);
template <typename T>
void add(std::size_t n, const T* a, const T* b, T* out);
template <typename T>
void mul(std::size_t n, const T* a, const T* b, T* out);
template <typename T>
void relu(std::size_t n, const T* x, T* out);
template <typename T>
void relu_grad(std::size_t n, const T* x, const T* grad, T* out);
template <typename T>
T sum(std::size_t n, const T* x);

}  // namespace orf::simd

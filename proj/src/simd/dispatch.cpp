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

#include <cstdlib>
#include <string>

#include "orf/simd/kernels.hpp"

namespace orf::simd {

#if defined(ORF_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(ORF_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* select_default() {
  if (const char* env = std::getenv("ORF_ISA"); env != nullptr && std::string(env) == "scalar")
    return &scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

const KernelTable*& active_slot() {
  static const KernelTable* slot = select_default();
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable* avx2_kernels() {
#if defined(ORF_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *active_slot(); }

void force_isa(Isa isa) {
  if (isa == Isa::kAvx2 && avx2_kernels() != nullptr) {
    active_slot() = avx2_kernels();
  } else {
    active_slot() = &scalar_kernels();
  }
}

template <>
void gemm<float>(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b,
                 float* c, bool accumulate) {
  active().gemm_f32(m, n, k, a, b, c, accumulate);
}
template <>
void gemm<double>(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate) {
  active().gemm_f64(m, n, k, a, b, c, accumulate);
}
template <>
void axpy<float>(std::size_t n, float alpha, const float* x, float* y) {
  active().axpy_f32(n, alpha, x, y);
}
template <>
void axpy<double>(std::size_t n, double alpha, const double* x, double* y) {
  active().axpy_f64(n, alpha, x, y);
}
template <>
void add<float>(std::size_t n, const float* a, const float* b, float* out) {
  active().add_f32(n, a, b, out);
}
template <>
void add<double>(std::size_t n, const double* a, const double* b, double* out) {
  active().add_f64(n, a, b, out);
}
template <>
void mul<float>(std::size_t n, const float* a, const float* b, float* out) {
  active().mul_f32(n, a, b, out);
}
template <>
void mul<double>(std::size_t n, const double* a, const double* b, double* out) {
  active().mul_f64(n, a, b, out);
}
template <>
void relu<float>(std::size_t n, const float* x, float* out) {
  active().relu_f32(n, x, out);
}
template <>
void relu<double>(std::size_t n, const double* x, double* out) {
  active().relu_f64(n, x, out);
}
template <>
void relu_grad<float>(std::size_t n, const float* x, const float* g, float* out) {
  active().relu_grad_f32(n, x, g, out);
}
template <>
void relu_grad<double>(std::size_t n, const double* x, const double* g, double* out) {
  active().relu_grad_f64(n, x, g, out);
}
template <>
float sum<float>(std::size_t n, const float* x) {
  return active().sum_f32(n, x);
}
template <>
double sum<double>(std::size_t n, const double* x) {
  return active().sum_f64(n, x);
}

}  // namespace orf::simd

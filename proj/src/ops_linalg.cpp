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

#include "ops_internal.hpp"
#include "orf/simd/kernels.hpp"

namespace orf::ops {

using detail::require_same_dtype;
using detail::transpose_block;

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("transpose expects rank 2, got " + shape_str(x.shape()));
  const std::size_t m = x.dim(0);
  const std::size_t n = x.dim(1);
  Tensor out = make_result({n, m}, x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    transpose_block<T>(m, n, x.data<T>().data(), out.mutable_data<T>().data());
  });
  if (needs_record({&x})) {
    auto rule = [](const Tensor& g) -> std::vector<Tensor> { return {transpose(g)}; };
    record_op("transpose", {x}, out, rule, rule);
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_dtype(a, b, "matmul");
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: inner extents differ for " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  const std::size_t m = a.dim(0);
  const std::size_t k = a.dim(1);
  const std::size_t n = b.dim(1);
  Tensor out = make_result({m, n}, a.dtype());
  dispatch(a.dtype(), [&]<typename T>(T) {
    simd::gemm<T>(m, n, k, a.data<T>().data(), b.data<T>().data(), out.mutable_data<T>().data(),
                  false);
  });
  if (needs_record({&a, &b})) {
    auto rule = [a, b](const Tensor& g) -> std::vector<Tensor> {
      Tensor ga, gb;
      if (a.requires_grad()) ga = matmul(g, transpose(b));
      if (b.requires_grad()) gb = matmul(transpose(a), g);
      return {ga, gb};
    };
    record_op("matmul", {a, b}, out, rule, rule);
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require_same_dtype(x, w, "linear");
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(1))
    throw ShapeError("linear: input " + shape_str(x.shape()) + " does not match weight " +
                     shape_str(w.shape()));
  const std::size_t rows = x.dim(0);
  const std::size_t in = w.dim(1);
  const std::size_t out_dim = w.dim(0);
  if (bias.defined() && (bias.numel() != out_dim || bias.dtype() != x.dtype()))
    throw ShapeError("linear: bias " + shape_str(bias.shape()) + " does not match weight " +
                     shape_str(w.shape()));
  Tensor out = make_result({rows, out_dim}, x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    std::vector<T> wt(in * out_dim);
    transpose_block<T>(out_dim, in, w.data<T>().data(), wt.data());
    auto ov = out.mutable_data<T>();
    if (bias.defined()) {
      auto bv = bias.data<T>();
      for (std::size_t r = 0; r < rows; ++r) std::copy(bv.begin(), bv.end(), ov.data() + r * out_dim);
    }
    simd::gemm<T>(rows, out_dim, in, x.data<T>().data(), wt.data(), ov.data(), bias.defined());
  });
  if (needs_record({&x, &w, &bias})) {
    auto rule = [x, w, bias](const Tensor& g) -> std::vector<Tensor> {
      Tensor gx, gw, gb;
      if (x.requires_grad()) gx = matmul(g, w);
      if (w.requires_grad()) gw = matmul(transpose(g), x);
      if (bias.defined() && bias.requires_grad()) gb = reshape(sum(g, 0), bias.shape());
      return {gx, gw, gb};
    };
    record_op("linear", {x, w, bias}, out, rule, rule);
  }
  return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank())
    throw ShapeError("softmax axis " + std::to_string(axis) + " invalid for " +
                     shape_str(x.shape()));
  std::size_t outer = 1, inner = 1;
  const std::size_t len = x.dim(axis);
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  Tensor out = make_result(x.shape(), x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * len * inner + i;
        T m = in[base];
        for (std::size_t l = 1; l < len; ++l) m = std::max(m, in[base + l * inner]);
        T s = 0;
        for (std::size_t l = 0; l < len; ++l) {
          const T e = std::exp(in[base + l * inner] - m);
          ov[base + l * inner] = e;
          s += e;
        }
        for (std::size_t l = 0; l < len; ++l) ov[base + l * inner] /= s;
      }
  });
  if (needs_record({&x})) {
    record_op("softmax", {x}, out,
              [out, outer, inner, len](const Tensor& g) -> std::vector<Tensor> {
                Tensor gx = make_result(out.shape(), out.dtype());
                dispatch(out.dtype(), [&]<typename T>(T) {
                  auto yv = out.data<T>();
                  auto gv = g.data<T>();
                  auto r = gx.mutable_data<T>();
                  for (std::size_t o = 0; o < outer; ++o)
                    for (std::size_t i = 0; i < inner; ++i) {
                      const std::size_t base = o * len * inner + i;
                      T dot = 0;
                      for (std::size_t l = 0; l < len; ++l)
                        dot += gv[base + l * inner] * yv[base + l * inner];
                      for (std::size_t l = 0; l < len; ++l)
                        r[base + l * inner] = yv[base + l * inner] * (gv[base + l * inner] - dot);
                    }
                });
                return {gx};
              });
  }
  return out;
}

}  // namespace orf::ops

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

#include <vector>

#include "orf/ops.hpp"

namespace orf::ops::detail {

// Strides of `in` laid out against the (right-aligned) broadcast shape `out`;
// broadcast axes get stride 0.
inline std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  const std::size_t offset = out.size() - in.size();
  for (std::size_t i = in.size(); i-- > 0;) {
    strides[offset + i] = in[i] == 1 ? 0 : stride;
    stride *= in[i];
  }
  return strides;
}

// Calls fn(flat_out, offset_a, offset_b) for every element of `out`.
template <typename F>
void for_each_broadcast(const Shape& out, const std::vector<std::size_t>& sa,
                        const std::vector<std::size_t>& sb, F&& fn) {
  const std::size_t total = shape_numel(out);
  if (total == 0) return;
  const std::size_t rank = out.size();
  if (rank == 0) {
    fn(0, 0, 0);
    return;
  }
  const std::size_t inner = out[rank - 1];
  const std::size_t ia_step = sa[rank - 1];
  const std::size_t ib_step = sb[rank - 1];
  std::vector<std::size_t> counter(rank, 0);
  std::size_t base_a = 0;
  std::size_t base_b = 0;
  for (std::size_t flat = 0; flat < total; flat += inner) {
    std::size_t ia = base_a;
    std::size_t ib = base_b;
    for (std::size_t j = 0; j < inner; ++j) {
      fn(flat + j, ia, ib);
      ia += ia_step;
      ib += ib_step;
    }
    for (std::size_t ax = rank - 1; ax-- > 0;) {
      ++counter[ax];
      base_a += sa[ax];
      base_b += sb[ax];
      if (counter[ax] < out[ax]) break;
      base_a -= sa[ax] * out[ax];
      base_b -= sb[ax] * out[ax];
      counter[ax] = 0;
    }
  }
}

inline void require_same_dtype(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype())
    throw ShapeError(std::string(op) + ": operands have different precision (" +
                     std::string(dtype_name(a.dtype())) + " vs " +
                     std::string(dtype_name(b.dtype())) + ")");
}

// Row-major transpose of an m x n block.
template <typename T>
void transpose_block(std::size_t m, std::size_t n, const T* in, T* out) {
  constexpr std::size_t kTile = 32;
  for (std::size_t i0 = 0; i0 < m; i0 += kTile)
    for (std::size_t j0 = 0; j0 < n; j0 += kTile)
      for (std::size_t i = i0; i < std::min(m, i0 + kTile); ++i)
        for (std::size_t j = j0; j < std::min(n, j0 + kTile); ++j) out[j * m + i] = in[i * n + j];
}

}  // namespace orf::ops::detail

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

// Differentiable tensor operations. Binary elementwise ops broadcast over
// trailing axes (numpy rules): shapes are right-aligned and every pair of
// extents must be equal or one of them must be 1.

#include <span>

#include "orf/tensor.hpp"

namespace orf::ops {

Shape broadcast_shapes(const Shape& a, const Shape& b);

// ---- elementwise
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// Division by zero yields inf/nan; callers that can hit it must guard.
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, double s);
Tensor add_scalar(const Tensor& x, double s);
Tensor exp(const Tensor& x);
// log of non-positive input yields -inf/nan (checked by all_finite).
Tensor log(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor pow(const Tensor& x, double exponent);
Tensor square(const Tensor& x);
// log(1 + exp(x)), stable for large |x|.
Tensor softplus(const Tensor& x);

// ---- reductions
Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis, bool keepdim = false);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis, bool keepdim = false);
Tensor max(const Tensor& x, std::size_t axis, bool keepdim = false);

// ---- shape
Tensor reshape(const Tensor& x, const Shape& shape);
Tensor broadcast_to(const Tensor& x, const Shape& shape);
// Sums x down to `shape` (inverse of broadcast_to).
Tensor sum_to(const Tensor& x, const Shape& shape);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor transpose(const Tensor& x);  // rank 2

// ---- linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);
// x[N x in] * w[out x in]^T + bias[out]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);
Tensor softmax(const Tensor& x, std::size_t axis);

// ---- spatial (channel-major images, C x H x W)
// 3x3 cross-correlation, zero "same" padding, H' = ceil(H / stride).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride);
// Adjoints of conv2d, exposed as ops so gradient penalties can
// differentiate through them.
Tensor conv2d_input_grad(const Tensor& grad_out, const Tensor& w, const Shape& input_shape,
                         std::size_t stride);
Tensor conv2d_weight_grad(const Tensor& x, const Tensor& grad_out, std::size_t stride);
// Bilinear resampling with half-pixel centers (align_corners = false).
Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w);

// ---- checks
bool all_finite(const Tensor& x);

}  // namespace orf::ops

namespace orf {

inline Tensor operator+(const Tensor& a, const Tensor& b) { return ops::add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return ops::sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return ops::mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return ops::div(a, b); }
inline Tensor operator-(const Tensor& a) { return ops::neg(a); }
inline Tensor operator*(const Tensor& a, double s) { return ops::scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return ops::scale(a, s); }
inline Tensor operator+(const Tensor& a, double s) { return ops::add_scalar(a, s); }

}  // namespace orf

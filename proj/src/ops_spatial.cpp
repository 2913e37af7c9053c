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

namespace {

constexpr std::size_t kKernel = 3;

struct ConvGeometry {
  std::size_t channels = 0, h = 0, w = 0;
  std::size_t out_h = 0, out_w = 0;
  std::size_t pad_top = 0, pad_left = 0;
  std::size_t stride = 1;

  std::size_t pixels() const { return out_h * out_w; }
  std::size_t patch() const { return channels * kKernel * kKernel; }
};

std::size_t same_pad_before(std::size_t in, std::size_t out, std::size_t stride) {
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>((out - 1) * stride + kKernel) -
                               static_cast<std::ptrdiff_t>(in);
  return total > 0 ? static_cast<std::size_t>(total) / 2 : 0;
}

ConvGeometry geometry(const Shape& input, std::size_t stride) {
  if (input.size() != 3)
    throw ShapeError("conv2d expects a C x H x W input, got " + shape_str(input));
  if (stride != 1 && stride != 2) throw ShapeError("conv2d stride must be 1 or 2");
  ConvGeometry g;
  g.channels = input[0];
  g.h = input[1];
  g.w = input[2];
  g.stride = stride;
  g.out_h = (g.h + stride - 1) / stride;
  g.out_w = (g.w + stride - 1) / stride;
  g.pad_top = same_pad_before(g.h, g.out_h, stride);
  g.pad_left = same_pad_before(g.w, g.out_w, stride);
  return g;
}

void check_weight(const Tensor& w, std::size_t in_channels) {
  if (w.rank() != 4 || w.dim(2) != kKernel || w.dim(3) != kKernel)
    throw ShapeError("conv2d weight must be Cout x Cin x 3 x 3, got " + shape_str(w.shape()));
  if (w.dim(1) != in_channels)
    throw ShapeError("conv2d channel mismatch: weight expects " + std::to_string(w.dim(1)) +
                     " input channels, input has " + std::to_string(in_channels));
}

// cols[(c*9 + ky*3 + kx) * P + p] = x[c, oy*s + ky - pad, ox*s + kx - pad]
template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* cols) {
  const std::size_t P = g.pixels();
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t ky = 0; ky < kKernel; ++ky)
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        T* row = cols + ((c * kKernel + ky) * kKernel + kx) * P;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad_top);
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.pad_left);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) ? T(0) : src[ix];
          }
        }
      }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* cols, T* x) {
  const std::size_t P = g.pixels();
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t ky = 0; ky < kKernel; ++ky)
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        const T* row = cols + ((c * kKernel + ky) * kKernel + kx) * P;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad_top);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* dst = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.pad_left);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) dst[ix] += row[oy * g.out_w + ox];
          }
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride) {
  require_same_dtype(x, w, "conv2d");
  const ConvGeometry g = geometry(x.shape(), stride);
  check_weight(w, g.channels);
  const std::size_t cout = w.dim(0);
  if (bias.defined() && bias.numel() != cout)
    throw ShapeError("conv2d bias has " + std::to_string(bias.numel()) + " entries, expected " +
                     std::to_string(cout));
  Tensor out = make_result({cout, g.out_h, g.out_w}, x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    std::vector<T> cols(g.patch() * g.pixels());
    im2col<T>(g, x.data<T>().data(), cols.data());
    auto ov = out.mutable_data<T>();
    if (bias.defined()) {
      auto bv = bias.data<T>();
      for (std::size_t o = 0; o < cout; ++o)
        std::fill(ov.data() + o * g.pixels(), ov.data() + (o + 1) * g.pixels(), bv[o]);
    }
    simd::gemm<T>(cout, g.pixels(), g.patch(), w.data<T>().data(), cols.data(), ov.data(),
                  bias.defined());
  });
  if (needs_record({&x, &w, &bias})) {
    auto rule = [x, w, bias, stride](const Tensor& gout) -> std::vector<Tensor> {
      Tensor gx, gw, gb;
      if (x.requires_grad()) gx = conv2d_input_grad(gout, w, x.shape(), stride);
      if (w.requires_grad()) gw = conv2d_weight_grad(x, gout, stride);
      if (bias.defined() && bias.requires_grad()) {
        const Shape flat{gout.dim(0), gout.dim(1) * gout.dim(2)};
        gb = reshape(sum(reshape(gout, flat), 1), bias.shape());
      }
      return {gx, gw, gb};
    };
    record_op("conv2d", {x, w, bias}, out, rule, rule);
  }
  return out;
}

Tensor conv2d_input_grad(const Tensor& grad_out, const Tensor& w, const Shape& input_shape,
                         std::size_t stride) {
  require_same_dtype(grad_out, w, "conv2d_input_grad");
  const ConvGeometry g = geometry(input_shape, stride);
  check_weight(w, g.channels);
  const std::size_t cout = w.dim(0);
  if (grad_out.shape() != Shape{cout, g.out_h, g.out_w})
    throw ShapeError("conv2d_input_grad: gradient " + shape_str(grad_out.shape()) +
                     " does not match the conv output");
  Tensor out = make_result(input_shape, grad_out.dtype());
  dispatch(grad_out.dtype(), [&]<typename T>(T) {
    std::vector<T> wt(g.patch() * cout);
    transpose_block<T>(cout, g.patch(), w.data<T>().data(), wt.data());
    std::vector<T> cols(g.patch() * g.pixels());
    simd::gemm<T>(g.patch(), g.pixels(), cout, wt.data(), grad_out.data<T>().data(), cols.data(),
                  false);
    col2im<T>(g, cols.data(), out.mutable_data<T>().data());
  });
  if (needs_record({&grad_out, &w})) {
    auto rule = [grad_out, w, stride](const Tensor& h) -> std::vector<Tensor> {
      Tensor gg, gw;
      if (grad_out.requires_grad()) gg = conv2d(h, w, Tensor(), stride);
      if (w.requires_grad()) gw = conv2d_weight_grad(h, grad_out, stride);
      return {gg, gw};
    };
    record_op("conv2d_input_grad", {grad_out, w}, out, rule, rule);
  }
  return out;
}

Tensor conv2d_weight_grad(const Tensor& x, const Tensor& grad_out, std::size_t stride) {
  require_same_dtype(x, grad_out, "conv2d_weight_grad");
  const ConvGeometry g = geometry(x.shape(), stride);
  if (grad_out.rank() != 3 || grad_out.dim(1) != g.out_h || grad_out.dim(2) != g.out_w)
    throw ShapeError("conv2d_weight_grad: gradient " + shape_str(grad_out.shape()) +
                     " does not match the conv output");
  const std::size_t cout = grad_out.dim(0);
  Tensor out = make_result({cout, g.channels, kKernel, kKernel}, x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    std::vector<T> cols(g.patch() * g.pixels());
    im2col<T>(g, x.data<T>().data(), cols.data());
    std::vector<T> rows(cols.size());
    transpose_block<T>(g.patch(), g.pixels(), cols.data(), rows.data());
    simd::gemm<T>(cout, g.patch(), g.pixels(), grad_out.data<T>().data(), rows.data(),
                  out.mutable_data<T>().data(), false);
  });
  if (needs_record({&x, &grad_out})) {
    auto rule = [x, grad_out, stride](const Tensor& h) -> std::vector<Tensor> {
      Tensor gx, gg;
      if (x.requires_grad()) gx = conv2d_input_grad(grad_out, h, x.shape(), stride);
      if (grad_out.requires_grad()) gg = conv2d(x, h, Tensor(), stride);
      return {gx, gg};
    };
    record_op("conv2d_weight_grad", {x, grad_out}, out, rule, rule);
  }
  return out;
}

namespace {

struct Interp {
  std::vector<std::size_t> i0, i1;
  std::vector<double> frac;
};

// Half-pixel-center source coordinates, clamped at the low edge.
Interp interp_axis(std::size_t in, std::size_t out) {
  Interp r;
  r.i0.resize(out);
  r.i1.resize(out);
  r.frac.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t d = 0; d < out; ++d) {
    double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    std::size_t lo = static_cast<std::size_t>(src);
    if (lo > in - 1) lo = in - 1;
    r.i0[d] = lo;
    r.i1[d] = lo + 1 < in ? lo + 1 : lo;
    r.frac[d] = src - static_cast<double>(lo);
  }
  return r;
}

// A fixed linear map between a C x H x W source grid and a C x h x w target
// grid. `apply` and `adjoint` record each other as their backward rules, so
// the pair supports differentiating through a gradient.
struct ResizeMap {
  Shape src;
  std::size_t out_h, out_w;
  Interp ry, rx;

  Tensor apply(const Tensor& x) const;
  Tensor adjoint(const Tensor& g) const;
};

Tensor ResizeMap::apply(const Tensor& x) const {
  const std::size_t C = src[0], H = src[1], W = src[2];
  Tensor out = make_result({C, out_h, out_w}, x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < out_h; ++y) {
        const T fy = static_cast<T>(ry.frac[y]);
        const T* r0 = in.data() + (c * H + ry.i0[y]) * W;
        const T* r1 = in.data() + (c * H + ry.i1[y]) * W;
        for (std::size_t xx = 0; xx < out_w; ++xx) {
          const T fx = static_cast<T>(rx.frac[xx]);
          const T top = r0[rx.i0[xx]] * (T(1) - fx) + r0[rx.i1[xx]] * fx;
          const T bot = r1[rx.i0[xx]] * (T(1) - fx) + r1[rx.i1[xx]] * fx;
          ov[(c * out_h + y) * out_w + xx] = top * (T(1) - fy) + bot * fy;
        }
      }
  });
  if (needs_record({&x})) {
    const ResizeMap self = *this;
    BackwardFn rule = [self](const Tensor& g) -> std::vector<Tensor> { return {self.adjoint(g)}; };
    record_op("bilinear_resize", {x}, out, rule, rule);
  }
  return out;
}

Tensor ResizeMap::adjoint(const Tensor& g) const {
  const std::size_t C = src[0], H = src[1], W = src[2];
  Tensor gx = make_result(src, g.dtype());
  dispatch(g.dtype(), [&]<typename T>(T) {
    auto gv = g.data<T>();
    auto r = gx.mutable_data<T>();
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < out_h; ++y) {
        const T fy = static_cast<T>(ry.frac[y]);
        T* r0 = r.data() + (c * H + ry.i0[y]) * W;
        T* r1 = r.data() + (c * H + ry.i1[y]) * W;
        for (std::size_t xx = 0; xx < out_w; ++xx) {
          const T fx = static_cast<T>(rx.frac[xx]);
          const T gvv = gv[(c * out_h + y) * out_w + xx];
          r0[rx.i0[xx]] += gvv * (T(1) - fy) * (T(1) - fx);
          r0[rx.i1[xx]] += gvv * (T(1) - fy) * fx;
          r1[rx.i0[xx]] += gvv * fy * (T(1) - fx);
          r1[rx.i1[xx]] += gvv * fy * fx;
        }
      }
  });
  if (needs_record({&g})) {
    const ResizeMap self = *this;
    BackwardFn rule = [self](const Tensor& gg) -> std::vector<Tensor> { return {self.apply(gg)}; };
    record_op("bilinear_resize_adjoint", {g}, gx, rule, rule);
  }
  return gx;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  if (x.rank() != 3) throw ShapeError("bilinear_resize expects C x H x W, got " + shape_str(x.shape()));
  if (out_h == 0 || out_w == 0) throw ShapeError("bilinear_resize: output extents must be positive");
  const ResizeMap map{x.shape(), out_h, out_w, interp_axis(x.dim(1), out_h), interp_axis(x.dim(2), out_w)};
  return map.apply(x);
}

}  // namespace orf::ops

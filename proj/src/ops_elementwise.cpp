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
#include <limits>

#include "ops_internal.hpp"
#include "orf/simd/kernels.hpp"

namespace orf::ops {

using detail::broadcast_strides;
using detail::for_each_broadcast;
using detail::require_same_dtype;

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      throw ShapeError("shapes " + shape_str(a) + " and " + shape_str(b) +
                       " are not broadcast-compatible");
    out[i] = da == 1 ? db : da;
  }
  return out;
}

namespace {

template <typename F>
Tensor binary_forward(const Tensor& a, const Tensor& b, const char* name, F fn) {
  require_same_dtype(a, b, name);
  const Shape out_shape = broadcast_shapes(a.shape(), b.shape());
  Tensor out = make_result(out_shape, a.dtype());
  dispatch(a.dtype(), [&]<typename T>(T) {
    auto av = a.data<T>();
    auto bv = b.data<T>();
    auto ov = out.mutable_data<T>();
    if (a.shape() == b.shape()) {
      for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = fn(av[i], bv[i]);
      return;
    }
    const auto sa = broadcast_strides(a.shape(), out_shape);
    const auto sb = broadcast_strides(b.shape(), out_shape);
    for_each_broadcast(out_shape, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
      ov[o] = fn(av[ia], bv[ib]);
    });
  });
  return out;
}

template <typename Fwd, typename Bwd>
Tensor unary(const Tensor& x, const char* name, Fwd fwd, Bwd bwd) {
  Tensor out = make_result(x.shape(), x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    for (std::size_t i = 0; i < in.size(); ++i) ov[i] = fwd(in[i]);
  });
  if (needs_record({&x})) {
    record_op(name, {x}, out, [x, out, bwd](const Tensor& g) -> std::vector<Tensor> {
      Tensor gx = make_result(x.shape(), x.dtype());
      dispatch(x.dtype(), [&]<typename T>(T) {
        auto xv = x.data<T>();
        auto yv = out.data<T>();
        auto gv = g.data<T>();
        auto r = gx.mutable_data<T>();
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = bwd(xv[i], yv[i], gv[i]);
      });
      return {gx};
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out;
  if (a.shape() == b.shape()) {
    require_same_dtype(a, b, "add");
    out = make_result(a.shape(), a.dtype());
    dispatch(a.dtype(), [&]<typename T>(T) {
      simd::add<T>(out.numel(), a.data<T>().data(), b.data<T>().data(),
                   out.mutable_data<T>().data());
    });
  } else {
    out = binary_forward(a, b, "add", [](auto x, auto y) { return x + y; });
  }
  if (needs_record({&a, &b})) {
    const Shape sa = a.shape();
    const Shape sb = b.shape();
    auto rule = [sa, sb](const Tensor& g) -> std::vector<Tensor> {
      return {sum_to(g, sa), sum_to(g, sb)};
    };
    record_op("add", {a, b}, out, rule, rule);
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tensor out = binary_forward(a, b, "sub", [](auto x, auto y) { return x - y; });
  if (needs_record({&a, &b})) {
    const Shape sa = a.shape();
    const Shape sb = b.shape();
    auto rule = [sa, sb](const Tensor& g) -> std::vector<Tensor> {
      return {sum_to(g, sa), sum_to(neg(g), sb)};
    };
    record_op("sub", {a, b}, out, rule, rule);
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tensor out;
  if (a.shape() == b.shape()) {
    require_same_dtype(a, b, "mul");
    out = make_result(a.shape(), a.dtype());
    dispatch(a.dtype(), [&]<typename T>(T) {
      simd::mul<T>(out.numel(), a.data<T>().data(), b.data<T>().data(),
                   out.mutable_data<T>().data());
    });
  } else {
    out = binary_forward(a, b, "mul", [](auto x, auto y) { return x * y; });
  }
  if (needs_record({&a, &b})) {
    auto rule = [a, b](const Tensor& g) -> std::vector<Tensor> {
      Tensor ga, gb;
      if (a.requires_grad()) ga = sum_to(mul(g, b), a.shape());
      if (b.requires_grad()) gb = sum_to(mul(g, a), b.shape());
      return {ga, gb};
    };
    record_op("mul", {a, b}, out, rule, rule);
  }
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  Tensor out = binary_forward(a, b, "div", [](auto x, auto y) { return x / y; });
  if (needs_record({&a, &b})) {
    record_op("div", {a, b}, out, [a, b, out](const Tensor& g) -> std::vector<Tensor> {
      Tensor ga, gb;
      if (a.requires_grad()) ga = sum_to(div(g, b), a.shape());
      if (b.requires_grad()) gb = sum_to(neg(div(mul(g, out), b)), b.shape());
      return {ga, gb};
    });
  }
  return out;
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor scale(const Tensor& x, double s) {
  Tensor out = make_result(x.shape(), x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    const T f = static_cast<T>(s);
    for (std::size_t i = 0; i < in.size(); ++i) ov[i] = in[i] * f;
  });
  if (needs_record({&x})) {
    auto rule = [s](const Tensor& g) -> std::vector<Tensor> { return {scale(g, s)}; };
    record_op("scale", {x}, out, rule, rule);
  }
  return out;
}

Tensor add_scalar(const Tensor& x, double s) {
  Tensor out = make_result(x.shape(), x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    const T c = static_cast<T>(s);
    for (std::size_t i = 0; i < in.size(); ++i) ov[i] = in[i] + c;
  });
  if (needs_record({&x})) {
    auto rule = [](const Tensor& g) -> std::vector<Tensor> { return {g}; };
    record_op("add_scalar", {x}, out, rule, rule);
  }
  return out;
}

Tensor exp(const Tensor& x) {
  return unary(
      x, "exp", [](auto v) { return std::exp(v); }, [](auto, auto y, auto g) { return g * y; });
}

Tensor log(const Tensor& x) {
  return unary(
      x, "log", [](auto v) { return std::log(v); }, [](auto v, auto, auto g) { return g / v; });
}

Tensor relu(const Tensor& x) {
  Tensor out = make_result(x.shape(), x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    simd::relu<T>(x.numel(), x.data<T>().data(), out.mutable_data<T>().data());
  });
  if (needs_record({&x})) {
    record_op("relu", {x}, out, [x](const Tensor& g) -> std::vector<Tensor> {
      Tensor gx = make_result(x.shape(), x.dtype());
      dispatch(x.dtype(), [&]<typename T>(T) {
        simd::relu_grad<T>(x.numel(), x.data<T>().data(), g.data<T>().data(),
                           gx.mutable_data<T>().data());
      });
      return {gx};
    });
  }
  return out;
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Tensor out = make_result(x.shape(), x.dtype());
  Tensor slope_mask = make_result(x.shape(), x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    auto mv = slope_mask.mutable_data<T>();
    const T s = static_cast<T>(slope);
    for (std::size_t i = 0; i < in.size(); ++i) {
      mv[i] = in[i] > T(0) ? T(1) : s;
      ov[i] = in[i] * mv[i];
    }
  });
  if (needs_record({&x})) {
    // The slope mask is piecewise constant, so g * mask is exact to any order.
    auto rule = [slope_mask](const Tensor& g) -> std::vector<Tensor> {
      return {mul(g, slope_mask)};
    };
    record_op("leaky_relu", {x}, out, rule, rule);
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, "sigmoid",
      [](auto v) {
        using T = decltype(v);
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](auto, auto y, auto g) { return g * y * (decltype(y)(1) - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, "tanh", [](auto v) { return std::tanh(v); },
      [](auto, auto y, auto g) { return g * (decltype(y)(1) - y * y); });
}

Tensor pow(const Tensor& x, double exponent) {
  return unary(
      x, "pow",
      [exponent](auto v) { return static_cast<decltype(v)>(std::pow(v, exponent)); },
      [exponent](auto v, auto, auto g) {
        using T = decltype(v);
        return g * static_cast<T>(exponent * std::pow(v, exponent - 1.0));
      });
}

Tensor square(const Tensor& x) { return mul(x, x); }

Tensor softplus(const Tensor& x) {
  return unary(
      x, "softplus",
      [](auto v) {
        using T = decltype(v);
        return std::max(v, T(0)) + std::log1p(std::exp(-std::abs(v)));
      },
      [](auto v, auto, auto g) {
        using T = decltype(v);
        const T s = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
        return g * s;
      });
}

// -------------------------------------------------------------- reductions --

Tensor sum(const Tensor& x) {
  Tensor out = make_result({1}, x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    out.mutable_data<T>()[0] = simd::sum<T>(x.numel(), x.data<T>().data());
  });
  if (needs_record({&x})) {
    const Shape sx = x.shape();
    auto rule = [sx](const Tensor& g) -> std::vector<Tensor> { return {broadcast_to(g, sx)}; };
    record_op("sum", {x}, out, rule, rule);
  }
  return out;
}

namespace {

struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  if (axis >= s.size())
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Shape reduced_shape(const Shape& s, std::size_t axis, bool keepdim) {
  Shape out = s;
  if (keepdim) {
    out[axis] = 1;
  } else {
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
    if (out.empty()) out.push_back(1);
  }
  return out;
}

}  // namespace

Tensor sum(const Tensor& x, std::size_t axis, bool keepdim) {
  const AxisSplit sp = split_axis(x.shape(), axis);
  Tensor out = make_result(reduced_shape(x.shape(), axis, keepdim), x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      T* dst = ov.data() + o * sp.inner;
      for (std::size_t l = 0; l < sp.len; ++l) {
        const T* src = in.data() + (o * sp.len + l) * sp.inner;
        for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
      }
    }
  });
  if (needs_record({&x})) {
    const Shape sx = x.shape();
    const Shape keep = reduced_shape(sx, axis, true);
    auto rule = [sx, keep](const Tensor& g) -> std::vector<Tensor> {
      return {broadcast_to(reshape(g, keep), sx)};
    };
    record_op("sum_axis", {x}, out, rule, rule);
  }
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mean(const Tensor& x, std::size_t axis, bool keepdim) {
  return scale(sum(x, axis, keepdim), 1.0 / static_cast<double>(x.shape().at(axis)));
}

Tensor max(const Tensor& x, std::size_t axis, bool keepdim) {
  const AxisSplit sp = split_axis(x.shape(), axis);
  if (sp.len == 0) throw ShapeError("max over an empty axis");
  Tensor out = make_result(reduced_shape(x.shape(), axis, keepdim), x.dtype());
  std::vector<std::size_t> argmax(sp.outer * sp.inner, 0);
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t i = 0; i < sp.inner; ++i) {
        std::size_t best = 0;
        T bv = in[o * sp.len * sp.inner + i];
        for (std::size_t l = 1; l < sp.len; ++l) {
          const T v = in[(o * sp.len + l) * sp.inner + i];
          if (v > bv) {
            bv = v;
            best = l;
          }
        }
        ov[o * sp.inner + i] = bv;
        argmax[o * sp.inner + i] = best;
      }
    }
  });
  if (needs_record({&x})) {
    const Shape sx = x.shape();
    record_op("max_axis", {x}, out,
              [sx, sp, argmax = std::move(argmax)](const Tensor& g) -> std::vector<Tensor> {
                Tensor gx = make_result(sx, g.dtype());
                dispatch(g.dtype(), [&]<typename T>(T) {
                  auto gv = g.data<T>();
                  auto r = gx.mutable_data<T>();
                  for (std::size_t o = 0; o < sp.outer; ++o)
                    for (std::size_t i = 0; i < sp.inner; ++i) {
                      const std::size_t l = argmax[o * sp.inner + i];
                      r[(o * sp.len + l) * sp.inner + i] += gv[o * sp.inner + i];
                    }
                });
                return {gx};
              });
  }
  return out;
}

// ------------------------------------------------------------------- shape --

Tensor reshape(const Tensor& x, const Shape& shape) {
  if (shape_numel(shape) != x.numel())
    throw ShapeError("cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  Tensor out = Tensor::from_buffer(shape, x.buffer());
  if (needs_record({&x})) {
    const Shape sx = x.shape();
    auto rule = [sx](const Tensor& g) -> std::vector<Tensor> { return {reshape(g, sx)}; };
    record_op("reshape", {x}, out, rule, rule);
  }
  return out;
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
  if (broadcast_shapes(x.shape(), shape) != shape)
    throw ShapeError("cannot broadcast " + shape_str(x.shape()) + " to " + shape_str(shape));
  Tensor out = make_result(shape, x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    const auto sx = broadcast_strides(x.shape(), shape);
    for_each_broadcast(shape, sx, sx,
                       [&](std::size_t o, std::size_t ia, std::size_t) { ov[o] = in[ia]; });
  });
  if (needs_record({&x})) {
    const Shape sx = x.shape();
    auto rule = [sx](const Tensor& g) -> std::vector<Tensor> { return {sum_to(g, sx)}; };
    record_op("broadcast_to", {x}, out, rule, rule);
  }
  return out;
}

Tensor sum_to(const Tensor& x, const Shape& shape) {
  if (x.shape() == shape) return x;
  if (broadcast_shapes(shape, x.shape()) != x.shape())
    throw ShapeError("cannot sum " + shape_str(x.shape()) + " down to " + shape_str(shape));
  Tensor out = make_result(shape, x.dtype());
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    const auto st = broadcast_strides(shape, x.shape());
    for_each_broadcast(x.shape(), st, st,
                       [&](std::size_t i, std::size_t o, std::size_t) { ov[o] += in[i]; });
  });
  if (needs_record({&x})) {
    const Shape sx = x.shape();
    auto rule = [sx](const Tensor& g) -> std::vector<Tensor> { return {broadcast_to(g, sx)}; };
    record_op("sum_to", {x}, out, rule, rule);
  }
  return out;
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("concat axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    require_same_dtype(parts[0], p, "concat");
    if (p.rank() != first.size()) throw ShapeError("concat rank mismatch");
    for (std::size_t d = 0; d < first.size(); ++d)
      if (d != axis && p.dim(d) != first[d])
        throw ShapeError("concat: shapes " + shape_str(first) + " and " + shape_str(p.shape()) +
                         " differ off the concat axis");
    out_shape[axis] += p.dim(axis);
  }
  const AxisSplit sp = split_axis(out_shape, axis);
  Tensor out = make_result(out_shape, parts[0].dtype());
  std::vector<std::size_t> offsets;
  dispatch(out.dtype(), [&]<typename T>(T) {
    auto ov = out.mutable_data<T>();
    std::size_t off = 0;
    for (const Tensor& p : parts) {
      offsets.push_back(off);
      const std::size_t len = p.dim(axis);
      auto pv = p.data<T>();
      for (std::size_t o = 0; o < sp.outer; ++o)
        std::copy_n(pv.data() + o * len * sp.inner, len * sp.inner,
                    ov.data() + (o * sp.len + off) * sp.inner);
      off += len;
    }
  });
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  if (needs_record(std::span<const Tensor>(inputs))) {
    std::vector<std::size_t> lens;
    for (const Tensor& p : parts) lens.push_back(p.dim(axis));
    auto rule = [axis, offsets, lens](const Tensor& g) -> std::vector<Tensor> {
      std::vector<Tensor> r;
      for (std::size_t i = 0; i < lens.size(); ++i)
        r.push_back(slice(g, axis, offsets[i], offsets[i] + lens[i]));
      return r;
    };
    record_op("concat", std::move(inputs), out, rule, rule);
  }
  return out;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const AxisSplit sp = split_axis(x.shape(), axis);
  if (begin > end || end > sp.len)
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for axis of length " + std::to_string(sp.len));
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  Tensor out = make_result(out_shape, x.dtype());
  const std::size_t len = end - begin;
  dispatch(x.dtype(), [&]<typename T>(T) {
    auto in = x.data<T>();
    auto ov = out.mutable_data<T>();
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::copy_n(in.data() + (o * sp.len + begin) * sp.inner, len * sp.inner,
                  ov.data() + o * len * sp.inner);
  });
  if (needs_record({&x})) {
    const Shape sx = x.shape();
    record_op("slice", {x}, out, [sx, axis, begin, sp, len](const Tensor& g) -> std::vector<Tensor> {
      Tensor gx = make_result(sx, g.dtype());
      dispatch(g.dtype(), [&]<typename T>(T) {
        auto gv = g.data<T>();
        auto r = gx.mutable_data<T>();
        for (std::size_t o = 0; o < sp.outer; ++o)
          std::copy_n(gv.data() + o * len * sp.inner, len * sp.inner,
                      r.data() + (o * sp.len + begin) * sp.inner);
      });
      return {gx};
    });
  }
  return out;
}

bool all_finite(const Tensor& x) {
  return dispatch(x.dtype(), [&]<typename T>(T) {
    for (T v : x.data<T>())
      if (!std::isfinite(v)) return false;
    return true;
  });
}

}  // namespace orf::ops

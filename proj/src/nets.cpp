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

#include "orf/nets.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "orf/ops.hpp"

namespace orf {

// ---------------------------------------------------------------- registry --

Tensor ParamRegistry::add(const std::string& name, Tensor value, bool trainable) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  if (trainable) value.set_requires_grad(true);
  entries_.push_back({name, value, trainable});
  return value;
}

bool ParamRegistry::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

const NamedParam& ParamRegistry::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw std::out_of_range("no parameter named '" + name + "'");
}

std::vector<Tensor> ParamRegistry::trainable() const {
  std::vector<Tensor> out;
  for (const auto& e : entries_)
    if (e.trainable) out.push_back(e.value);
  return out;
}

std::size_t ParamRegistry::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

std::vector<Buffer> ParamRegistry::snapshot() const {
  std::vector<Buffer> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.value.buffer());
  return out;
}

void ParamRegistry::restore(const std::vector<Buffer>& saved) {
  if (saved.size() != entries_.size()) throw std::invalid_argument("snapshot size mismatch");
  for (std::size_t i = 0; i < saved.size(); ++i) {
    Tensor t = entries_[i].value;
    t.mutable_buffer() = saved[i];
  }
}

void ParamRegistry::zero_grads() {
  for (auto& e : entries_) e.value.zero_grad();
}

std::uint64_t ParamRegistry::checksum() const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001B3ull;
    }
  };
  for (const auto& e : entries_) {
    mix(e.name.data(), e.name.size());
    for (std::size_t d : e.value.shape()) {
      const std::uint64_t v = d;
      mix(&v, sizeof v);
    }
    dispatch(e.value.dtype(), [&]<typename T>(T) {
      auto s = e.value.data<T>();
      mix(s.data(), s.size_bytes());
    });
  }
  return h;
}

// -------------------------------------------------------------------- init --

Tensor init_weight(Rng& rng, const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                   Init kind) {
  Tensor t = Tensor::zeros(shape);
  if (kind == Init::kZero) return t;
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  if (kind == Init::kHeUniform) bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  if (kind == Init::kXavierUniform) bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Buffer& b = t.mutable_buffer();
  for (std::size_t i = 0; i < b.size(); ++i) b.set(i, rng.uniform(-bound, bound));
  return t;
}

// ------------------------------------------------------------------ linear --

LinearMap::LinearMap(ParamRegistry& reg, const std::string& name, std::size_t in, std::size_t out,
                     bool bias, Rng& rng, Init init, std::size_t fan_in)
    : in_(in), out_(out) {
  const std::size_t fi = fan_in != 0 ? fan_in : in;
  weight_ = reg.add(name + ".weight", init_weight(rng, {out, in}, fi, out, init));
  if (bias) {
    Tensor b = init == Init::kFanInUniform ? init_weight(rng, {out}, fi, out, init)
                                           : Tensor::zeros({out});
    bias_ = reg.add(name + ".bias", b);
  }
}

Tensor LinearMap::operator()(const Tensor& x) const {
  if (x.rank() == 0 || x.shape().back() != in_)
    throw ShapeError("linear map expects last extent " + std::to_string(in_) + ", got " +
                     shape_str(x.shape()));
  if (x.rank() == 2) return ops::linear(x, weight_, bias_);
  Shape out_shape = x.shape();
  out_shape.back() = out_;
  Tensor flat = ops::reshape(x, {x.numel() / in_, in_});
  return ops::reshape(ops::linear(flat, weight_, bias_), out_shape);
}

// --------------------------------------------------------------------- gru --

GruCell::GruCell(ParamRegistry& reg, const std::string& name, std::size_t dim, Rng& rng)
    : dim_(dim),
      reset_(reg, name + ".reset", 2 * dim, dim, true, rng),
      update_(reg, name + ".update", 2 * dim, dim, true, rng),
      candidate_(reg, name + ".candidate", 2 * dim, dim, true, rng) {}

Tensor GruCell::step(const Tensor& state, const Tensor& input) const {
  if (state.shape() != input.shape() || state.rank() != 2 || state.dim(1) != dim_)
    throw ShapeError("gru step: state " + shape_str(state.shape()) + " and input " +
                     shape_str(input.shape()) + " must both be [K x " + std::to_string(dim_) +
                     "]");
  const Tensor xh = ops::concat({input, state}, 1);
  const Tensor r = ops::sigmoid(reset_(xh));
  const Tensor u = ops::sigmoid(update_(xh));
  const Tensor c = ops::tanh(candidate_(ops::concat({input, r * state}, 1)));
  return state + u * (c - state);
}

// --------------------------------------------------------------------- mlp --

Mlp::Mlp(ParamRegistry& reg, const std::string& name, std::size_t dim, std::size_t hidden,
         Rng& rng)
    : first_(reg, name + ".0", dim, hidden, true, rng),
      second_(reg, name + ".1", hidden, dim, true, rng) {}

Tensor Mlp::operator()(const Tensor& x) const { return second_(ops::relu(first_(x))); }

// ------------------------------------------------------ positional encoding --

Tensor PositionalEncoder::operator()(const Tensor& points) const {
  if (points.rank() != 2 || points.dim(1) != 3)
    throw ShapeError("positional encoding expects [N x 3], got " + shape_str(points.shape()));
  const std::size_t n = points.dim(0);
  const std::size_t width = output_dim();
  const std::size_t offset = include_input_ ? 3 : 0;
  const std::size_t nf = frequencies_;
  Tensor out = make_result({n, width}, points.dtype());
  dispatch(points.dtype(), [&]<typename T>(T) {
    const T* p = points.data<T>().data();
    T* o = out.mutable_data<T>().data();
    for (std::size_t i = 0; i < n; ++i) {
      T* row = o + i * width;
      for (std::size_t a = 0; a < 3; ++a) {
        if (include_input_) row[a] = p[i * 3 + a];
        double f = std::numbers::pi;
        for (std::size_t k = 0; k < nf; ++k, f *= 2.0) {
          const double arg = f * static_cast<double>(p[i * 3 + a]);
          row[offset + k * 6 + a] = static_cast<T>(std::sin(arg));
          row[offset + k * 6 + 3 + a] = static_cast<T>(std::cos(arg));
        }
      }
    }
  });
  if (needs_record({&points})) {
    const bool include = include_input_;
    record_op("positional_encode", {points}, out,
              [points, n, width, offset, nf, include](const Tensor& g) -> std::vector<Tensor> {
                Tensor gp = make_result({n, 3}, points.dtype());
                dispatch(points.dtype(), [&]<typename T>(T) {
                  const T* p = points.data<T>().data();
                  const T* go = g.data<T>().data();
                  T* gi = gp.mutable_data<T>().data();
                  for (std::size_t i = 0; i < n; ++i) {
                    const T* grow = go + i * width;
                    for (std::size_t a = 0; a < 3; ++a) {
                      double acc = include ? static_cast<double>(grow[a]) : 0.0;
                      double f = std::numbers::pi;
                      for (std::size_t k = 0; k < nf; ++k, f *= 2.0) {
                        const double arg = f * static_cast<double>(p[i * 3 + a]);
                        acc += f * std::cos(arg) * static_cast<double>(grow[offset + k * 6 + a]);
                        acc -= f * std::sin(arg) * static_cast<double>(grow[offset + k * 6 + 3 + a]);
                      }
                      gi[i * 3 + a] = static_cast<T>(acc);
                    }
                  }
                });
                return {gp};
              });
  }
  return out;
}

}  // namespace orf

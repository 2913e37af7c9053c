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

#include "orf/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "orf/ops.hpp"

namespace orf {

Tensor coordinate_channels(std::size_t height, std::size_t width) {
  Tensor out = Tensor::zeros({4, height, width});
  Buffer& b = out.mutable_buffer();
  const std::size_t plane = height * width;
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      const double x = width > 1 ? 2.0 * c / static_cast<double>(width - 1) - 1.0 : 0.0;
      const double y = height > 1 ? 2.0 * r / static_cast<double>(height - 1) - 1.0 : 0.0;
      const std::size_t i = r * width + c;
      b.set(i, x);
      b.set(plane + i, y);
      b.set(2 * plane + i, -x);
      b.set(3 * plane + i, -y);
    }
  return out;
}

// ------------------------------------------------------------------- u-net --

UNetEncoder::Conv UNetEncoder::make_conv(ParamRegistry& reg, const std::string& name,
                                         std::size_t in, std::size_t out, std::size_t stride,
                                         Rng& rng) {
  Conv c;
  c.stride = stride;
  c.weight = reg.add(name + ".weight", init_weight(rng, {out, in, 3, 3}, in * 9, out * 9,
                                                   Init::kHeUniform));
  c.bias = reg.add(name + ".bias", Tensor::zeros({out}));
  return c;
}

UNetEncoder::UNetEncoder(ParamRegistry& reg, const std::string& name, const EncoderConfig& cfg,
                         Rng& rng)
    : cfg_(cfg), has_stem_(cfg.stem) {
  if (cfg.resolution == 0 || cfg.channels == 0)
    throw std::invalid_argument("encoder resolution and channels must be positive");
  const std::size_t d = cfg.channels;
  std::size_t in = 7;
  if (has_stem_) {
    conv0_ = make_conv(reg, name + ".conv0", in, d, 1, rng);
    in = d;
  }
  conv1_ = make_conv(reg, name + ".conv1", in, d, has_stem_ ? 2 : 1, rng);
  conv2_ = make_conv(reg, name + ".conv2", d, d, 2, rng);
  conv3_ = make_conv(reg, name + ".conv3", d, d, 2, rng);
  conv4_ = make_conv(reg, name + ".conv4", d, d, 1, rng);
  conv5_ = make_conv(reg, name + ".conv5", 2 * d, d, 1, rng);
  conv6_ = make_conv(reg, name + ".conv6", 2 * d, d, 1, rng);
}

Tensor UNetEncoder::apply(const Conv& c, const Tensor& x) {
  return ops::relu(ops::conv2d(x, c.weight, c.bias, c.stride));
}

std::size_t UNetEncoder::output_resolution() const {
  return has_stem_ ? (cfg_.resolution + 1) / 2 : cfg_.resolution;
}

FeatureMap UNetEncoder::extract(const Tensor& image) const {
  const std::size_t r = cfg_.resolution;
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != r || image.dim(2) != r)
    throw ShapeError("encoder expects an image [3x" + std::to_string(r) + "x" +
                     std::to_string(r) + "], got " + shape_str(image.shape()));
  Tensor coords = coordinate_channels(r, r);
  if (coords.dtype() != image.dtype()) coords = coords.to(image.dtype());
  Tensor x = ops::concat({image, coords}, 0);
  if (has_stem_) x = apply(conv0_, x);
  const Tensor h1 = apply(conv1_, x);
  const Tensor h2 = apply(conv2_, h1);
  const Tensor h3 = apply(conv3_, h2);
  const Tensor h4 = apply(conv4_, h3);
  const Tensor u5 = ops::bilinear_resize(h4, h2.dim(1), h2.dim(2));
  const Tensor h5 = apply(conv5_, ops::concat({u5, h2}, 0));
  const Tensor u6 = ops::bilinear_resize(h5, h1.dim(1), h1.dim(2));
  const Tensor h6 = apply(conv6_, ops::concat({u6, h1}, 0));
  FeatureMap fm;
  fm.height = h6.dim(1);
  fm.width = h6.dim(2);
  fm.features = ops::transpose(ops::reshape(h6, {h6.dim(0), fm.height * fm.width}));
  return fm;
}

// ------------------------------------------------------------------- slots --

SlotSet sample_slots(const SlotPriors& priors, std::size_t k, std::uint64_t seed) {
  const std::size_t d = priors.mu_bg.dim(1);
  const DType dt = priors.mu_bg.dtype();
  Rng rng(seed);
  Tensor eps_bg = Tensor::zeros({1, d}, dt);
  Tensor eps_fg = Tensor::zeros({k, d}, dt);
  for (std::size_t i = 0; i < d; ++i) eps_bg.mutable_buffer().set(i, rng.normal());
  for (std::size_t i = 0; i < k * d; ++i) eps_fg.mutable_buffer().set(i, rng.normal());
  SlotSet s;
  s.background = priors.mu_bg + ops::exp(priors.log_sigma_bg) * eps_bg;
  s.foreground = priors.mu_fg + ops::exp(priors.log_sigma_fg) * eps_fg;
  return s;
}

bool slots_collapsed(const Tensor& foreground, double threshold) {
  const std::size_t k = foreground.dim(0), d = foreground.dim(1);
  const std::vector<double> v = foreground.to_vector();
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      double dot = 0, ni = 0, nj = 0;
      for (std::size_t c = 0; c < d; ++c) {
        dot += v[i * d + c] * v[j * d + c];
        ni += v[i * d + c] * v[i * d + c];
        nj += v[j * d + c] * v[j * d + c];
      }
      if (ni > 0 && nj > 0 && dot / std::sqrt(ni * nj) > threshold) return true;
    }
  return false;
}

SlotAttention::SlotAttention(ParamRegistry& reg, const std::string& name, std::size_t dim,
                             std::size_t iterations, Rng& rng)
    : dim_(dim), iterations_(iterations) {
  if (iterations == 0) throw std::invalid_argument("slot attention needs at least one iteration");
  auto prior = [&](const std::string& n) {
    return reg.add(name + "." + n, init_weight(rng, {1, dim}, 1, dim, Init::kXavierUniform));
  };
  priors_.mu_bg = prior("mu_bg");
  priors_.log_sigma_bg = prior("log_sigma_bg");
  priors_.mu_fg = prior("mu_fg");
  priors_.log_sigma_fg = prior("log_sigma_fg");
  key_ = LinearMap(reg, name + ".key", dim, dim, false, rng);
  query_bg_ = LinearMap(reg, name + ".query_bg", dim, dim, false, rng);
  query_fg_ = LinearMap(reg, name + ".query_fg", dim, dim, false, rng);
  value_bg_ = LinearMap(reg, name + ".value_bg", dim, dim, false, rng);
  value_fg_ = LinearMap(reg, name + ".value_fg", dim, dim, false, rng);
  gru_bg_ = GruCell(reg, name + ".gru_bg", dim, rng);
  gru_fg_ = GruCell(reg, name + ".gru_fg", dim, rng);
  mlp_bg_ = Mlp(reg, name + ".mlp_bg", dim, 2 * dim, rng);
  mlp_fg_ = Mlp(reg, name + ".mlp_fg", dim, 2 * dim, rng);
}

SlotAttentionResult SlotAttention::run(const Tensor& features, const SlotSet& init) const {
  if (features.rank() != 2 || features.dim(1) != dim_)
    throw ShapeError("slot attention expects features [N x " + std::to_string(dim_) + "], got " +
                     shape_str(features.shape()));
  const std::size_t k = init.num_foreground();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dim_));
  const Tensor keys = key_(features);
  const Tensor values_bg = value_bg_(features);
  const Tensor values_fg = value_fg_(features);
  Tensor slot_bg = init.background;
  Tensor slots_fg = init.foreground;
  Tensor attn, weights;
  for (std::size_t t = 0; t < iterations_; ++t) {
    const Tensor queries = ops::concat({query_bg_(slot_bg), query_fg_(slots_fg)}, 0);
    attn = ops::softmax(ops::scale(ops::matmul(keys, ops::transpose(queries)), inv_sqrt_d), 1);
    Tensor column = ops::sum(attn, 0, true);
    Tensor guard = Tensor::zeros(column.shape(), column.dtype());
    for (std::size_t j = 0; j < column.numel(); ++j)
      if (column.at(j) == 0.0) guard.mutable_buffer().set(j, kColumnEpsilon);
    weights = attn / (column + guard);
    const Tensor weights_t = ops::transpose(weights);  // [(K+1) x N]
    const Tensor upd_bg = ops::matmul(ops::slice(weights_t, 0, 0, 1), values_bg);
    const Tensor upd_fg = ops::matmul(ops::slice(weights_t, 0, 1, k + 1), values_fg);
    slot_bg = gru_bg_.step(slot_bg, upd_bg);
    slots_fg = gru_fg_.step(slots_fg, upd_fg);
    slot_bg = slot_bg + mlp_bg_(slot_bg);
    slots_fg = slots_fg + mlp_fg_(slots_fg);
  }
  SlotAttentionResult r;
  r.slots = {slot_bg, slots_fg};
  r.attention = attn;
  r.weights = weights;
  r.collapsed = k >= 2 && slots_collapsed(slots_fg);
  return r;
}

}  // namespace orf

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

#include "orf/losses.hpp"

#include <cmath>

#include "orf/ops.hpp"

namespace orf {

Tensor recon_loss(const Tensor& render, const Tensor& reference) {
  if (render.shape() != reference.shape())
    throw ShapeError("recon_loss: shapes " + shape_str(render.shape()) + " and " +
                     shape_str(reference.shape()) + " differ");
  return ops::mean(ops::square(render - reference));
}

namespace {

Tensor conv_block_weight(Rng& rng, std::size_t in, std::size_t out, Init kind) {
  return init_weight(rng, {out, in, 3, 3}, in * 9, out * 9, kind);
}

}  // namespace

FeatureExtractor::FeatureExtractor(ParamRegistry& reg, const std::string& name, Rng& rng,
                                   std::vector<std::size_t> channels) {
  std::size_t in = 3;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const std::string base = name + ".conv" + std::to_string(i);
    weights_.push_back(
        reg.add(base + ".weight", conv_block_weight(rng, in, channels[i], Init::kHeUniform), false));
    biases_.push_back(reg.add(base + ".bias", Tensor::zeros({channels[i]}), false));
    in = channels[i];
  }
}

std::vector<Tensor> FeatureExtractor::features(const Tensor& image) const {
  std::vector<Tensor> out;
  Tensor h = image;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    h = ops::relu(ops::conv2d(h, weights_[i], biases_[i], 2));
    out.push_back(h);
  }
  return out;
}

Tensor perceptual_loss(const Tensor& render, const Tensor& reference,
                       const FeatureExtractor& extractor) {
  if (render.shape() != reference.shape())
    throw ShapeError("perceptual_loss: shapes " + shape_str(render.shape()) + " and " +
                     shape_str(reference.shape()) + " differ");
  const std::vector<Tensor> a = extractor.features(render);
  std::vector<Tensor> b;
  {
    NoGradGuard no_grad;
    b = extractor.features(reference.detach());
  }
  Tensor total;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Tensor term = ops::mean(ops::square(a[i] - b[i]));
    total = total.defined() ? total + term : term;
  }
  return total * (1.0 / static_cast<double>(a.size()));
}

double adv_f(double t) {
  // -softplus(-t) = -(max(-t, 0) + log1p(exp(-|t|)))
  return -(std::max(-t, 0.0) + std::log1p(std::exp(-std::abs(t))));
}

Tensor adv_f(const Tensor& t) { return ops::neg(ops::softplus(ops::neg(t))); }

Discriminator::Discriminator(ParamRegistry& reg, const std::string& name, std::size_t resolution,
                             Rng& rng)
    : resolution_(resolution) {
  if (resolution < 16) throw std::invalid_argument("discriminator resolution must be at least 16");
  const std::size_t channels[4] = {32, 64, 128, 128};
  std::size_t in = 3, res = resolution;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string base = name + ".conv" + std::to_string(i);
    weights_.push_back(reg.add(base + ".weight", conv_block_weight(rng, in, channels[i], Init::kHeUniform)));
    biases_.push_back(reg.add(base + ".bias", Tensor::zeros({channels[i]})));
    in = channels[i];
    res = (res + 1) / 2;
  }
  head_ = LinearMap(reg, name + ".head", in * res * res, 1, true, rng, Init::kXavierUniform);
}

Tensor Discriminator::logit(const Tensor& image, bool params_detached) const {
  Tensor h = image;
  if (image.dim(1) != resolution_ || image.dim(2) != resolution_)
    h = ops::bilinear_resize(image, resolution_, resolution_);
  auto maybe = [&](const Tensor& p) { return params_detached ? p.detach() : p; };
  for (std::size_t i = 0; i < weights_.size(); ++i)
    h = ops::leaky_relu(ops::conv2d(h, maybe(weights_[i]), maybe(biases_[i]), 2), 0.2);
  h = ops::reshape(h, {1, h.numel()});
  const Tensor out = ops::linear(h, maybe(head_.weight()), maybe(head_.bias()));
  return ops::reshape(out, {1});
}

namespace {

Tensor mean_of(const std::vector<Tensor>& terms) {
  Tensor total = terms.at(0);
  for (std::size_t i = 1; i < terms.size(); ++i) total = total + terms[i];
  return total * (1.0 / static_cast<double>(terms.size()));
}

}  // namespace

DiscriminatorLoss discriminator_loss(const ImageCritic& critic, std::span<const Tensor> real,
                                     std::span<const Tensor> fake, double lambda_r1) {
  if (real.empty() || fake.empty()) throw std::invalid_argument("discriminator_loss: empty batch");
  std::vector<Tensor> fake_terms, real_terms, r1_terms;
  for (const Tensor& f : fake) fake_terms.push_back(adv_f(critic.logit(f.detach())));
  for (const Tensor& r : real) {
    Tensor x = r.detach().clone().set_requires_grad(true);
    const Tensor d = critic.logit(x);
    real_terms.push_back(adv_f(ops::neg(d)));
    if (lambda_r1 != 0.0) {
      if (!grad_enabled())
        throw AutogradError(
            "R1 penalty needs gradient recording; call discriminator_loss outside NoGradGuard or "
            "set lambda_r1 = 0");
      const Tensor g = grad_with_graph(ops::sum(d), std::span<const Tensor>(&x, 1))[0];
      r1_terms.push_back(ops::sum(ops::square(g)));
    }
  }
  DiscriminatorLoss out;
  out.adv = mean_of(fake_terms) + mean_of(real_terms);
  out.r1 = r1_terms.empty() ? Tensor::zeros({1}, real[0].dtype()) : mean_of(r1_terms);
  out.total = out.adv + out.r1 * lambda_r1;
  return out;
}

Tensor generator_adv_term(const ImageCritic& critic, std::span<const Tensor> fake) {
  if (fake.empty()) throw std::invalid_argument("generator_adv_term: empty batch");
  std::vector<Tensor> terms;
  for (const Tensor& f : fake) terms.push_back(adv_f(critic.logit(f, true)));
  return ops::neg(mean_of(terms));
}

Tensor total_loss(const LossParts& parts, const LossWeights& w) {
  Tensor total = parts.recon;
  if (parts.percept.defined()) total = total + parts.percept * w.percept;
  if (parts.adv.defined()) total = total + parts.adv * w.adv;
  return total;
}

}  // namespace orf

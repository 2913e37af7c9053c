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

#include <span>
#include <string>
#include <vector>

#include "orf/nets.hpp"
#include "orf/rng.hpp"
#include "orf/tensor.hpp"

namespace orf {

// Mean squared error; throws ShapeError unless shapes match.
Tensor recon_loss(const Tensor& render, const Tensor& reference);

// Frozen pyramid of stride-2 conv + ReLU blocks with fixed random weights.
// Parameters are registered non-trainable so they persist with checkpoints
// and can be overwritten with external weights.
class FeatureExtractor {
 public:
  FeatureExtractor() = default;
  FeatureExtractor(ParamRegistry& reg, const std::string& name, Rng& rng,
                   std::vector<std::size_t> channels = {16, 32, 64});

  // image [3 x H x W] -> one feature map per block.
  std::vector<Tensor> features(const Tensor& image) const;
  std::size_t levels() const { return weights_.size(); }

 private:
  std::vector<Tensor> weights_, biases_;
};

// Mean over pyramid levels of the feature MSE. The reference is treated as
// constant, so gradients reach `render` only.
Tensor perceptual_loss(const Tensor& render, const Tensor& reference,
                       const FeatureExtractor& extractor);

// f(t) = -log(1 + exp(-t)) in softplus form.
double adv_f(double t);
Tensor adv_f(const Tensor& t);

// Anything mapping one image [3 x H x W] to a [1] logit. With
// `params_detached` the result carries no gradient to the critic's own
// parameters.
class ImageCritic {
 public:
  virtual ~ImageCritic() = default;
  virtual Tensor logit(const Tensor& image, bool params_detached = false) const = 0;
};

// Four stride-2 3x3 conv blocks (32, 64, 128, 128 channels) with
// LeakyReLU(0.2), then a linear map to one logit. Inputs at another
// resolution are bilinearly resized first.
class Discriminator : public ImageCritic {
 public:
  Discriminator() = default;
  Discriminator(ParamRegistry& reg, const std::string& name, std::size_t resolution, Rng& rng);

  Tensor logit(const Tensor& image, bool params_detached = false) const override;
  std::size_t resolution() const { return resolution_; }

 private:
  std::size_t resolution_ = 0;
  std::vector<Tensor> weights_, biases_;
  LinearMap head_;
};

struct DiscriminatorLoss {
  Tensor total;    // adversarial part + lambda_r1 * r1
  Tensor adv;      // mean f(D(fake)) + mean f(-D(real))
  Tensor r1;       // mean over real images of |grad_I D(I)|^2
};

// Loss the critic minimizes. Fake images are detached; R1 is taken on real
// images only through a nested differentiation pass.
DiscriminatorLoss discriminator_loss(const ImageCritic& critic, std::span<const Tensor> real,
                                     std::span<const Tensor> fake, double lambda_r1);

// Generator side: -mean f(D(fake)), flowing into `fake` only.
Tensor generator_adv_term(const ImageCritic& critic, std::span<const Tensor> fake);

struct LossWeights {
  double percept = 0.006;
  double adv = 0.01;
  double r1 = 10.0;
};

struct LossParts {
  Tensor recon;
  Tensor percept;  // undefined when disabled
  Tensor adv;      // generator term, undefined when disabled
};

// recon + w.percept * percept + w.adv * adv, skipping undefined parts.
Tensor total_loss(const LossParts& parts, const LossWeights& w);

}  // namespace orf

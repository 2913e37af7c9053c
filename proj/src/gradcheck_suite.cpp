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

#include "orf/gradcheck_suite.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "orf/losses.hpp"
#include "orf/model.hpp"
#include "orf/nets.hpp"
#include "orf/ops.hpp"
#include "orf/renderer.hpp"
#include "orf/rng.hpp"

namespace orf {
namespace {

Tensor random_tensor(Rng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(shape, DType::kF64);
  Buffer& b = t.mutable_buffer();
  for (std::size_t i = 0; i < b.size(); ++i) b.set(i, rng.uniform(lo, hi));
  return t;
}

// Values bounded away from zero so piecewise ops are smooth within +-h.
Tensor away_from_zero(Rng& rng, const Shape& shape) {
  Tensor t = random_tensor(rng, shape);
  Buffer& b = t.mutable_buffer();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double v = b.get(i);
    b.set(i, v >= 0 ? v + 0.05 : v - 0.05);
  }
  return t;
}

// Reduces an op output to a scalar with a fixed random projection so every
// output entry contributes a distinct weight.
Tensor project(const Tensor& y, const Tensor& weights) { return ops::sum(y * weights); }

struct Case {
  std::string name;
  // Builds the parameters for a trial and returns the function under test.
  std::function<std::function<Tensor()>(Rng&, std::vector<Tensor>&)> make;
};

Case unary(std::string name, std::function<Tensor(const Tensor&)> f, double lo = -1.0,
           double hi = 1.0, bool kink_at_zero = false) {
  return {std::move(name), [f, lo, hi, kink_at_zero](Rng& rng, std::vector<Tensor>& params) {
            Tensor x = kink_at_zero ? away_from_zero(rng, {3, 4}) : random_tensor(rng, {3, 4}, lo, hi);
            Tensor x_leaf = x.set_requires_grad(true);
            params = {x_leaf};
            Tensor w = random_tensor(rng, {3, 4});
            return [f, x_leaf, w] { return project(f(x_leaf), w); };
          }};
}

Case binary(std::string name, std::function<Tensor(const Tensor&, const Tensor&)> f, Shape sa,
            Shape sb, double blo = -1.0, double bhi = 1.0, Shape out = {}) {
  return {std::move(name), [f, sa, sb, blo, bhi, out](Rng& rng, std::vector<Tensor>& params) {
            Tensor a = random_tensor(rng, sa).set_requires_grad(true);
            Tensor b = random_tensor(rng, sb, blo, bhi).set_requires_grad(true);
            params = {a, b};
            Tensor w = random_tensor(rng, out.empty() ? ops::broadcast_shapes(sa, sb) : out);
            return [f, a, b, w] { return project(f(a, b), w); };
          }};
}

std::vector<Case> tensor_cases() {
  std::vector<Case> cs;
  cs.push_back(binary("add", ops::add, {3, 4}, {3, 4}));
  cs.push_back(binary("add_broadcast", ops::add, {2, 3, 4}, {1, 4}));
  cs.push_back(binary("sub_broadcast", ops::sub, {3, 1}, {2, 3, 4}));
  cs.push_back(binary("mul_broadcast", ops::mul, {2, 1, 4}, {3, 1}));
  cs.push_back(binary("div", ops::div, {3, 4}, {3, 4}, 0.5, 2.0));
  cs.push_back(unary("neg", ops::neg));
  cs.push_back(unary("scale", [](const Tensor& x) { return ops::scale(x, -1.7); }));
  cs.push_back(unary("add_scalar", [](const Tensor& x) { return ops::add_scalar(x, 0.3); }));
  cs.push_back(unary("exp", ops::exp));
  cs.push_back(unary("log", ops::log, 0.2, 2.0));
  cs.push_back(unary("relu", ops::relu, -1, 1, true));
  cs.push_back(unary("leaky_relu", [](const Tensor& x) { return ops::leaky_relu(x, 0.2); }, -1, 1,
                     true));
  cs.push_back(unary("sigmoid", ops::sigmoid, -3, 3));
  cs.push_back(unary("tanh", ops::tanh, -2, 2));
  cs.push_back(unary("pow", [](const Tensor& x) { return ops::pow(x, 2.5); }, 0.2, 2.0));
  cs.push_back(unary("square", ops::square));
  cs.push_back(unary("softplus", ops::softplus, -4, 4));
  cs.push_back(unary("sum", [](const Tensor& x) { return ops::square(ops::sum(x)); }));
  cs.push_back(unary("sum_axis0", [](const Tensor& x) { return ops::sum(x, 0); }));
  cs.push_back(unary("sum_axis1_keep", [](const Tensor& x) {
    return ops::broadcast_to(ops::sum(x, 1, true), {3, 4});
  }));
  cs.push_back(unary("mean", [](const Tensor& x) { return ops::square(ops::mean(x)); }));
  cs.push_back(unary("mean_axis1", [](const Tensor& x) {
    return ops::broadcast_to(ops::mean(x, 1, true), {3, 4});
  }));
  cs.push_back({"max_axis", [](Rng& rng, std::vector<Tensor>& params) {
                  // Distinct entries keep the maximum away from ties.
                  Tensor x = Tensor::zeros({3, 4}, DType::kF64);
                  for (std::size_t i = 0; i < 12; ++i)
                    x.mutable_buffer().set(i, 0.1 * static_cast<double>((i * 7) % 12) +
                                                  rng.uniform(0.0, 0.01));
                  x.set_requires_grad(true);
                  params = {x};
                  Tensor w = random_tensor(rng, {4});
                  return [x, w] { return project(ops::max(x, 0), w); };
                }});
  cs.push_back(unary("reshape", [](const Tensor& x) {
    return ops::reshape(ops::square(ops::reshape(x, {2, 6})), {3, 4});
  }));
  cs.push_back({"broadcast_to", [](Rng& rng, std::vector<Tensor>& params) {
                  Tensor x = random_tensor(rng, {3, 1}).set_requires_grad(true);
                  params = {x};
                  Tensor w = random_tensor(rng, {2, 3, 4});
                  return [x, w] { return project(ops::broadcast_to(x, {2, 3, 4}), w); };
                }});
  cs.push_back({"sum_to", [](Rng& rng, std::vector<Tensor>& params) {
                  Tensor x = random_tensor(rng, {2, 3, 4}).set_requires_grad(true);
                  params = {x};
                  Tensor w = random_tensor(rng, {3, 1});
                  return [x, w] { return project(ops::square(ops::sum_to(x, {3, 1})), w); };
                }});
  cs.push_back(binary("concat", [](const Tensor& a, const Tensor& b) {
    return ops::concat({a, ops::square(b)}, 1);
  }, {3, 2}, {3, 2}, -1.0, 1.0, {3, 4}));
  cs.push_back(unary("slice", [](const Tensor& x) {
    const Tensor s = ops::slice(x, 1, 1, 3);
    return ops::concat({s, ops::square(s)}, 1);
  }));
  cs.push_back(unary("transpose", [](const Tensor& x) {
    return ops::transpose(ops::square(ops::transpose(x)));
  }));
  cs.push_back(binary("matmul", ops::matmul, {3, 5}, {5, 4}, -1.0, 1.0, {3, 4}));
  cs.push_back({"linear", [](Rng& rng, std::vector<Tensor>& params) {
                  Tensor x = random_tensor(rng, {3, 5}).set_requires_grad(true);
                  Tensor w = random_tensor(rng, {4, 5}).set_requires_grad(true);
                  Tensor b = random_tensor(rng, {4}).set_requires_grad(true);
                  params = {x, w, b};
                  Tensor p = random_tensor(rng, {3, 4});
                  return [x, w, b, p] { return project(ops::linear(x, w, b), p); };
                }});
  cs.push_back(unary("softmax_axis1", [](const Tensor& x) { return ops::softmax(x, 1); }, -2, 2));
  cs.push_back(unary("softmax_axis0", [](const Tensor& x) { return ops::softmax(x, 0); }, -2, 2));
  for (std::size_t stride : {1u, 2u}) {
    cs.push_back({"conv2d_s" + std::to_string(stride),
                  [stride](Rng& rng, std::vector<Tensor>& params) {
                    Tensor x = random_tensor(rng, {2, 5, 4}).set_requires_grad(true);
                    Tensor w = random_tensor(rng, {3, 2, 3, 3}).set_requires_grad(true);
                    Tensor b = random_tensor(rng, {3}).set_requires_grad(true);
                    params = {x, w, b};
                    const std::size_t oh = (5 + stride - 1) / stride, ow = (4 + stride - 1) / stride;
                    Tensor p = random_tensor(rng, {3, oh, ow});
                    return [x, w, b, p, stride] { return project(ops::conv2d(x, w, b, stride), p); };
                  }});
    cs.push_back({"conv2d_input_grad_s" + std::to_string(stride),
                  [stride](Rng& rng, std::vector<Tensor>& params) {
                    const std::size_t oh = (5 + stride - 1) / stride, ow = (4 + stride - 1) / stride;
                    Tensor g = random_tensor(rng, {3, oh, ow}).set_requires_grad(true);
                    Tensor w = random_tensor(rng, {3, 2, 3, 3}).set_requires_grad(true);
                    params = {g, w};
                    Tensor p = random_tensor(rng, {2, 5, 4});
                    return [g, w, p, stride] {
                      return project(ops::conv2d_input_grad(g, w, {2, 5, 4}, stride), p);
                    };
                  }});
    cs.push_back({"conv2d_weight_grad_s" + std::to_string(stride),
                  [stride](Rng& rng, std::vector<Tensor>& params) {
                    const std::size_t oh = (5 + stride - 1) / stride, ow = (4 + stride - 1) / stride;
                    Tensor x = random_tensor(rng, {2, 5, 4}).set_requires_grad(true);
                    Tensor g = random_tensor(rng, {3, oh, ow}).set_requires_grad(true);
                    params = {x, g};
                    Tensor p = random_tensor(rng, {3, 2, 3, 3});
                    return [x, g, p, stride] {
                      return project(ops::conv2d_weight_grad(x, g, stride), p);
                    };
                  }});
  }
  cs.push_back({"bilinear_up", [](Rng& rng, std::vector<Tensor>& params) {
                  Tensor x = random_tensor(rng, {2, 3, 4}).set_requires_grad(true);
                  params = {x};
                  Tensor p = random_tensor(rng, {2, 6, 7});
                  return [x, p] { return project(ops::bilinear_resize(x, 6, 7), p); };
                }});
  cs.push_back({"bilinear_down", [](Rng& rng, std::vector<Tensor>& params) {
                  Tensor x = random_tensor(rng, {2, 8, 6}).set_requires_grad(true);
                  params = {x};
                  Tensor p = random_tensor(rng, {2, 4, 3});
                  return [x, p] { return project(ops::bilinear_resize(x, 4, 3), p); };
                }});
  cs.push_back({"positional_encode", [](Rng& rng, std::vector<Tensor>& params) {
                  Tensor x = random_tensor(rng, {4, 3}).set_requires_grad(true);
                  params = {x};
                  Tensor p = random_tensor(rng, {4, 33});
                  return [x, p] { return project(PositionalEncoder(5, true)(x), p); };
                }});
  cs.push_back({"gru_step", [](Rng& rng, std::vector<Tensor>& params) {
                  ParamRegistry reg;
                  Rng init(rng.uniform_int(0, 1u << 30));
                  auto cell = std::make_shared<GruCell>(reg, "gru", 3, init);
                  Tensor h = random_tensor(rng, {2, 3}).set_requires_grad(true);
                  Tensor x = random_tensor(rng, {2, 3}).set_requires_grad(true);
                  params = reg.trainable();
                  params.push_back(h);
                  params.push_back(x);
                  Tensor p = random_tensor(rng, {2, 3});
                  return [cell, h, x, p] { return project(cell->step(h, x), p); };
                }});
  // Second-order path used by the gradient penalty: the gradient of a
  // conv + leaky-relu + linear critic with respect to its input, squared.
  cs.push_back({"penalty_double_backward", [](Rng& rng, std::vector<Tensor>& params) {
                  Tensor x = random_tensor(rng, {2, 4, 4}).set_requires_grad(true);
                  Tensor w = random_tensor(rng, {3, 2, 3, 3}).set_requires_grad(true);
                  Tensor b = random_tensor(rng, {3}).set_requires_grad(true);
                  Tensor v = random_tensor(rng, {1, 12}).set_requires_grad(true);
                  params = {w, b, v};
                  return [x, w, b, v] {
                    Tensor h = ops::leaky_relu(ops::conv2d(x, w, b, 2), 0.2);
                    Tensor d = ops::sum(ops::linear(ops::reshape(h, {1, 12}), v, Tensor()));
                    Tensor g = grad_with_graph(d, std::span<const Tensor>(&x, 1))[0];
                    return ops::sum(ops::square(g));
                  };
                }});
  cs.push_back({"resize_double_backward", [](Rng& rng, std::vector<Tensor>& params) {
                  Tensor x = random_tensor(rng, {2, 3, 3}).set_requires_grad(true);
                  Tensor w = random_tensor(rng, {2, 2, 5, 5}).set_requires_grad(true);
                  params = {x, w};
                  return [x, w] {
                    Tensor up = ops::bilinear_resize(x, 5, 5);
                    Tensor d = ops::sum(ops::square(ops::reshape(up, {2, 1, 5, 5}) * w));
                    Tensor g = grad_with_graph(d, std::span<const Tensor>(&x, 1))[0];
                    return ops::sum(ops::square(g));
                  };
                }});
  cs.push_back({"compose", [](Rng& rng, std::vector<Tensor>& params) {
                  Tensor sigma = random_tensor(rng, {3, 5}, 0.1, 2.0).set_requires_grad(true);
                  Tensor color = random_tensor(rng, {3, 5, 3}, 0.0, 1.0).set_requires_grad(true);
                  Tensor wd = random_tensor(rng, {5});
                  Tensor wc = random_tensor(rng, {5, 3});
                  params = {sigma, color};
                  return [sigma, color, wd, wc] {
                    const Composite m = compose({color, sigma});
                    return project(m.density, wd) + project(m.color, wc);
                  };
                }});
  cs.push_back({"integrate", [](Rng& rng, std::vector<Tensor>& params) {
                  SampleGrid grid;
                  grid.rays = 2;
                  grid.samples = 4;
                  for (std::size_t i = 0; i < 8; ++i) {
                    grid.depths.push_back(1.0 + 0.5 * static_cast<double>(i % 4));
                    grid.deltas.push_back(rng.uniform(0.2, 0.8));
                  }
                  Tensor sigma = random_tensor(rng, {2, 4}, 0.0, 3.0).set_requires_grad(true);
                  Tensor color = random_tensor(rng, {2, 4, 3}, 0.0, 1.0).set_requires_grad(true);
                  Tensor w = random_tensor(rng, {2, 3});
                  params = {sigma, color};
                  return [sigma, color, grid, w] {
                    return project(integrate(sigma, color, grid).color, w);
                  };
                }});
  return cs;
}

}  // namespace

std::vector<GradCheckResult> run_tensor_gradchecks(std::size_t trials, std::uint64_t seed) {
  PrecisionScope precision(DType::kF64);
  std::vector<GradCheckResult> out;
  const std::vector<Case> cases = tensor_cases();
  for (const Case& c : cases) {
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng(derive_seed(derive_seed(seed, c.name), t));
      std::vector<Tensor> params;
      auto fn = c.make(rng, params);
      GradCheckResult r = check_gradients(c.name, fn, params);
      r.name = c.name + "#" + std::to_string(t);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<GradCheckResult> run_pipeline_gradchecks(std::size_t trials, std::uint64_t seed) {
  PrecisionScope precision(DType::kF64);
  constexpr std::size_t kRes = 4;
  ModelConfig cfg;
  cfg.num_slots = 2;
  cfg.slot_dim = 4;
  cfg.input_resolution = kRes;
  cfg.decoder_width = 8;
  cfg.foreground_layers = 3;
  cfg.background_layers = 2;
  cfg.skip_layer = 2;
  cfg.frequencies = 2;
  cfg.frame = FieldFrame{4.0, 4.5, 4.0};

  std::vector<GradCheckResult> out;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t key = derive_seed(seed, t);
    Rng rng(derive_seed(key, "data"));
    SceneModel model(cfg, derive_seed(key, "model"));
    // Zero-initialized biases put dead ReLU rows exactly on the kink, where
    // central differences see half the slope; check at a generic point.
    for (const NamedParam& e : model.params().entries()) {
      if (!e.name.ends_with(".bias")) continue;
      Buffer& b = Tensor(e.value).mutable_buffer();
      for (std::size_t i = 0; i < b.size(); ++i) b.set(i, b.get(i) + rng.uniform(-0.1, 0.1));
    }
    ParamRegistry aux;
    Rng ext_rng(derive_seed(key, "extractor"));
    FeatureExtractor extractor(aux, "percept", ext_rng, {4, 4});

    auto ring = [](double azimuth) {
      const double e = 30.0 * M_PI / 180.0;
      const Vec3 target{0, 0, 0.3};
      const Vec3 eye = target + Vec3{std::cos(e) * std::cos(azimuth),
                                     std::cos(e) * std::sin(azimuth), std::sin(e)} *
                                    4.5;
      return look_at(eye, target, {0, 0, 1}, static_cast<double>(kRes), kRes, kRes);
    };
    const CameraView input_view = ring(rng.uniform(0.0, 2.0 * M_PI));
    const CameraView target_view = ring(rng.uniform(0.0, 2.0 * M_PI));
    const Tensor image = random_tensor(rng, {3, kRes, kRes}, 0.0, 1.0);
    const Tensor reference = random_tensor(rng, {3, kRes, kRes}, 0.0, 1.0);
    // Odd trials restrict the foreground to a locality box.
    const LocalityBox box =
        t % 2 == 1 ? fit_locality_box(input_view, 2.5, 6.5, 0.9) : LocalityBox{};

    RenderSettings rs;
    rs.samples = 4;
    rs.jitter = true;
    rs.seed = derive_seed(key, "jitter");
    rs.near = 2.0;
    rs.far = 7.0;
    const std::vector<PixelCoord> pixels = full_frame_pixels(kRes, kRes);
    const std::uint64_t slot_seed = derive_seed(key, "slots");

    auto loss_fn = [&]() {
      const SlotAttentionResult inferred = model.infer(image, slot_seed);
      NeuralScene scene(model, inferred.slots, input_view, box);
      const Tensor render = to_image(render_pixels(scene, target_view, pixels, rs), kRes, kRes);
      return recon_loss(render, reference) + perceptual_loss(render, reference, extractor);
    };
    // A smaller step than the per-op checks: with thousands of ReLU inputs
    // per evaluation, h = 1e-5 occasionally straddles a kink.
    GradCheckOptions opts;
    opts.step = 1e-6;
    GradCheckResult r = check_gradients("pipeline", loss_fn, model.params().trainable(), opts);
    r.name = "pipeline#" + std::to_string(t);
    out.push_back(std::move(r));
  }
  return out;
}

bool all_passed(const std::vector<GradCheckResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return !results.empty();
}

}  // namespace orf

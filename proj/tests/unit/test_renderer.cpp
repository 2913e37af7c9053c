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

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "orf/gradcheck_suite.hpp"
#include "orf/image_io.hpp"
#include "orf/ops.hpp"
#include "orf/renderer.hpp"
#include "orf/scenegen.hpp"

using namespace orf;
using namespace orf::testing;

namespace {

RadianceSampleBatch batch(std::initializer_list<double> sigma, std::initializer_list<double> color,
                          std::size_t points) {
  const std::size_t c = sigma.size() / points;
  return {Tensor::from({c, points, 3}, color, DType::kF64),
          Tensor::from({c, points}, sigma, DType::kF64)};
}

SampleGrid uniform_grid(std::size_t rays, std::size_t samples, double length) {
  SampleGrid g;
  g.rays = rays;
  g.samples = samples;
  for (std::size_t r = 0; r < rays; ++r)
    for (std::size_t s = 0; s < samples; ++s) {
      g.depths.push_back(length * (s + 0.5) / samples);
      g.deltas.push_back(length / samples);
    }
  return g;
}

double psnr(const Tensor& a, const Tensor& b) {
  double se = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) se += (a.at(i) - b.at(i)) * (a.at(i) - b.at(i));
  return 10 * std::log10(1.0 / (se / a.numel()));
}

SceneSpec two_object_scene(std::size_t res) {
  SceneSpec s;
  s.objects.push_back({"sphere", {-0.8, 0.3, 0.4}, 0.4, 0, 0});
  s.objects.push_back({"box", {0.7, -0.4, 0.35}, 0.35, 0.5, 1});
  s.background.texture = 1;
  s.background.texture_seed = 99;
  s.cameras = {ring_camera(0.3, res), ring_camera(2.5, res)};
  return s;
}

}  // namespace

TEST_SUITE("renderer") {
  TEST_CASE("ray directions follow the pinhole formula") {
    CameraView one = identity_camera(1, 1, 1);
    one.cx = one.cy = 0.5;
    const std::vector<PixelCoord> c{{0, 0}};
    const RayBatch r = generate_rays(one, c, 1, 2);
    CHECK(r.directions[0] == Vec3{0, 0, -1});

    const CameraView two = identity_camera(1, 2, 2);
    const std::vector<PixelCoord> corner{{0, 0}, {1, 1}};
    const RayBatch rc = generate_rays(two, corner, 1, 2);
    const double n = std::sqrt(0.25 + 0.25 + 1.0);
    CHECK(std::abs(rc.directions[0].x - -0.5 / n) < 1e-15);
    CHECK(std::abs(rc.directions[0].y - 0.5 / n) < 1e-15);
    CHECK(std::abs(rc.directions[0].z - -1.0 / n) < 1e-15);
    CHECK(std::abs(rc.directions[1].x - 0.5 / n) < 1e-15);
    CHECK(std::abs(rc.directions[1].y - -0.5 / n) < 1e-15);
    CHECK(rc.pixel_ids[1] == 3);

    const CameraView cam = ring_camera(1.3, 16);
    const auto all = full_frame_pixels(16, 16);
    const RayBatch rr = generate_rays(cam, all, 1, 12);
    for (const Vec3& d : rr.directions) CHECK(std::abs(d.norm() - 1.0) < 1e-6);
    const std::vector<PixelCoord> bad{{16, 0}};
    CHECK_THROWS_AS(generate_rays(cam, bad, 1, 12), std::out_of_range);
    CHECK_THROWS_AS(generate_rays(cam, all, 2, 2), std::invalid_argument);
  }

  TEST_CASE("stratified sampling") {
    const CameraView cam = identity_camera(4, 2, 2);
    const auto px = full_frame_pixels(2, 2);
    const RayBatch rays = generate_rays(cam, px, 2, 6);
    const SampleGrid one = stratified_sample(rays, {1, false, 0, 0});
    CHECK(one.depths[0] == 4.0);
    CHECK(one.deltas[0] == 2.0);
    const SampleGrid mid = stratified_sample(rays, {8, false, 0, 0});
    for (std::size_t s = 0; s < 8; ++s) CHECK(mid.depths[s] == doctest::Approx(2 + 0.5 * (s + 0.5)));
    CHECK(mid.deltas[7] == doctest::Approx(6 - mid.depths[7]));
    const SampleGrid j1 = stratified_sample(rays, {64, true, 5, 3});
    const SampleGrid j2 = stratified_sample(rays, {64, true, 5, 3});
    const SampleGrid j3 = stratified_sample(rays, {64, true, 5, 4});
    CHECK(j1.depths == j2.depths);
    CHECK(j1.depths != j3.depths);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t s = 0; s < 64; ++s) {
        const double lo = 2 + 4.0 * s / 64, hi = 2 + 4.0 * (s + 1) / 64;
        const double t = j1.depths[r * 64 + s];
        CHECK(t >= lo);
        CHECK(t < hi);
        CHECK(j1.deltas[r * 64 + s] >= 0);
      }
  }

  TEST_CASE("compose: single component recovery") {
    PrecisionScope f64(DType::kF64);
    const Composite c = compose(batch({0, 2, 0}, {.1, .2, .3, .4, .5, .6, .7, .8, .9}, 1));
    CHECK(c.density.at(0) == 2.0);
    CHECK(c.color.at(0) == 0.4);
    CHECK(c.color.at(1) == 0.5);
    CHECK(c.color.at(2) == 0.6);
  }

  TEST_CASE("compose: two equal components average") {
    PrecisionScope f64(DType::kF64);
    const Composite c = compose(batch({1, 1}, {0.2, 0.4, 1.0, 0.6, 0.0, 0.5}, 1));
    CHECK(c.density.at(0) == 1.0);
    CHECK(std::abs(c.color.at(0) - 0.4) < 1e-15);
    CHECK(std::abs(c.color.at(1) - 0.2) < 1e-15);
    CHECK(std::abs(c.color.at(2) - 0.75) < 1e-15);
  }

  TEST_CASE("compose: zero density guard, background only, negative rejected") {
    PrecisionScope f64(DType::kF64);
    RadianceSampleBatch b = batch({0, 0, 0}, {1, 1, 1, 1, 1, 1, 1, 1, 1}, 1);
    b.density.set_requires_grad(true);
    b.color.set_requires_grad(true);
    const Composite c = compose(b);
    CHECK(c.density.at(0) == 0.0);
    for (int i = 0; i < 3; ++i) CHECK(c.color.at(i) == 0.0);
    backward(ops::sum(c.density) + ops::sum(c.color));
    for (std::size_t i = 0; i < 3; ++i) CHECK(b.density.grad().at(i) == 0.0);
    for (std::size_t i = 0; i < 9; ++i) CHECK(b.color.grad().at(i) == 0.0);

    const Composite only = compose(batch({0.7, 3.0}, {.1, .2, .3, .4, .5, .6}, 2));
    CHECK(only.density.at(0) == 0.7);
    CHECK(only.density.at(1) == 3.0);
    CHECK(only.color.at(4) == 0.5);
    CHECK_THROWS_AS(compose(batch({1, -1}, {0, 0, 0, 0, 0, 0}, 1)), std::invalid_argument);
  }

  TEST_CASE("integrate: empty medium") {
    PrecisionScope f64(DType::kF64);
    const SampleGrid g = uniform_grid(1, 16, 1);
    const Integration out =
        integrate(Tensor::zeros({1, 16}), Tensor::full({1, 16, 3}, 0.7), g);
    for (int i = 0; i < 3; ++i) CHECK(out.color.at(i) == 0.0);
    for (double t : out.transmittance) CHECK(t == 1.0);
  }

  TEST_CASE("integrate: constant slab") {
    PrecisionScope f64(DType::kF64);
    const SampleGrid g = uniform_grid(1, 256, 1);
    const Integration out = integrate(Tensor::ones({1, 256}), Tensor::ones({1, 256, 3}), g);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(out.color.at(i) - (1 - std::exp(-1.0))) < 1e-3);
    for (std::size_t s = 1; s < 256; ++s) CHECK(out.transmittance[s] <= out.transmittance[s - 1]);
  }

  TEST_CASE("integrate: two-sample hand computation") {
    PrecisionScope f64(DType::kF64);
    SampleGrid g;
    g.rays = 1;
    g.samples = 2;
    g.depths = {0.25, 0.75};
    g.deltas = {0.5, 0.5};
    const Tensor sigma = Tensor::from({1, 2}, {2, 2});
    const Tensor color = Tensor::from({1, 2, 3}, {0.9, 0.1, 0.3, 0.2, 0.8, 0.5});
    const Integration out = integrate(sigma, color, g);
    const double a = 1 - std::exp(-1.0);
    const double c1[3] = {0.9, 0.1, 0.3}, c2[3] = {0.2, 0.8, 0.5};
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(out.color.at(i) - (a * c1[i] + std::exp(-1.0) * a * c2[i])) < 1e-12);
    CHECK(std::abs(out.weights[1] - std::exp(-1.0) * a) < 1e-15);
  }

  TEST_CASE("integrate output is bounded by the sample colors") {
    PrecisionScope f64(DType::kF64);
    Rng rng(21);
    const SampleGrid g = uniform_grid(8, 32, 3);
    const Tensor sigma = random_tensor(rng, {8, 32}, 0, 5);
    const Tensor color = random_tensor(rng, {8, 32, 3}, 0, 1);
    const Integration out = integrate(sigma, color, g);
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double hi = 0;
        for (std::size_t s = 0; s < 32; ++s) hi = std::max(hi, color.at((r * 32 + s) * 3 + ch));
        CHECK(out.color.at(r * 3 + ch) >= 0);
        CHECK(out.color.at(r * 3 + ch) <= hi + 1e-12);
      }
  }

  TEST_CASE("density maps partition accumulated opacity") {
    Rng rng(22);
    for (int trial = 0; trial < 5; ++trial) {
      SceneGenConfig cfg;
      cfg.resolution = 16;
      const SceneSpec spec = sample_scene(cfg, derive_seed(23, trial));
      const DensityMaps dm =
          render_density_maps(AnalyticScene(spec), spec.cameras[0], {32, true, 1, 0, 1, 12});
      for (std::size_t p = 0; p < 256; ++p) {
        double s = 0;
        for (std::size_t c = 0; c < dm.components; ++c) s += dm.maps[c * 256 + p];
        CHECK(std::abs(s - dm.opacity[p]) < 1e-6);
      }
    }
    SceneModel model(small_model_config(), 24);
    const NeuralScene neural(model, random_slots(rng, 2, 8), ring_camera(0, 8));
    const DensityMaps dm = render_density_maps(neural, ring_camera(1, 8), {16, false, 0, 0, 1, 12});
    for (std::size_t p = 0; p < 64; ++p) {
      double s = 0;
      for (std::size_t c = 0; c < 3; ++c) s += dm.maps[c * 64 + p];
      CHECK(std::abs(s - dm.opacity[p]) < 1e-6);
    }
  }

  TEST_CASE("background-only scene labels every pixel 0") {
    SceneSpec spec;
    spec.cameras = {ring_camera(0.2, 12)};
    const DensityMaps dm = render_density_maps(AnalyticScene(spec), spec.cameras[0], {32});
    for (int l : dm.labels) CHECK(l == 0);
  }

  TEST_CASE("zero decoders render black") {
    SceneModel model(small_model_config(), 25);
    for (const char* p : {"fg", "bg"})
      for (const char* h : {".density.weight", ".density.bias"}) {
        Tensor t = model.params().find(std::string(p) + h).value;
        t.mutable_buffer().fill(0.0);
      }
    Rng rng(26);
    const NeuralScene scene(model, random_slots(rng, 2, 8), ring_camera(0, 8));
    const Tensor img = render_image(scene, ring_camera(0.5, 8), {16});
    for (std::size_t i = 0; i < img.numel(); ++i) CHECK(img.at(i) == 0.0);
  }

  TEST_CASE("patch render equals the full-frame crop") {
    SceneModel model(small_model_config(), 27);
    Rng rng(28);
    const NeuralScene scene(model, random_slots(rng, 2, 8), ring_camera(0, 8));
    const CameraView view = ring_camera(0.8, 12);
    for (bool jitter : {false, true}) {
      RenderSettings rs{24, jitter, 31, 7, 1, 12, 40};
      const Tensor full = render_image(scene, view, rs);
      const auto patch = patch_pixels(5, 3, 4, 4);
      const Tensor colors = render_pixels(scene, view, patch, rs);
      double worst = 0;
      for (std::size_t i = 0; i < patch.size(); ++i)
        for (std::size_t ch = 0; ch < 3; ++ch) {
          const double f = full.at(ch * 144 + patch[i].row * 12 + patch[i].col);
          worst = std::max(worst, std::abs(f - colors.at(i * 3 + ch)));
        }
      if (jitter)
        CHECK(worst <= 1e-6);
      else
        CHECK(worst == 0.0);
    }
  }

  TEST_CASE("analytic fields reproduce the dataset image") {
    SceneGenConfig cfg;
    const SceneSpec spec = two_object_scene(cfg.resolution);
    const SceneRecord rec = render_scene(spec, cfg, "scene");
    const AnalyticScene scene(spec);
    RenderSettings rs = dataset_render_settings(cfg);
    const Tensor again = render_image(scene, spec.cameras[0], rs);
    CHECK(psnr(again, rec.images[0]) >= 40.0);
    // Against a much finer quadrature, not just the same one.
    rs.samples = 1024;
    const Tensor fine = render_image(scene, spec.cameras[0], rs);
    const double p = psnr(again, fine);
    MESSAGE("S=128 vs S=1024 PSNR: " << p);
    CHECK(p >= 40.0);
  }

  TEST_CASE("analytic two-object labels agree with ground-truth masks") {
    SceneGenConfig cfg;
    const SceneSpec spec = two_object_scene(cfg.resolution);
    const SceneRecord rec = render_scene(spec, cfg, "scene");
    const AnalyticScene scene(spec);
    const std::size_t n = cfg.resolution;
    for (std::size_t v = 0; v < spec.cameras.size(); ++v) {
      const DensityMaps dm = render_density_maps(scene, spec.cameras[v], {64, false, 0, 0, 1, 12});
      CHECK(agreement(dm.labels, rec.masks[v]) >= 0.99);
      // Against hard-surface ray casting the soft boundary widens each
      // silhouette by about ln(sigma_max * chord) / k; every disagreement
      // must sit in that band, next to a pixel the ray cast gives the same label.
      const auto geo = geometric_masks(spec, spec.cameras[v]);
      MESSAGE("view " << v << ": ray-cast agreement " << agreement(dm.labels, geo));
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
          const int want = dm.labels[r * n + c];
          if (geo[r * n + c] == want) continue;
          bool near = false;
          for (std::size_t rr = r > 2 ? r - 2 : 0; rr <= std::min(n - 1, r + 2); ++rr)
            for (std::size_t cc = c > 2 ? c - 2 : 0; cc <= std::min(n - 1, c + 2); ++cc)
              near |= geo[rr * n + cc] == want;
          CHECK(near);
        }
    }
  }

  TEST_CASE("to_image layout") {
    const Tensor c = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor img = to_image(c, 1, 2);
    CHECK(img.shape() == Shape{3, 1, 2});
    CHECK(img.at(0) == 1);
    CHECK(img.at(1) == 4);
    CHECK(img.at(2) == 2);
  }

  TEST_CASE("end-to-end pipeline gradients match finite differences") {
    const auto results = run_pipeline_gradchecks(2, 5);
    REQUIRE(results.size() == 2);
    for (const auto& r : results) {
      INFO(r.name << " rel err " << r.relative_error << " over " << r.entries);
      CHECK(r.passed);
    }
  }
}

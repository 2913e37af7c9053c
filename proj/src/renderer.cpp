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

#include "orf/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "orf/ops.hpp"
#include "orf/parallel.hpp"
#include "orf/rng.hpp"

namespace orf {

std::vector<PixelCoord> full_frame_pixels(std::size_t height, std::size_t width) {
  return patch_pixels(0, 0, height, width);
}

std::vector<PixelCoord> patch_pixels(std::size_t row0, std::size_t col0, std::size_t height,
                                     std::size_t width) {
  std::vector<PixelCoord> out;
  out.reserve(height * width);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) out.push_back({row0 + r, col0 + c});
  return out;
}

RayBatch generate_rays(const CameraView& view, std::span<const PixelCoord> pixels, double near,
                       double far) {
  view.validate();
  if (!(near < far)) throw std::invalid_argument("ray bounds must satisfy near < far");
  RayBatch rays;
  rays.near = near;
  rays.far = far;
  rays.origins.assign(pixels.size(), view.position());
  rays.directions.reserve(pixels.size());
  rays.pixel_ids.reserve(pixels.size());
  for (const PixelCoord& px : pixels) {
    if (px.row >= view.height || px.col >= view.width)
      throw std::out_of_range("pixel (" + std::to_string(px.row) + ", " + std::to_string(px.col) +
                              ") lies outside a " + std::to_string(view.height) + "x" +
                              std::to_string(view.width) + " image");
    const Vec3 local{(static_cast<double>(px.col) + 0.5 - view.cx) / view.focal,
                     -(static_cast<double>(px.row) + 0.5 - view.cy) / view.focal, -1.0};
    rays.directions.push_back(view.rotate(local.normalized()));
    rays.pixel_ids.push_back(px.row * view.width + px.col);
  }
  return rays;
}

SampleGrid stratified_sample(const RayBatch& rays, const SamplingOptions& opts) {
  if (opts.samples == 0) throw std::invalid_argument("at least one sample per ray is required");
  const std::size_t r = rays.size(), s = opts.samples;
  SampleGrid g;
  g.rays = r;
  g.samples = s;
  g.depths.resize(r * s);
  g.deltas.resize(r * s);
  const double bin = (rays.far - rays.near) / static_cast<double>(s);
  for (std::size_t i = 0; i < r; ++i) {
    const std::uint64_t ray_key =
        opts.jitter ? derive_seed(derive_seed(opts.seed, rays.pixel_ids[i]), opts.step) : 0;
    double* t = g.depths.data() + i * s;
    for (std::size_t j = 0; j < s; ++j) {
      const double u = opts.jitter ? uniform_from_key(derive_seed(ray_key, j)) : 0.5;
      t[j] = rays.near + (static_cast<double>(j) + u) * bin;
    }
    double* d = g.deltas.data() + i * s;
    for (std::size_t j = 0; j + 1 < s; ++j) d[j] = t[j + 1] - t[j];
    d[s - 1] = rays.far - t[s - 1];
  }
  return g;
}

Tensor SampleGrid::points(const RayBatch& r, DType dt) const {
  Tensor out = Tensor::zeros({rays * samples, 3}, dt);
  Buffer& b = out.mutable_buffer();
  for (std::size_t i = 0; i < rays; ++i) {
    const Vec3& o = r.origins[i];
    const Vec3& d = r.directions[i];
    for (std::size_t j = 0; j < samples; ++j) {
      const double t = depths[i * samples + j];
      const std::size_t k = (i * samples + j) * 3;
      b.set(k, o.x + t * d.x);
      b.set(k + 1, o.y + t * d.y);
      b.set(k + 2, o.z + t * d.z);
    }
  }
  return out;
}

// ----------------------------------------------------------------- compose --

Composite compose(const RadianceSampleBatch& fields) {
  const Tensor& sigma = fields.density;
  const Tensor& color = fields.color;
  if (sigma.rank() != 2 || color.rank() != 3 || color.dim(0) != sigma.dim(0) ||
      color.dim(1) != sigma.dim(1) || color.dim(2) != 3)
    throw ShapeError("compose expects density [C x P] and color [C x P x 3], got " +
                     shape_str(sigma.shape()) + " and " + shape_str(color.shape()));
  if (sigma.dtype() != color.dtype()) throw ShapeError("compose: precision mismatch");
  const std::size_t c = sigma.dim(0), p = sigma.dim(1);
  Composite out;
  out.density = make_result({p}, sigma.dtype());
  out.color = make_result({p, 3}, sigma.dtype());
  dispatch(sigma.dtype(), [&]<typename T>(T) {
    const T* s = sigma.data<T>().data();
    const T* col = color.data<T>().data();
    T* od = out.density.mutable_data<T>().data();
    T* oc = out.color.mutable_data<T>().data();
    for (std::size_t i = 0; i < c * p; ++i)
      if (s[i] < T(0)) throw std::invalid_argument("compose: negative density");
    for (std::size_t q = 0; q < p; ++q) {
      T total = 0;
      for (std::size_t i = 0; i < c; ++i) total += s[i * p + q];
      T d = 0, r = 0, g = 0, b = 0;
      if (total > T(0)) {
        for (std::size_t i = 0; i < c; ++i) {
          const T w = s[i * p + q] / total;
          const T* ci = col + (i * p + q) * 3;
          d += w * s[i * p + q];
          r += w * ci[0];
          g += w * ci[1];
          b += w * ci[2];
        }
      }
      od[q] = d;
      oc[q * 3] = r;
      oc[q * 3 + 1] = g;
      oc[q * 3 + 2] = b;
    }
  });
  const bool rec_sigma = needs_record({&sigma, &color});
  if (rec_sigma) {
    // Both outputs share one backward: gradients are assembled when the
    // color node replays, the density node forwards its seed through it.
    Tensor out_density = out.density;
    Tensor out_color = out.color;
    auto rule = [sigma, color, out_density, out_color, c, p](const Tensor& gd_in,
                                                             const Tensor& gc_in) {
      Tensor gs = make_result({c, p}, sigma.dtype());
      Tensor gcol = make_result({c, p, 3}, sigma.dtype());
      dispatch(sigma.dtype(), [&]<typename T>(T) {
        const T* s = sigma.data<T>().data();
        const T* col = color.data<T>().data();
        const T* md = out_density.data<T>().data();
        const T* mc = out_color.data<T>().data();
        const T* gd = gd_in.defined() ? gd_in.data<T>().data() : nullptr;
        const T* gc = gc_in.defined() ? gc_in.data<T>().data() : nullptr;
        T* os = gs.mutable_data<T>().data();
        T* oc = gcol.mutable_data<T>().data();
        for (std::size_t q = 0; q < p; ++q) {
          T total = 0;
          for (std::size_t i = 0; i < c; ++i) total += s[i * p + q];
          if (!(total > T(0))) {
            for (std::size_t i = 0; i < c; ++i) {
              os[i * p + q] = 0;
              for (int ch = 0; ch < 3; ++ch) oc[(i * p + q) * 3 + ch] = 0;
            }
            continue;
          }
          const T inv = T(1) / total;
          const T g_d = gd ? gd[q] : T(0);
          for (std::size_t i = 0; i < c; ++i) {
            const T si = s[i * p + q];
            // d sigma_bar / d sigma_i = (2 sigma_i - sigma_bar) / S
            // d c_bar / d sigma_i = (c_i - c_bar) / S,  d c_bar / d c_i = sigma_i / S
            T acc = g_d * (T(2) * si - md[q]) * inv;
            for (int ch = 0; ch < 3; ++ch) {
              const T g_c = gc ? gc[q * 3 + ch] : T(0);
              acc += g_c * (col[(i * p + q) * 3 + ch] - mc[q * 3 + ch]) * inv;
              oc[(i * p + q) * 3 + ch] = g_c * si * inv;
            }
            os[i * p + q] = acc;
          }
        }
      });
      return std::vector<Tensor>{gs, gcol};
    };
    // A single node with a stacked output keeps replay order trivial: the
    // density output is a view re-derived from the stacked node.
    Tensor stacked = make_result({p, 4}, sigma.dtype());
    dispatch(sigma.dtype(), [&]<typename T>(T) {
      T* st = stacked.mutable_data<T>().data();
      const T* od = out.density.data<T>().data();
      const T* oc = out.color.data<T>().data();
      for (std::size_t q = 0; q < p; ++q) {
        st[q * 4] = od[q];
        st[q * 4 + 1] = oc[q * 3];
        st[q * 4 + 2] = oc[q * 3 + 1];
        st[q * 4 + 3] = oc[q * 3 + 2];
      }
    });
    record_op("compose", {sigma, color}, stacked, [rule, p](const Tensor& g) {
      Tensor gd = ops::reshape(ops::slice(g, 1, 0, 1), {p});
      Tensor gc = ops::slice(g, 1, 1, 4);
      return rule(gd, gc);
    });
    out.density = ops::reshape(ops::slice(stacked, 1, 0, 1), {p});
    out.color = ops::slice(stacked, 1, 1, 4);
  }
  return out;
}

// --------------------------------------------------------------- integrate --

Integration integrate(const Tensor& density, const Tensor& color, const SampleGrid& grid) {
  const std::size_t r = grid.rays, s = grid.samples;
  if (density.shape() != Shape{r, s} || color.shape() != Shape{r, s, 3})
    throw ShapeError("integrate expects density [R x S] and color [R x S x 3] matching the grid, got " +
                     shape_str(density.shape()) + " and " + shape_str(color.shape()));
  if (density.dtype() != color.dtype()) throw ShapeError("integrate: precision mismatch");
  Integration out;
  out.weights.resize(r * s);
  out.transmittance.resize(r * s);
  out.color = make_result({r, 3}, density.dtype());
  dispatch(density.dtype(), [&]<typename T>(T) {
    const T* sg = density.data<T>().data();
    const T* cl = color.data<T>().data();
    T* oc = out.color.mutable_data<T>().data();
    for (std::size_t i = 0; i < r; ++i) {
      double optical = 0.0;
      double acc[3] = {0, 0, 0};
      for (std::size_t j = 0; j < s; ++j) {
        const std::size_t k = i * s + j;
        const double tau = static_cast<double>(sg[k]) * grid.deltas[k];
        const double trans = std::exp(-optical);
        const double w = trans * -std::expm1(-tau);
        out.transmittance[k] = trans;
        out.weights[k] = w;
        for (int ch = 0; ch < 3; ++ch) acc[ch] += w * static_cast<double>(cl[k * 3 + ch]);
        optical += tau;
      }
      for (int ch = 0; ch < 3; ++ch) oc[i * 3 + ch] = static_cast<T>(acc[ch]);
    }
  });
  if (needs_record({&density, &color})) {
    const std::vector<double> weights = out.weights;
    const std::vector<double> trans = out.transmittance;
    const std::vector<double> deltas = grid.deltas;
    record_op("integrate", {density, color}, out.color,
              [density, color, weights, trans, deltas, r, s](const Tensor& g) {
                Tensor gs = make_result({r, s}, density.dtype());
                Tensor gc = make_result({r, s, 3}, density.dtype());
                dispatch(density.dtype(), [&]<typename T>(T) {
                  const T* sg = density.data<T>().data();
                  const T* cl = color.data<T>().data();
                  const T* go = g.data<T>().data();
                  T* os = gs.mutable_data<T>().data();
                  T* oc = gc.mutable_data<T>().data();
                  for (std::size_t i = 0; i < r; ++i) {
                    const T* gi = go + i * 3;
                    // suffix = sum_{m > j} w_m (g . c_m)
                    double suffix = 0.0;
                    for (std::size_t j = s; j-- > 0;) {
                      const std::size_t k = i * s + j;
                      const double gdotc = static_cast<double>(gi[0]) * cl[k * 3] +
                                           static_cast<double>(gi[1]) * cl[k * 3 + 1] +
                                           static_cast<double>(gi[2]) * cl[k * 3 + 2];
                      const double next_trans =
                          trans[k] * std::exp(-static_cast<double>(sg[k]) * deltas[k]);
                      os[k] = static_cast<T>(deltas[k] * (next_trans * gdotc - suffix));
                      for (int ch = 0; ch < 3; ++ch)
                        oc[k * 3 + ch] = static_cast<T>(weights[k] * static_cast<double>(gi[ch]));
                      suffix += weights[k] * gdotc;
                    }
                  }
                });
                return std::vector<Tensor>{gs, gc};
              });
  }
  return out;
}

// --------------------------------------------------------------- rendering --

namespace {

struct ChunkOutput {
  Tensor color;                // [R x 3]
  std::vector<double> shares;  // [C x R]
  std::vector<double> opacity; // [R]
};

ChunkOutput render_chunk(const RadianceSource& source, const CameraView& view,
                         std::span<const PixelCoord> pixels, const RenderSettings& settings,
                         bool want_shares) {
  const RayBatch rays = generate_rays(view, pixels, settings.near, settings.far);
  const SampleGrid grid = stratified_sample(rays, settings.sampling());
  const std::size_t r = rays.size(), s = grid.samples;
  const RadianceSampleBatch fields = source.query(grid.points(rays, default_dtype()));
  const Composite mixed = compose(fields);
  const Integration integ = integrate(ops::reshape(mixed.density, {r, s}),
                                      ops::reshape(mixed.color, {r, s, 3}), grid);
  ChunkOutput out;
  out.color = integ.color;
  if (want_shares) {
    const std::size_t c = fields.density.dim(0);
    out.shares.assign(c * r, 0.0);
    out.opacity.assign(r, 0.0);
    const Buffer& sig = fields.density.buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < s; ++j) {
        const std::size_t q = i * s + j;
        const double w = integ.weights[q];
        out.opacity[i] += w;
        double total = 0.0;
        for (std::size_t k = 0; k < c; ++k) total += sig.get(k * r * s + q);
        if (!(total > 0.0)) continue;
        for (std::size_t k = 0; k < c; ++k) out.shares[k * r + i] += w * sig.get(k * r * s + q) / total;
      }
  }
  return out;
}

template <typename Fn>
void for_each_chunk(std::size_t n, std::size_t chunk, Fn fn) {
  chunk = std::max<std::size_t>(1, chunk);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  parallel_for(chunks, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) fn(c * chunk, std::min(n, (c + 1) * chunk));
  });
}

}  // namespace

Tensor render_pixels(const RadianceSource& source, const CameraView& view,
                     std::span<const PixelCoord> pixels, const RenderSettings& settings) {
  return render_chunk(source, view, pixels, settings, false).color;
}

Tensor to_image(const Tensor& colors, std::size_t height, std::size_t width) {
  if (colors.shape() != Shape{height * width, 3})
    throw ShapeError("to_image: expected [" + std::to_string(height * width) + "x3], got " +
                     shape_str(colors.shape()));
  return ops::reshape(ops::transpose(colors), {3, height, width});
}

Tensor render_image(const RadianceSource& source, const CameraView& view,
                    const RenderSettings& settings) {
  NoGradGuard no_grad;
  const std::vector<PixelCoord> pixels = full_frame_pixels(view.height, view.width);
  const std::size_t n = pixels.size();
  Tensor colors = Tensor::zeros({n, 3});
  Buffer& out = colors.mutable_buffer();
  for_each_chunk(n, settings.chunk_rays, [&](std::size_t b, std::size_t e) {
    ChunkOutput co = render_chunk(source, view, std::span(pixels).subspan(b, e - b), settings, false);
    for (std::size_t i = 0; i < (e - b) * 3; ++i) out.set(b * 3 + i, co.color.at(i));
  });
  return to_image(colors, view.height, view.width);
}

DensityMaps render_density_maps(const RadianceSource& source, const CameraView& view,
                                const RenderSettings& settings) {
  NoGradGuard no_grad;
  const std::vector<PixelCoord> pixels = full_frame_pixels(view.height, view.width);
  const std::size_t n = pixels.size();
  const std::size_t c = source.components();
  DensityMaps dm;
  dm.height = view.height;
  dm.width = view.width;
  dm.components = c;
  dm.maps.assign(c * n, 0.0);
  dm.opacity.assign(n, 0.0);
  dm.labels.assign(n, 0);
  Tensor colors = Tensor::zeros({n, 3});
  Buffer& out = colors.mutable_buffer();
  for_each_chunk(n, settings.chunk_rays, [&](std::size_t b, std::size_t e) {
    ChunkOutput co = render_chunk(source, view, std::span(pixels).subspan(b, e - b), settings, true);
    const std::size_t m = e - b;
    for (std::size_t i = 0; i < m * 3; ++i) out.set(b * 3 + i, co.color.at(i));
    for (std::size_t i = 0; i < m; ++i) {
      dm.opacity[b + i] = co.opacity[i];
      for (std::size_t k = 0; k < c; ++k) dm.maps[k * n + b + i] = co.shares[k * m + i];
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    for (std::size_t k = 1; k < c; ++k)
      if (dm.maps[k * n + i] > dm.maps[static_cast<std::size_t>(best) * n + i]) best = static_cast<int>(k);
    dm.labels[i] = best;
  }
  dm.image = to_image(colors, view.height, view.width);
  return dm;
}

}  // namespace orf

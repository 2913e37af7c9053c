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

#include <cstdint>
#include <span>
#include <vector>

#include "orf/camera.hpp"
#include "orf/fields.hpp"
#include "orf/tensor.hpp"

namespace orf {

struct PixelCoord {
  std::size_t row = 0, col = 0;
};

std::vector<PixelCoord> full_frame_pixels(std::size_t height, std::size_t width);
std::vector<PixelCoord> patch_pixels(std::size_t row0, std::size_t col0, std::size_t height,
                                     std::size_t width);

struct RayBatch {
  std::vector<Vec3> origins;
  std::vector<Vec3> directions;  // unit length
  double near = 0.0, far = 1.0;
  std::vector<std::size_t> pixel_ids;  // row * width + col

  std::size_t size() const { return origins.size(); }
};

// Rays through pixel centers; throws std::out_of_range for pixels outside
// the image and std::invalid_argument unless near < far.
RayBatch generate_rays(const CameraView& view, std::span<const PixelCoord> pixels, double near,
                       double far);

struct SamplingOptions {
  std::size_t samples = 64;
  bool jitter = false;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

// S equal bins over [near, far] per ray; depth = bin start + u * bin width
// with u = 0.5 unjittered, or a uniform keyed by (seed, pixel id, step,
// sample). delta_i = t_{i+1} - t_i and the last delta is far - t_S.
struct SampleGrid {
  std::size_t rays = 0, samples = 0;
  std::vector<double> depths;  // [R x S]
  std::vector<double> deltas;  // [R x S]

  // World positions o + t d, ray-major: [R*S x 3].
  Tensor points(const RayBatch& rays, DType dt) const;
};

SampleGrid stratified_sample(const RayBatch& rays, const SamplingOptions& opts);

// Density-weighted mixing over components:
//   w_i = sigma_i / sum_j sigma_j, sigma = sum_i w_i sigma_i, c = sum_i w_i c_i,
// with both outputs (and their gradients) zero where every sigma_i is zero.
struct Composite {
  Tensor density;  // [P]
  Tensor color;    // [P x 3]
};

// Throws std::invalid_argument on negative density.
Composite compose(const RadianceSampleBatch& fields);

struct Integration {
  Tensor color;                // [R x 3], differentiable in density and color
  std::vector<double> weights; // [R x S], T_i (1 - exp(-sigma_i delta_i))
  std::vector<double> transmittance;  // [R x S], T_i
};

// C = sum_i T_i (1 - exp(-sigma_i delta_i)) c_i, T_i = exp(-sum_{j<i} sigma_j delta_j).
Integration integrate(const Tensor& density, const Tensor& color, const SampleGrid& grid);

// Anything that answers (color, density) for each scene component at world
// points. Component 0 is the background.
class RadianceSource {
 public:
  virtual ~RadianceSource() = default;
  virtual std::size_t components() const = 0;
  virtual RadianceSampleBatch query(const Tensor& world_points) const = 0;
};

struct RenderSettings {
  std::size_t samples = 64;
  bool jitter = false;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  double near = 1.0, far = 12.0;
  std::size_t chunk_rays = 1024;

  SamplingOptions sampling() const { return {samples, jitter, seed, step}; }
};

// Differentiable colors [R x 3] for the given pixels, in one graph.
Tensor render_pixels(const RadianceSource& source, const CameraView& view,
                     std::span<const PixelCoord> pixels, const RenderSettings& settings);

// Forward-only full-frame render [3 x H x W] at the view's resolution,
// parallel over ray chunks.
Tensor render_image(const RadianceSource& source, const CameraView& view,
                    const RenderSettings& settings);

// Per-component opacity shares d_i = sum_s weight_s * sigma_{i,s} / sum_j sigma_{j,s}
// and their argmax labels (ties to the lowest index, background = 0).
struct DensityMaps {
  std::size_t height = 0, width = 0, components = 0;
  std::vector<double> maps;      // [C x H x W]
  std::vector<double> opacity;   // [H x W], sum_s weight_s
  std::vector<int> labels;       // [H x W]
  Tensor image;                  // [3 x H x W] color from the same pass
};

DensityMaps render_density_maps(const RadianceSource& source, const CameraView& view,
                                const RenderSettings& settings);

// Pixel colors [R x 3] -> channel-major image [3 x H x W].
Tensor to_image(const Tensor& colors, std::size_t height, std::size_t width);

}  // namespace orf

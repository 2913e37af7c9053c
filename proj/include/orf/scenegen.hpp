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

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "orf/camera.hpp"
#include "orf/renderer.hpp"

namespace orf {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SceneGenConfig {
  std::size_t num_scenes = 300;
  std::size_t min_objects = 2;
  std::size_t max_objects = 3;
  std::vector<std::string> shapes{"sphere", "box"};
  double min_size = 0.3;  // sphere radius or box half-extent
  double max_size = 0.5;
  double placement_radius = 1.5;  // object centers within this disc
  double min_gap = 0.1;
  double room_half_extent = 6.0;
  double sigma_max = 30.0;
  double sharpness = 20.0;  // per world unit
  std::size_t textures = 3;
  bool shape_diverse = false;
  std::size_t views = 4;
  std::size_t resolution = 48;
  double camera_radius = 4.5;
  double elevation_deg = 30.0;
  double target_height = 0.3;
  double focal_factor = 1.0;  // focal = factor * resolution
  double near = 1.0;
  double far = 12.0;
  std::size_t render_samples = 128;
};

extern const std::array<const char*, 8> kPaletteNames;
Vec3 palette_color(std::size_t index);

struct SceneObject {
  std::string shape;  // "sphere" | "box"
  Vec3 center;
  double size = 0.4;
  double yaw = 0.0;  // radians about +z, boxes only
  std::size_t color = 0;

  // Radius of the footprint used for the non-overlap rule.
  double footprint_radius() const;
};

struct BackgroundSpec {
  double half_extent = 6.0;
  std::size_t texture = 0;  // 0 checker, 1 stripes, 2 tiles
  std::uint64_t texture_seed = 0;
};

struct SceneSpec {
  std::vector<SceneObject> objects;
  BackgroundSpec background;
  std::vector<CameraView> cameras;
  double near = 1.0, far = 12.0;
  double sigma_max = 30.0, sharpness = 20.0;
};

// Rejection-samples object placements (at most 1000 attempts per object) and
// a camera ring; a pure function of (config, seed).
SceneSpec sample_scene(const SceneGenConfig& cfg, std::uint64_t seed);

// Closed-form scene: component 0 is the room shell (floor and walls), then
// one component per object.
class AnalyticScene : public RadianceSource {
 public:
  explicit AnalyticScene(SceneSpec spec);

  std::size_t components() const override { return spec_.objects.size() + 1; }
  RadianceSampleBatch query(const Tensor& world_points) const override;

  // Scalar evaluation of one component.
  double density(std::size_t component, const Vec3& p) const;
  Vec3 color(std::size_t component, const Vec3& p) const;
  const SceneSpec& spec() const { return spec_; }

 private:
  SceneSpec spec_;
  std::array<Vec3, 2> floor_colors_, wall_colors_;
  double cell_ = 1.0;
};

struct SceneRecord {
  std::string name;
  SceneSpec spec;
  std::vector<Tensor> images;                      // [3 x H x W], byte-quantized
  std::vector<std::vector<std::uint8_t>> masks;    // [H x W] density-argmax labels
  std::vector<CameraView> cameras;
  double near = 1.0, far = 12.0;

  std::size_t height() const { return cameras.at(0).height; }
  std::size_t width() const { return cameras.at(0).width; }
};

// Exact first-surface labels from ray casting against the hard object
// surfaces (the 0.5 sigma_max level sets); independent of the renderer.
std::vector<std::uint8_t> geometric_masks(const SceneSpec& spec, const CameraView& view);

RenderSettings dataset_render_settings(const SceneGenConfig& cfg);

// Renders every camera of the scene and derives instance masks from the
// per-component density maps (object i -> label i, background -> 0).
SceneRecord render_scene(const SceneSpec& spec, const SceneGenConfig& cfg, std::string name);

std::uint64_t scenegen_digest(const SceneGenConfig& cfg, std::uint64_t seed);

// Generates cfg.num_scenes scenes into root (parallel over scenes, each scene
// directory written to a temporary name and renamed).
void generate_dataset(const SceneGenConfig& cfg, std::uint64_t seed,
                      const std::filesystem::path& root);

void write_scene(const SceneRecord& rec, const std::filesystem::path& root);
void write_manifest(const std::filesystem::path& root, std::size_t count, std::size_t resolution,
                    std::size_t views, std::uint64_t digest);

// Validates the layout and every record; throws DatasetError naming the
// scene and file on any violation.
std::vector<SceneRecord> load_dataset(const std::filesystem::path& root);
SceneRecord load_scene(const std::filesystem::path& dir);

}  // namespace orf

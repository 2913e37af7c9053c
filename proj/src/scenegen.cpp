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

#include "orf/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "orf/config.hpp"
#include "orf/image_io.hpp"
#include "orf/parallel.hpp"
#include "orf/rng.hpp"

namespace orf {

namespace fs = std::filesystem;
using nlohmann::json;

const std::array<const char*, 8> kPaletteNames = {"red",  "blue",   "purple", "gray",
                                                  "cyan", "yellow", "green",  "brown"};

Vec3 palette_color(std::size_t index) {
  static const Vec3 colors[8] = {{0.68, 0.14, 0.14}, {0.16, 0.29, 0.78}, {0.51, 0.15, 0.75},
                                 {0.48, 0.48, 0.48}, {0.16, 0.82, 0.82}, {0.94, 0.86, 0.16},
                                 {0.11, 0.61, 0.19}, {0.51, 0.29, 0.10}};
  return colors[index % 8];
}

double SceneObject::footprint_radius() const {
  return shape == "box" ? size * std::numbers::sqrt2 : size;
}

// ------------------------------------------------------------------ sample --

SceneSpec sample_scene(const SceneGenConfig& cfg, std::uint64_t seed) {
  if (cfg.min_objects > cfg.max_objects) throw DatasetError("min_objects exceeds max_objects");
  if (cfg.shapes.empty()) throw DatasetError("no object shapes configured");
  for (const auto& s : cfg.shapes)
    if (s != "sphere" && s != "box") throw DatasetError("unknown shape '" + s + "'");
  if (!(cfg.min_size > 0 && cfg.min_size <= cfg.max_size)) throw DatasetError("invalid size range");
  if (cfg.views == 0 || cfg.resolution == 0) throw DatasetError("views and resolution must be positive");
  Rng rng(derive_seed(seed, "scene"));
  SceneSpec spec;
  spec.near = cfg.near;
  spec.far = cfg.far;
  spec.sigma_max = cfg.sigma_max;
  spec.sharpness = cfg.sharpness;
  const std::size_t n = rng.uniform_int(cfg.min_objects, cfg.max_objects);
  constexpr int kMaxAttempts = 1000;
  for (std::size_t i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      SceneObject o;
      o.shape = cfg.shapes[rng.uniform_int(0, cfg.shapes.size() - 1)];
      o.size = rng.uniform(cfg.min_size, cfg.max_size);
      const double r = cfg.placement_radius * std::sqrt(rng.uniform());
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      o.center = {r * std::cos(a), r * std::sin(a), o.size};
      o.yaw = o.shape == "box" ? rng.uniform(0.0, std::numbers::pi / 2.0) : 0.0;
      o.color = rng.uniform_int(0, 7);
      const double fr = o.footprint_radius();
      if (std::abs(o.center.x) + fr >= cfg.room_half_extent ||
          std::abs(o.center.y) + fr >= cfg.room_half_extent)
        continue;
      bool clear = true;
      for (const SceneObject& other : spec.objects) {
        const double dx = o.center.x - other.center.x, dy = o.center.y - other.center.y;
        if (std::hypot(dx, dy) < fr + other.footprint_radius() + cfg.min_gap) clear = false;
      }
      if (clear) {
        spec.objects.push_back(o);
        placed = true;
      }
    }
    if (!placed)
      throw DatasetError("could not place object " + std::to_string(i + 1) + " of " +
                         std::to_string(n) + " after 1000 attempts: placement_radius " +
                         std::to_string(cfg.placement_radius) + " is too crowded for sizes up to " +
                         std::to_string(cfg.max_size));
  }
  spec.background.half_extent = cfg.room_half_extent;
  spec.background.texture = cfg.textures > 0 ? rng.uniform_int(0, cfg.textures - 1) : 0;
  spec.background.texture_seed = derive_seed(0x7E47u, spec.background.texture);
  const Vec3 target{0, 0, cfg.target_height};
  const double elev = cfg.elevation_deg * std::numbers::pi / 180.0;
  for (std::size_t v = 0; v < cfg.views; ++v) {
    const double az = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Vec3 eye = target + Vec3{std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az),
                                   std::sin(elev)} *
                                  cfg.camera_radius;
    spec.cameras.push_back(look_at(eye, target, {0, 0, 1},
                                   cfg.focal_factor * static_cast<double>(cfg.resolution),
                                   cfg.resolution, cfg.resolution));
  }
  return spec;
}

// ---------------------------------------------------------------- analytic --

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec3 box_local(const SceneObject& o, const Vec3& p) {
  const Vec3 d = p - o.center;
  const double c = std::cos(o.yaw), s = std::sin(o.yaw);
  return {c * d.x + s * d.y, -s * d.x + c * d.y, d.z};
}

// Signed inside-distance whose zero level set is the object's surface.
double object_level(const SceneObject& o, const Vec3& p) {
  if (o.shape == "sphere") return o.size - (p - o.center).norm();
  const Vec3 q = box_local(o, p);
  return std::min({o.size - std::abs(q.x), o.size - std::abs(q.y), o.size - std::abs(q.z)});
}

// Positive outside the room: below the floor or beyond a wall.
double room_level(double half, const Vec3& p) {
  return std::max({-p.z, std::abs(p.x) - half, std::abs(p.y) - half});
}

Vec3 pastel(Rng& rng) { return {rng.uniform(0.25, 0.9), rng.uniform(0.25, 0.9), rng.uniform(0.25, 0.9)}; }

int parity(double v) { return static_cast<int>(std::floor(v)) & 1; }

}  // namespace

AnalyticScene::AnalyticScene(SceneSpec spec) : spec_(std::move(spec)) {
  Rng rng(spec_.background.texture_seed);
  floor_colors_ = {pastel(rng), pastel(rng)};
  wall_colors_ = {pastel(rng), pastel(rng)};
  cell_ = rng.uniform(0.6, 1.2);
}

double AnalyticScene::density(std::size_t component, const Vec3& p) const {
  if (component == 0)
    return spec_.sigma_max * sigmoid(spec_.sharpness * room_level(spec_.background.half_extent, p));
  return spec_.sigma_max * sigmoid(spec_.sharpness * object_level(spec_.objects[component - 1], p));
}

Vec3 AnalyticScene::color(std::size_t component, const Vec3& p) const {
  if (component > 0) return palette_color(spec_.objects[component - 1].color);
  const double half = spec_.background.half_extent;
  const bool floor = -p.z >= std::max(std::abs(p.x) - half, std::abs(p.y) - half);
  const std::size_t pattern = spec_.background.texture % 3;
  double u, v;
  if (floor) {
    u = p.x / cell_;
    v = p.y / cell_;
  } else {
    u = (std::abs(p.x) - half > std::abs(p.y) - half ? p.y : p.x) / cell_;
    v = p.z / cell_;
  }
  int bit = 0;
  if (pattern == 0) bit = parity(u) ^ parity(v);
  if (pattern == 1) bit = parity(floor ? u + v : v * 2.0);
  if (pattern == 2) bit = parity(u) ^ parity(v * 0.5);
  const auto& pair = floor ? floor_colors_ : wall_colors_;
  return pair[static_cast<std::size_t>(bit)];
}

RadianceSampleBatch AnalyticScene::query(const Tensor& world_points) const {
  const std::size_t p = world_points.dim(0), c = components();
  RadianceSampleBatch out;
  out.density = Tensor::zeros({c, p}, world_points.dtype());
  out.color = Tensor::zeros({c, p, 3}, world_points.dtype());
  Buffer& d = out.density.mutable_buffer();
  Buffer& col = out.color.mutable_buffer();
  const Buffer& pts = world_points.buffer();
  for (std::size_t i = 0; i < p; ++i) {
    const Vec3 x{pts.get(i * 3), pts.get(i * 3 + 1), pts.get(i * 3 + 2)};
    for (std::size_t k = 0; k < c; ++k) {
      d.set(k * p + i, density(k, x));
      const Vec3 rgb = color(k, x);
      col.set((k * p + i) * 3, rgb.x);
      col.set((k * p + i) * 3 + 1, rgb.y);
      col.set((k * p + i) * 3 + 2, rgb.z);
    }
  }
  return out;
}

// ------------------------------------------------------------ ground truth --

namespace {

constexpr double kMiss = std::numeric_limits<double>::infinity();

double hit_sphere(const SceneObject& o, const Vec3& orig, const Vec3& dir) {
  const Vec3 oc = orig - o.center;
  const double b = oc.dot(dir);
  const double c = oc.dot(oc) - o.size * o.size;
  const double disc = b * b - c;
  if (disc < 0) return kMiss;
  const double t = -b - std::sqrt(disc);
  return t > 0 ? t : kMiss;
}

double hit_box(const SceneObject& o, const Vec3& orig, const Vec3& dir) {
  const Vec3 lo = box_local(o, orig);
  const double c = std::cos(o.yaw), s = std::sin(o.yaw);
  const Vec3 ld{c * dir.x + s * dir.y, -s * dir.x + c * dir.y, dir.z};
  double t0 = -kMiss, t1 = kMiss;
  const double po[3] = {lo.x, lo.y, lo.z}, pd[3] = {ld.x, ld.y, ld.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(pd[a]) < 1e-15) {
      if (std::abs(po[a]) > o.size) return kMiss;
      continue;
    }
    double ta = (-o.size - po[a]) / pd[a], tb = (o.size - po[a]) / pd[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t0 <= 0) return kMiss;
  return t0;
}

}  // namespace

std::vector<std::uint8_t> geometric_masks(const SceneSpec& spec, const CameraView& view) {
  const auto pixels = full_frame_pixels(view.height, view.width);
  const RayBatch rays = generate_rays(view, pixels, spec.near, spec.far);
  std::vector<std::uint8_t> labels(pixels.size(), 0);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    double best = kMiss;
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
      const SceneObject& o = spec.objects[k];
      const double t = o.shape == "sphere" ? hit_sphere(o, rays.origins[i], rays.directions[i])
                                           : hit_box(o, rays.origins[i], rays.directions[i]);
      if (t < best && t <= spec.far) {
        best = t;
        labels[i] = static_cast<std::uint8_t>(k + 1);
      }
    }
  }
  return labels;
}

RenderSettings dataset_render_settings(const SceneGenConfig& cfg) {
  RenderSettings rs;
  rs.samples = cfg.render_samples;
  rs.jitter = false;
  rs.near = cfg.near;
  rs.far = cfg.far;
  rs.chunk_rays = 512;
  return rs;
}

SceneRecord render_scene(const SceneSpec& spec, const SceneGenConfig& cfg, std::string name) {
  SceneRecord rec;
  rec.name = std::move(name);
  rec.spec = spec;
  rec.cameras = spec.cameras;
  rec.near = spec.near;
  rec.far = spec.far;
  const AnalyticScene scene(spec);
  const RenderSettings rs = dataset_render_settings(cfg);
  for (const CameraView& cam : spec.cameras) {
    const DensityMaps dm = render_density_maps(scene, cam, rs);
    rec.images.push_back(quantize_image(dm.image));
    rec.masks.emplace_back(dm.labels.begin(), dm.labels.end());
  }
  return rec;
}

// ------------------------------------------------------------------- files --

namespace {

json camera_json(const CameraView& c, double near, double far) {
  return json{{"focal", c.focal},   {"cx", c.cx},     {"cy", c.cy},
              {"width", c.width},   {"height", c.height},
              {"cam_to_world", c.cam_to_world},        {"near", near},
              {"far", far}};
}

json spec_json(const SceneSpec& s) {
  json objs = json::array();
  for (const auto& o : s.objects)
    objs.push_back({{"shape", o.shape},
                    {"center", {o.center.x, o.center.y, o.center.z}},
                    {"size", o.size},
                    {"yaw", o.yaw},
                    {"color", kPaletteNames[o.color % 8]},
                    {"color_index", o.color}});
  return json{{"objects", objs},
              {"background",
               {{"half_extent", s.background.half_extent},
                {"texture", s.background.texture},
                {"texture_seed", s.background.texture_seed}}},
              {"near", s.near},
              {"far", s.far},
              {"sigma_max", s.sigma_max},
              {"sharpness", s.sharpness}};
}

SceneSpec spec_from_json(const json& j) {
  SceneSpec s;
  for (const auto& o : j.at("objects")) {
    SceneObject so;
    so.shape = o.at("shape").get<std::string>();
    const auto c = o.at("center").get<std::vector<double>>();
    so.center = {c.at(0), c.at(1), c.at(2)};
    so.size = o.at("size").get<double>();
    so.yaw = o.at("yaw").get<double>();
    so.color = o.at("color_index").get<std::size_t>();
    s.objects.push_back(so);
  }
  const auto& b = j.at("background");
  s.background.half_extent = b.at("half_extent").get<double>();
  s.background.texture = b.at("texture").get<std::size_t>();
  s.background.texture_seed = b.at("texture_seed").get<std::uint64_t>();
  s.near = j.at("near").get<double>();
  s.far = j.at("far").get<double>();
  s.sigma_max = j.at("sigma_max").get<double>();
  s.sharpness = j.at("sharpness").get<double>();
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DatasetError("cannot write " + path.string());
  f << text;
  if (!f) throw DatasetError("failed writing " + path.string());
}

json read_json(const fs::path& path, const std::string& scene) {
  std::ifstream f(path);
  if (!f) throw DatasetError(scene + ": missing " + path.filename().string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw DatasetError(scene + ": malformed " + path.filename().string() + ": " + e.what());
  }
}

std::string scene_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05zu", index);
  return buf;
}

}  // namespace

void write_scene(const SceneRecord& rec, const fs::path& root) {
  const fs::path final_dir = root / rec.name;
  const fs::path tmp = root / (rec.name + ".tmp");
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  json cams = json::array();
  for (std::size_t v = 0; v < rec.cameras.size(); ++v) {
    write_png_rgb(tmp / ("view_" + std::to_string(v) + ".png"), rec.images[v]);
    write_png_gray(tmp / ("mask_" + std::to_string(v) + ".png"), rec.masks[v], rec.cameras[v].height,
                   rec.cameras[v].width);
    cams.push_back(camera_json(rec.cameras[v], rec.near, rec.far));
  }
  write_text(tmp / "cameras.json", json{{"views", cams}}.dump(2));
  write_text(tmp / "scene.json", spec_json(rec.spec).dump(2));
  fs::remove_all(final_dir);
  fs::rename(tmp, final_dir);
}

void write_manifest(const fs::path& root, std::size_t count, std::size_t resolution,
                    std::size_t views, std::uint64_t digest) {
  write_text(root / "manifest.json", json{{"count", count},
                                          {"resolution", resolution},
                                          {"views", views},
                                          {"generator_digest", digest}}
                                         .dump(2));
}

std::uint64_t scenegen_digest(const SceneGenConfig& cfg, std::uint64_t seed) {
  return derive_seed(fnv1a64(canonical_json(cfg)), seed);
}

void generate_dataset(const SceneGenConfig& cfg, std::uint64_t seed, const fs::path& root) {
  fs::create_directories(root);
  parallel_for(cfg.num_scenes, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const SceneSpec spec = sample_scene(cfg, derive_seed(seed, i));
      write_scene(render_scene(spec, cfg, scene_dir_name(i)), root);
    }
  });
  write_manifest(root, cfg.num_scenes, cfg.resolution, cfg.views, scenegen_digest(cfg, seed));
}

SceneRecord load_scene(const fs::path& dir) {
  const std::string name = dir.filename().string();
  if (!fs::is_directory(dir)) throw DatasetError(name + ": scene directory is missing");
  SceneRecord rec;
  rec.name = name;
  const json cams = read_json(dir / "cameras.json", name);
  rec.spec = spec_from_json(read_json(dir / "scene.json", name));
  const auto& views = cams.at("views");
  if (views.empty()) throw DatasetError(name + ": cameras.json lists no views");
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& c = views[v];
    CameraView cam;
    try {
      cam.focal = c.at("focal").get<double>();
      cam.cx = c.at("cx").get<double>();
      cam.cy = c.at("cy").get<double>();
      cam.width = c.at("width").get<std::size_t>();
      cam.height = c.at("height").get<std::size_t>();
      cam.cam_to_world = c.at("cam_to_world").get<std::array<double, 16>>();
      rec.near = c.at("near").get<double>();
      rec.far = c.at("far").get<double>();
    } catch (const json::exception& e) {
      throw DatasetError(name + ": view " + std::to_string(v) + " camera is malformed: " + e.what());
    }
    try {
      cam.validate();
    } catch (const CameraError& e) {
      throw DatasetError(name + ": view " + std::to_string(v) + ": " + e.what());
    }
    const std::string vname = "view_" + std::to_string(v) + ".png";
    const std::string mname = "mask_" + std::to_string(v) + ".png";
    if (!fs::exists(dir / vname)) throw DatasetError(name + ": missing " + vname);
    if (!fs::exists(dir / mname)) throw DatasetError(name + ": missing " + mname);
    Tensor img = read_png_rgb(dir / vname);
    std::size_t mh = 0, mw = 0;
    auto mask = read_png_gray(dir / mname, mh, mw);
    if (img.dim(1) != cam.height || img.dim(2) != cam.width)
      throw DatasetError(name + ": " + vname + " size does not match its camera");
    if (mh != cam.height || mw != cam.width)
      throw DatasetError(name + ": " + mname + " size does not match " + vname);
    for (std::uint8_t l : mask)
      if (l > rec.spec.objects.size())
        throw DatasetError(name + ": " + mname + " has label " + std::to_string(l) +
                           " but the scene has " + std::to_string(rec.spec.objects.size()) +
                           " objects");
    rec.cameras.push_back(cam);
    rec.images.push_back(img);
    rec.masks.push_back(std::move(mask));
  }
  rec.spec.cameras = rec.cameras;
  return rec;
}

std::vector<SceneRecord> load_dataset(const fs::path& root) {
  const json manifest = read_json(root / "manifest.json", root.string());
  const std::size_t count = manifest.at("count").get<std::size_t>();
  const std::size_t views = manifest.at("views").get<std::size_t>();
  const std::size_t res = manifest.at("resolution").get<std::size_t>();
  if (count == 0) throw DatasetError(root.string() + ": dataset is empty");
  std::vector<SceneRecord> out(count);
  parallel_for(count, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      SceneRecord rec = load_scene(root / scene_dir_name(i));
      if (rec.cameras.size() != views)
        throw DatasetError(rec.name + ": expected " + std::to_string(views) + " views, found " +
                           std::to_string(rec.cameras.size()));
      if (rec.height() != res || rec.width() != res)
        throw DatasetError(rec.name + ": resolution differs from the manifest");
      out[i] = std::move(rec);
    }
  });
  return out;
}

}  // namespace orf

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

#include "orf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "orf/rng.hpp"

namespace orf {

using nlohmann::json;

// Field lists shared by serialization and strict parsing. Each visit()
// names every field of one struct; nested structs recurse.
namespace {

template <typename F, typename C>
void visit(F& f, C& c)
  requires std::is_same_v<std::remove_const_t<C>, SceneGenConfig>
{
  f("num_scenes", c.num_scenes);
  f("min_objects", c.min_objects);
  f("max_objects", c.max_objects);
  f("shapes", c.shapes);
  f("min_size", c.min_size);
  f("max_size", c.max_size);
  f("placement_radius", c.placement_radius);
  f("min_gap", c.min_gap);
  f("room_half_extent", c.room_half_extent);
  f("sigma_max", c.sigma_max);
  f("sharpness", c.sharpness);
  f("textures", c.textures);
  f("shape_diverse", c.shape_diverse);
  f("views", c.views);
  f("resolution", c.resolution);
  f("camera_radius", c.camera_radius);
  f("elevation_deg", c.elevation_deg);
  f("target_height", c.target_height);
  f("focal_factor", c.focal_factor);
  f("near", c.near);
  f("far", c.far);
  f("render_samples", c.render_samples);
}

template <typename F, typename C>
void visit(F& f, C& c)
  requires std::is_same_v<std::remove_const_t<C>, FieldFrame>
{
  f("world_scale", c.world_scale);
  f("viewer_center_depth", c.viewer_center_depth);
  f("viewer_scale", c.viewer_scale);
}

template <typename F, typename C>
void visit(F& f, C& c)
  requires std::is_same_v<std::remove_const_t<C>, ModelConfig>
{
  f("num_slots", c.num_slots);
  f("slot_dim", c.slot_dim);
  f("input_resolution", c.input_resolution);
  f("encoder_stem", c.encoder_stem);
  f("attention_iterations", c.attention_iterations);
  f("decoder_width", c.decoder_width);
  f("foreground_layers", c.foreground_layers);
  f("background_layers", c.background_layers);
  f("skip_layer", c.skip_layer);
  f("frequencies", c.frequencies);
  f("frame", c.frame);
}

template <typename F, typename C>
void visit(F& f, C& c)
  requires std::is_same_v<std::remove_const_t<C>, AdamConfig>
{
  f("beta1", c.beta1);
  f("beta2", c.beta2);
  f("eps", c.eps);
}

template <typename F, typename C>
void visit(F& f, C& c)
  requires std::is_same_v<std::remove_const_t<C>, LossWeights>
{
  f("percept", c.percept);
  f("adv", c.adv);
  f("r1", c.r1);
}

template <typename F, typename C>
void visit(F& f, C& c)
  requires std::is_same_v<std::remove_const_t<C>, TrainConfig>
{
  f("coarse_steps", c.coarse_steps);
  f("fine_steps", c.fine_steps);
  f("coarse_resolution", c.coarse_resolution);
  f("full_resolution", c.full_resolution);
  f("patch_size", c.patch_size);
  f("samples_coarse", c.samples_coarse);
  f("samples_fine", c.samples_fine);
  f("jitter", c.jitter);
  f("chunk_rays", c.chunk_rays);
  f("lr", c.lr);
  f("disc_lr", c.disc_lr);
  f("model_adam", c.model_adam);
  f("disc_adam", c.disc_adam);
  f("warmup_steps", c.warmup_steps);
  f("decay_period", c.decay_period);
  f("max_halvings", c.max_halvings);
  f("locality_fraction", c.locality_fraction);
  f("box_depth_near", c.box_depth_near);
  f("box_depth_far", c.box_depth_far);
  f("box_coverage", c.box_coverage);
  f("percept_onset", c.percept_onset);
  f("adversarial", c.adversarial);
  f("adversarial_onset", c.adversarial_onset);
  f("weights", c.weights);
}

template <typename F, typename C>
void visit(F& f, C& c)
  requires std::is_same_v<std::remove_const_t<C>, EvalConfig>
{
  f("samples", c.samples);
  f("seeds", c.seeds);
  f("max_scenes", c.max_scenes);
  f("input_view", c.input_view);
}

template <typename F, typename C>
void visit(F& f, C& c)
  requires std::is_same_v<std::remove_const_t<C>, Config>
{
  f("seed", c.seed);
  f("threads", c.threads);
  f("scenegen", c.scenegen);
  f("model", c.model);
  f("train", c.train);
  f("eval", c.eval);
}

struct Writer {
  json& out;
  template <typename T>
  void operator()(const char* key, const T& v) {
    if constexpr (requires { visit(std::declval<Writer&>(), v); }) {
      json sub = json::object();
      Writer w{sub};
      visit(w, v);
      out[key] = std::move(sub);
    } else {
      out[key] = v;
    }
  }
};

struct Reader {
  const json& in;
  std::string path;
  std::set<std::string> seen{};

  template <typename T>
  void operator()(const char* key, T& v) {
    seen.insert(key);
    if (!in.contains(key)) return;
    const std::string sub_path = path.empty() ? key : path + "." + key;
    if constexpr (requires { visit(std::declval<Reader&>(), v); }) {
      read_struct(in.at(key), v, sub_path);
    } else {
      const json& x = in.at(key);
      // nlohmann converts -1 to a huge unsigned and 1.5 to 1 without complaint.
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!x.is_number_integer() || (std::is_unsigned_v<T> && !x.is_number_unsigned()))
          throw ConfigError("config key '" + sub_path + "' must be a " +
                            (std::is_unsigned_v<T> ? "non-negative " : "") + "integer");
      }
      try {
        v = x.get<T>();
      } catch (const json::exception&) {
        throw ConfigError("config key '" + sub_path + "' has the wrong type");
      }
    }
  }

  template <typename T>
  static void read_struct(const json& j, T& v, const std::string& p) {
    if (!j.is_object())
      throw ConfigError("config key '" + (p.empty() ? std::string("<root>") : p) + "' must be an object");
    Reader r{j, p};
    visit(r, v);
    for (const auto& [k, _] : j.items())
      if (!r.seen.count(k)) throw ConfigError("unknown config key '" + (p.empty() ? k : p + "." + k) + "'");
  }
};

template <typename T>
json dump_struct(const T& v) {
  json j = json::object();
  Writer w{j};
  visit(w, v);
  return j;
}

}  // namespace

json to_json(const SceneGenConfig& c) { return dump_struct(c); }
json to_json(const ModelConfig& c) { return dump_struct(c); }
json to_json(const TrainConfig& c) { return dump_struct(c); }
json to_json(const EvalConfig& c) { return dump_struct(c); }
json to_json(const Config& c) { return dump_struct(c); }

void from_json(const json& j, SceneGenConfig& c, const std::string& path) { Reader::read_struct(j, c, path); }
void from_json(const json& j, ModelConfig& c, const std::string& path) { Reader::read_struct(j, c, path); }
void from_json(const json& j, TrainConfig& c, const std::string& path) { Reader::read_struct(j, c, path); }
void from_json(const json& j, EvalConfig& c, const std::string& path) { Reader::read_struct(j, c, path); }
void from_json(const json& j, Config& c) {
  Reader::read_struct(j, c, "");
  c.train.seed = c.seed;
}

std::string canonical_json(const SceneGenConfig& c) { return to_json(c).dump(); }

std::uint64_t config_digest(const ModelConfig& model, const TrainConfig& train) {
  return fnv1a64(
      json{{"model", to_json(model)}, {"train", to_json(train)}, {"seed", train.seed}}.dump());
}

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Config c;
  from_json(j, c);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const Config& c) { return to_json(c).dump(2); }

}  // namespace orf

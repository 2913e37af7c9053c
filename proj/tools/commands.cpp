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


#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "orf/editor.hpp"
#include "orf/eval.hpp"
#include "orf/gradcheck_suite.hpp"
#include "orf/image_io.hpp"
#include "orf/renderer.hpp"
#include "orf/rng.hpp"
#include "orf/scenegen.hpp"
#include "orf/trainer.hpp"

namespace orf::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

void print(const json& j) { std::cout << j.dump() << std::endl; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ValidationError(what + " '" + p.string() + "' does not exist");
}

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p))
    throw ValidationError("cannot create output directory '" + p.string() + "'");
}

std::unique_ptr<SceneModel> load_model(const fs::path& path) {
  require_exists(path, "checkpoint");
  return model_from_checkpoint(load_checkpoint(path));
}

std::size_t checked_input_view(const Config& cfg, const SceneRecord& scene) {
  if (cfg.eval.input_view >= scene.cameras.size())
    throw ValidationError(scene.name + ": input view " + std::to_string(cfg.eval.input_view) +
                          " out of range");
  return cfg.eval.input_view;
}

// Same slot seed as evaluation, so render, edit and eval agree on a scene.
SlotSet infer_slots(const SceneModel& model, const SceneRecord& scene, std::size_t view,
                    std::uint64_t seed) {
  NoGradGuard no_grad;
  return model.infer(scene.images.at(view), derive_seed(seed, "eval.slots")).slots.detached();
}

RenderSettings view_settings(const Config& cfg, const SceneRecord& scene) {
  RenderSettings rs;
  rs.samples = cfg.eval.samples;
  rs.near = scene.near;
  rs.far = scene.far;
  return rs;
}

json camera_json(const CameraView& c) {
  return {{"focal", c.focal},   {"cx", c.cx},         {"cy", c.cy},
          {"width", c.width},   {"height", c.height}, {"cam_to_world", c.cam_to_world}};
}

// Writes image_NNN.png, label_NNN.png and density/view_NNN_slot_K.png for
// one camera. Slot 0 is the background.
void write_view_outputs(const fs::path& out, std::size_t index, const DensityMaps& dm) {
  char name[64];
  std::snprintf(name, sizeof name, "image_%03zu.png", index);
  write_png_rgb(out / name, dm.image);
  std::vector<std::uint8_t> labels(dm.labels.begin(), dm.labels.end());
  std::snprintf(name, sizeof name, "label_%03zu.png", index);
  write_png_gray(out / name, labels, dm.height, dm.width);
  const std::size_t n = dm.height * dm.width;
  for (std::size_t c = 0; c < dm.components; ++c) {
    std::vector<std::uint8_t> map(n);
    for (std::size_t i = 0; i < n; ++i) map[i] = to_byte(dm.maps[c * n + i]);
    std::snprintf(name, sizeof name, "view_%03zu_slot_%zu.png", index, c);
    write_png_gray(out / "density" / name, map, dm.height, dm.width);
  }
}

// N cameras evenly spaced in azimuth on the circle through the scene's first
// camera, all aimed at the scene target.
std::vector<CameraView> orbit_cameras(const CameraView& first, const Vec3& target, std::size_t n) {
  const Vec3 rel = first.position() - target;
  const double radius = rel.norm();
  const double elevation = std::asin(rel.z / radius);
  const double az0 = std::atan2(rel.y, rel.x);
  std::vector<CameraView> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double az = az0 + 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    const Vec3 eye = target + Vec3{std::cos(elevation) * std::cos(az),
                                   std::cos(elevation) * std::sin(az), std::sin(elevation)} *
                                  radius;
    out.push_back(look_at(eye, target, {0, 0, 1}, first.focal, first.width, first.height));
  }
  return out;
}

}  // namespace

void gen_data(const Config& cfg, const GenDataArgs& args) {
  SceneGenConfig sg = cfg.scenegen;
  if (args.count) sg.num_scenes = *args.count;
  make_dir(args.out);
  const auto t0 = std::chrono::steady_clock::now();
  generate_dataset(sg, cfg.seed, args.out);
  print({{"command", "gen-data"},
         {"out", args.out.string()},
         {"scenes", sg.num_scenes},
         {"digest", hex(scenegen_digest(sg, cfg.seed))},
         {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}});
}

void train(const Config& cfg, const TrainArgs& args) {
  require_exists(args.data, "dataset");
  const std::vector<SceneRecord> data = load_dataset(args.data);
  if (data.front().height() != cfg.train.full_resolution)
    throw ValidationError("dataset resolution " + std::to_string(data.front().height()) +
                          " does not match train.full_resolution " +
                          std::to_string(cfg.train.full_resolution));
  Trainer trainer(cfg.model, cfg.train);
  if (args.resume) {
    require_exists(*args.resume, "checkpoint");
    trainer.restore(load_checkpoint(*args.resume, trainer.digest(), args.force), args.force);
  }
  make_dir(args.out);
  write_text(args.out / "config.json", dump_config(cfg) + "\n");

  RunOptions opts;
  opts.out_dir = args.out;
  opts.checkpoint_every = args.checkpoint_every;
  opts.stop_after = args.stop_after;
  opts.eval_every = args.eval_every;
  opts.on_step = [&](const StepMetrics& m) {
    if (args.progress_every && (m.step + 1) % args.progress_every == 0)
      print({{"step", m.step}, {"stage", stage_name(m.stage)}, {"loss", m.loss}, {"lr", m.lr},
             {"skipped", m.skipped}});
  };
  opts.on_eval = [&](std::uint64_t step, const Trainer& t) {
    EvalConfig ec = cfg.eval;
    ec.seeds = {cfg.seed};
    ec.max_scenes = std::min<std::size_t>(data.size(), 8);
    ParamRegistry reg;
    const FeatureExtractor ext = default_extractor(reg, 0);
    const EvalReport r = eval_run(model_source(t.model()), data, ec, ext);
    char name[64];
    std::snprintf(name, sizeof name, "eval_step_%08llu.json", static_cast<unsigned long long>(step));
    write_text(args.out / name, r.to_json().dump(2) + "\n");
    print({{"eval_step", step}, {"ari", r.metric("ari").mean}, {"fg_ari", r.metric("fg_ari").mean},
           {"psnr", r.metric("psnr").mean}});
  };
  trainer.run(data, opts);
  print({{"command", "train"},
         {"steps", trainer.next_step()},
         {"checksum", hex(trainer.model().params().checksum())},
         {"out", args.out.string()}});
}

void eval(const Config& cfg, const EvalArgs& args) {
  if (args.oracle == args.ckpt.has_value())
    throw ValidationError("eval needs exactly one of --ckpt and --oracle");
  require_exists(args.data, "dataset");
  const std::vector<SceneRecord> data = load_dataset(args.data);
  std::unique_ptr<SceneModel> model;
  SourceFactory source;
  if (args.oracle) {
    source = analytic_source();
  } else {
    model = load_model(*args.ckpt);
    source = model_source(*model);
  }
  EvalConfig ec = cfg.eval;
  if (args.max_scenes) ec.max_scenes = *args.max_scenes;
  if (args.seed_given)
    for (std::size_t i = 0; i < ec.seeds.size(); ++i) ec.seeds[i] = cfg.seed + i;
  ParamRegistry reg;
  const FeatureExtractor ext = default_extractor(reg, 0);
  const EvalReport report = eval_run(source, data, ec, ext);
  if (args.out) {
    make_dir(*args.out);
    write_text(*args.out / "eval_report.json", report.to_json().dump(2) + "\n");
    write_text(*args.out / "eval_report.txt", report.table());
  }
  std::cout << report.table();
}

void render(const Config& cfg, const RenderArgs& args) {
  require_exists(args.scene, "scene");
  const auto model = load_model(args.ckpt);
  const SceneRecord scene = load_scene(args.scene);
  const std::size_t iv = checked_input_view(cfg, scene);
  const NeuralScene source(*model, infer_slots(*model, scene, iv, cfg.seed), scene.cameras[iv]);
  const std::vector<CameraView> cameras =
      args.orbit ? orbit_cameras(scene.cameras[0], {0, 0, cfg.scenegen.target_height}, args.orbit)
                 : scene.cameras;
  make_dir(args.out / "density");
  const RenderSettings rs = view_settings(cfg, scene);
  json cams = json::array();
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    write_view_outputs(args.out, i, render_density_maps(source, cameras[i], rs));
    cams.push_back(camera_json(cameras[i]));
  }
  write_text(args.out / "render.json",
             json{{"scene", scene.name}, {"input_view", iv}, {"cameras", cams}}.dump(2) + "\n");
  print({{"command", "render"}, {"views", cameras.size()}, {"out", args.out.string()}});
}

void edit(const Config& cfg, const EditArgs& args) {
  require_exists(args.scene, "scene");
  require_exists(args.plan, "edit plan");
  const auto model = load_model(args.ckpt);
  const SceneRecord scene = load_scene(args.scene);
  const std::size_t iv = checked_input_view(cfg, scene);
  const SlotSet slots = infer_slots(*model, scene, iv, cfg.seed);
  const RenderSettings rs = view_settings(cfg, scene);

  json plan_j;
  {
    std::ifstream in(args.plan);
    try {
      plan_j = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError("edit plan '" + args.plan.string() + "' is not valid JSON: " + e.what());
    }
  }
  // Edits naming an object label instead of a slot pick the slot whose
  // input-view density map best overlaps that object's mask.
  json selections = json::array();
  if (plan_j.is_object() && plan_j.contains("edits") && plan_j["edits"].is_array()) {
    std::optional<DensityMaps> input_maps;
    for (json& e : plan_j["edits"]) {
      if (!e.is_object() || !e.contains("object") || e.contains("slot")) continue;
      if (!input_maps)
        input_maps = render_density_maps(NeuralScene(*model, slots, scene.cameras[iv]),
                                         scene.cameras[iv], rs);
      const int label = e["object"].get<int>();
      const auto& truth = scene.masks[iv];
      std::unique_ptr<bool[]> mask(new bool[truth.size()]);
      for (std::size_t i = 0; i < truth.size(); ++i) mask[i] = truth[i] == label;
      const SlotSelection sel =
          select_slot_by_mask(*input_maps, std::span<const bool>(mask.get(), truth.size()));
      e.erase("object");
      e["slot"] = sel.slot;
      selections.push_back({{"object", label}, {"slot", sel.slot}, {"iou", sel.iou},
                            {"ious", sel.ious}, {"ambiguous", sel.ambiguous}});
    }
  }
  Tensor background;
  if (plan_needs_background(plan_j)) {
    if (!args.swap_scene) throw ValidationError("the plan swaps the background; pass --swap-scene");
    require_exists(*args.swap_scene, "swap scene");
    const SceneRecord other = load_scene(*args.swap_scene);
    background = infer_slots(*model, other, checked_input_view(cfg, other), cfg.seed).background;
  }
  const EditedScene edited = apply_edits(slots, parse_edit_plan(plan_j, background));
  const NeuralScene source(*model, edited.slots, scene.cameras[iv], {}, edited.edits);
  make_dir(args.out / "density");
  for (std::size_t i = 0; i < scene.cameras.size(); ++i)
    write_view_outputs(args.out, i, render_density_maps(source, scene.cameras[i], rs));
  const json summary{{"scene", scene.name}, {"plan", plan_j}, {"selections", selections}};
  write_text(args.out / "edit.json", summary.dump(2) + "\n");
  bool ambiguous = false;
  for (const auto& s : selections) ambiguous = ambiguous || s["ambiguous"].get<bool>();
  json line{{"command", "edit"}, {"views", scene.cameras.size()}, {"out", args.out.string()}};
  if (ambiguous) line["warning"] = "an object mask overlaps no slot uniquely; the lowest index was used";
  print(line);
}

void gradcheck(const Config& cfg, const GradcheckArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<GradCheckResult> results;
  if (args.module == "all" || args.module == "tensor") results = run_tensor_gradchecks(args.trials, cfg.seed);
  if (args.module == "all" || args.module == "pipeline") {
    const auto p = run_pipeline_gradchecks(args.trials, cfg.seed);
    results.insert(results.end(), p.begin(), p.end());
  }
  // One line per case: worst trial.
  std::vector<std::string> order;
  std::map<std::string, std::pair<double, std::size_t>> worst;
  std::size_t failures = 0;
  for (const auto& r : results) {
    const std::string name = r.name.substr(0, r.name.find('#'));
    if (!worst.count(name)) order.push_back(name);
    auto& w = worst[name];
    w.first = std::max(w.first, std::isfinite(r.relative_error) ? r.relative_error : INFINITY);
    w.second += r.passed ? 0 : 1;
    failures += r.passed ? 0 : 1;
  }
  for (const auto& name : order)
    print({{"case", name},
           {"max_relative_error", worst[name].first},
           {"failed_trials", worst[name].second},
           {"passed", worst[name].second == 0}});
  print({{"command", "gradcheck"},
         {"module", args.module},
         {"checks", results.size()},
         {"failures", failures},
         {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}});
  if (failures) throw CheckFailed(std::to_string(failures) + " gradient checks failed");
}

}  // namespace orf::cli

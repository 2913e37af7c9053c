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


// orf: dataset generation, training, evaluation, rendering, editing and
// gradient checks behind one binary.
//
// Exit codes: 0 ok, 1 usage, 2 validation (bad paths, config, plans,
// checkpoints), 3 runtime (including a failed gradient check). Errors go to
// stderr as one JSON line {"error": kind, "message": text}.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json.hpp"
#include "orf/camera.hpp"
#include "orf/checkpoint.hpp"
#include "orf/editor.hpp"
#include "orf/eval.hpp"
#include "orf/image_io.hpp"
#include "orf/parallel.hpp"
#include "orf/scenegen.hpp"

namespace {

constexpr const char* kConfigEnv = "ORF_CONFIG";

int report(const char* kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace orf;
  CLI::App app{"orf: object radiance fields from single images"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  app.add_option("--config", config_path,
                 std::string("JSON config file (default: $") + kConfigEnv + ", else built-in defaults)");
  app.add_option("--seed", seed, "global seed; overrides the config");
  app.add_option("--threads", threads, "worker thread cap; overrides the config")
      ->check(CLI::PositiveNumber);
  app.fallthrough();

  cli::GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--count", gen.count, "number of scenes (default: scenegen.num_scenes)");

  cli::TrainArgs tr;
  std::optional<std::string> resume;
  auto* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  train_cmd->add_option("--data", tr.data, "dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "run directory")->required();
  train_cmd->add_option("--resume", resume, "checkpoint to continue from");
  train_cmd->add_flag("--force", tr.force, "resume even if the checkpoint's config digest differs");
  train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "steps between checkpoints");
  train_cmd->add_option("--eval-every", tr.eval_every, "steps between evaluations (0: none)");
  train_cmd->add_option("--progress-every", tr.progress_every, "steps between progress lines (0: none)");
  train_cmd->add_option("--stop-after", tr.stop_after, "run at most this many steps");

  cli::EvalArgs ev;
  std::optional<std::string> ev_ckpt, ev_out;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint or the analytic oracle");
  auto* ckpt_opt = eval_cmd->add_option("--ckpt", ev_ckpt, "trained checkpoint");
  auto* oracle_opt = eval_cmd->add_flag("--oracle", ev.oracle, "evaluate the analytic scene fields");
  ckpt_opt->excludes(oracle_opt);
  eval_cmd->add_option("--data", ev.data, "dataset directory")->required();
  eval_cmd->add_option("--out", ev_out, "directory for eval_report.json and eval_report.txt");
  eval_cmd->add_option("--max-scenes", ev.max_scenes, "evaluate at most this many scenes");

  cli::RenderArgs rd;
  auto* render_cmd = app.add_subcommand("render", "render novel views, density maps and labels");
  render_cmd->add_option("--ckpt", rd.ckpt, "trained checkpoint")->required();
  render_cmd->add_option("--scene", rd.scene, "scene directory")->required();
  render_cmd->add_option("--out", rd.out, "output directory")->required();
  auto* orbit_opt = render_cmd->add_option("--orbit", rd.orbit, "N views on a ring around the scene")
                        ->check(CLI::PositiveNumber);
  render_cmd->add_flag("--views", "render the scene's own cameras (the default)")->excludes(orbit_opt);

  cli::EditArgs ed;
  std::optional<std::string> swap_scene;
  auto* edit_cmd = app.add_subcommand("edit", "apply an edit plan and render the edited scene");
  edit_cmd->add_option("--ckpt", ed.ckpt, "trained checkpoint")->required();
  edit_cmd->add_option("--scene", ed.scene, "scene directory")->required();
  edit_cmd->add_option("--plan", ed.plan, "edit plan JSON")->required();
  edit_cmd->add_option("--out", ed.out, "output directory")->required();
  edit_cmd->add_option("--swap-scene", swap_scene, "scene whose background a swap_background edit uses");

  cli::GradcheckArgs gc;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient checks at 64-bit");
  grad_cmd->add_option("--module", gc.module, "all, tensor or pipeline")
      ->check(CLI::IsMember({"all", "tensor", "pipeline"}));
  grad_cmd->add_option("--trials", gc.trials, "random trials per case")->check(CLI::PositiveNumber);

  auto* config_cmd = app.add_subcommand("config", "configuration utilities");
  config_cmd->require_subcommand(1);
  auto* dump_cmd = config_cmd->add_subcommand("dump", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), 1);
  }

  try {
    Config cfg;
    if (config_path.empty())
      if (const char* env = std::getenv(kConfigEnv); env && *env) config_path = env;
    if (!config_path.empty()) {
      if (!std::filesystem::exists(config_path))
        throw cli::ValidationError("config '" + config_path + "' does not exist");
      cfg = load_config(config_path);
    }
    if (seed) {
      cfg.seed = *seed;
      cfg.train.seed = *seed;
    }
    if (threads) cfg.threads = *threads;
    set_thread_count(cfg.threads);

    if (*gen_cmd) {
      cli::gen_data(cfg, gen);
    } else if (*train_cmd) {
      if (resume) tr.resume = *resume;
      cli::train(cfg, tr);
    } else if (*eval_cmd) {
      if (ev_ckpt) ev.ckpt = *ev_ckpt;
      if (ev_out) ev.out = *ev_out;
      ev.seed_given = seed.has_value();
      cli::eval(cfg, ev);
    } else if (*render_cmd) {
      cli::render(cfg, rd);
    } else if (*edit_cmd) {
      if (swap_scene) ed.swap_scene = *swap_scene;
      cli::edit(cfg, ed);
    } else if (*grad_cmd) {
      cli::gradcheck(cfg, gc);
    } else if (*dump_cmd) {
      std::cout << dump_config(cfg) << std::endl;
    }
    return 0;
  } catch (const cli::ValidationError& e) {
    return report("validation", e.what(), 2);
  } catch (const ConfigError& e) {
    return report("config", e.what(), 2);
  } catch (const DatasetError& e) {
    return report("dataset", e.what(), 2);
  } catch (const CheckpointError& e) {
    return report("checkpoint", e.what(), 2);
  } catch (const EditError& e) {
    return report("edit", e.what(), 2);
  } catch (const CameraError& e) {
    return report("camera", e.what(), 2);
  } catch (const ImageIoError& e) {
    return report("image", e.what(), 2);
  } catch (const EvalError& e) {
    return report("eval", e.what(), 2);
  } catch (const std::invalid_argument& e) {
    return report("validation", e.what(), 2);
  } catch (const cli::CheckFailed& e) {
    return report("check_failed", e.what(), 3);
  } catch (const std::exception& e) {
    return report("runtime", e.what(), 3);
  }
}

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

#include "orf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "orf/config.hpp"
#include "orf/ops.hpp"
#include "orf/renderer.hpp"

namespace orf {

using nlohmann::json;

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("train config: " + msg); };
  if (total_steps() == 0) fail("coarse_steps + fine_steps must be positive");
  if (coarse_resolution == 0 || full_resolution == 0 || patch_size == 0)
    fail("resolutions must be positive");
  if (patch_size > full_resolution) fail("patch_size exceeds full_resolution");
  if (full_resolution % coarse_resolution != 0)
    fail("coarse_resolution must divide full_resolution");
  if (samples_coarse == 0 || samples_fine == 0) fail("samples per ray must be positive");
  if (chunk_rays == 0) fail("chunk_rays must be positive");
  if (!(lr >= 0 && disc_lr >= 0)) fail("learning rates must be non-negative");
  if (!(locality_fraction >= 0 && locality_fraction <= 1)) fail("locality_fraction must lie in [0, 1]");
  if (!(box_depth_near > 0 && box_depth_near < box_depth_far)) fail("box depth range is empty");
}

const char* stage_name(Stage s) { return s == Stage::kCoarse ? "coarse" : "fine"; }

double lr_at(std::uint64_t step, double base, const TrainConfig& cfg) {
  if (step < cfg.warmup_steps)
    return base * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  const std::size_t period =
      cfg.decay_period > 0 ? cfg.decay_period : std::max<std::size_t>(1, cfg.total_steps() / 6);
  const std::uint64_t halvings = std::min<std::uint64_t>(step / period, cfg.max_halvings);
  return base * std::ldexp(1.0, -static_cast<int>(halvings));
}

Trainer::Trainer(const ModelConfig& model_cfg, const TrainConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  model_ = std::make_unique<SceneModel>(model_cfg, derive_seed(cfg.seed, "model"));
  Rng ext_rng(derive_seed(cfg.seed, "init.extractor"));
  Rng disc_rng(derive_seed(cfg.seed, "init.discriminator"));
  extractor_ = FeatureExtractor(aux_, "percept", ext_rng);
  const std::size_t before = aux_.entries().size();
  disc_ = Discriminator(aux_, "disc", std::max(cfg.patch_size, std::size_t{16}), disc_rng);
  std::vector<Tensor> disc_params;
  for (std::size_t i = before; i < aux_.entries().size(); ++i) {
    disc_names_.push_back(aux_.entries()[i].name);
    disc_params.push_back(aux_.entries()[i].value);
  }
  model_opt_ = Adam(model_->params().trainable(), cfg.model_adam);
  disc_opt_ = Adam(disc_params, cfg.disc_adam);
  digest_ = config_digest(model_cfg, cfg_);
}

Stage Trainer::stage_at(std::uint64_t step) const {
  return step < cfg_.coarse_steps ? Stage::kCoarse : Stage::kFine;
}

bool Trainer::box_active(std::uint64_t step) const {
  return static_cast<double>(step) <
         cfg_.locality_fraction * static_cast<double>(cfg_.coarse_steps);
}

bool Trainer::percept_active(std::uint64_t step) const {
  return cfg_.weights.percept != 0.0 &&
         static_cast<double>(step) >= cfg_.percept_onset * static_cast<double>(cfg_.total_steps());
}

bool Trainer::adversarial_active(std::uint64_t step) const {
  return cfg_.adversarial && cfg_.weights.adv != 0.0 &&
         static_cast<double>(step) >=
             cfg_.adversarial_onset * static_cast<double>(cfg_.total_steps());
}

LocalityBox Trainer::locality_box(const CameraView& input_view, bool active) const {
  if (!active) return {};
  return fit_locality_box(input_view, cfg_.box_depth_near, cfg_.box_depth_far, cfg_.box_coverage);
}

std::size_t Trainer::scene_index(std::uint64_t step, std::size_t count) const {
  const double u = uniform_from_key(derive_seed(derive_seed(cfg_.seed, "scene"), step));
  return std::min(count - 1, static_cast<std::size_t>(u * static_cast<double>(count)));
}

namespace {

// One supervised view: where to render and what to match.
struct ViewTarget {
  CameraView camera;
  std::vector<PixelCoord> pixels;
  std::size_t height = 0, width = 0;
  Tensor reference;  // [3 x h x w]
  RenderSettings settings;
};

Tensor gather_rows(const Tensor& image, std::span<const PixelCoord> pixels, std::size_t row0,
                   std::size_t col0) {
  const std::size_t h = image.dim(1), w = image.dim(2);
  Tensor out = Tensor::zeros({pixels.size(), 3}, image.dtype());
  for (std::size_t i = 0; i < pixels.size(); ++i)
    for (std::size_t ch = 0; ch < 3; ++ch)
      out.mutable_buffer().set(
          i * 3 + ch, image.at(ch * h * w + (pixels[i].row - row0) * w + (pixels[i].col - col0)));
  return out;
}

bool params_finite(const ParamRegistry& reg) {
  for (const auto& e : reg.entries())
    if (!ops::all_finite(e.value)) return false;
  return true;
}

void check_no_stale_grads(const std::vector<Tensor>& params) {
  for (const Tensor& p : params)
    if (p.has_grad()) throw std::logic_error("gradient leaked across training steps");
}

}  // namespace

StepMetrics Trainer::train_step(const std::vector<SceneRecord>& data) {
  if (data.empty()) throw std::invalid_argument("training needs a non-empty dataset");
  const std::size_t idx = scene_index(next_step_, data.size());
  StepMetrics m = train_step_on(data[idx], next_step_);
  m.scene = idx;
  ++next_step_;
  return m;
}

StepMetrics Trainer::train_step_on(const SceneRecord& scene, std::uint64_t step) {
  const auto t0 = std::chrono::steady_clock::now();
  if (scene.images.empty()) throw std::invalid_argument(scene.name + ": scene has no views");
  if (scene.height() != cfg_.full_resolution || scene.width() != cfg_.full_resolution)
    throw std::invalid_argument(scene.name + ": image resolution " + std::to_string(scene.height()) +
                                " does not match full_resolution " +
                                std::to_string(cfg_.full_resolution));
  const std::vector<Tensor>& params = model_opt_.params();
  check_no_stale_grads(params);

  StepMetrics m;
  m.step = step;
  m.stage = stage_at(step);
  m.box_active = box_active(step);
  m.lr = lr_at(step, cfg_.lr, cfg_);
  const bool use_percept = percept_active(step);
  const bool use_adv = adversarial_active(step);
  const std::uint64_t key = derive_seed(cfg_.seed, step);

  // Slot inference on its own tape; its gradient is applied once at the end.
  Tape enc_tape;
  SlotAttentionResult inferred;
  {
    TapeScope scope(enc_tape);
    inferred = model_->infer(scene.images[0], derive_seed(key, "slots"));
  }
  SlotSet leaves{inferred.slots.background.detach().clone().set_requires_grad(true),
                 inferred.slots.foreground.detach().clone().set_requires_grad(true)};
  const NeuralScene neural(*model_, leaves, scene.cameras[0],
                           locality_box(scene.cameras[0], m.box_active));

  // Targets per view.
  std::vector<ViewTarget> targets;
  for (std::size_t v = 0; v < scene.cameras.size(); ++v) {
    ViewTarget t;
    t.settings.jitter = cfg_.jitter;
    t.settings.seed = derive_seed(cfg_.seed, "jitter");
    t.settings.step = step * scene.cameras.size() + v;
    t.settings.near = scene.near;
    t.settings.far = scene.far;
    t.settings.chunk_rays = cfg_.chunk_rays;
    NoGradGuard no_grad;
    if (m.stage == Stage::kCoarse) {
      const std::size_t c = cfg_.coarse_resolution;
      t.camera = scene.cameras[v].resized(c, c);
      t.pixels = full_frame_pixels(c, c);
      t.height = t.width = c;
      t.reference = c == scene.height() ? scene.images[v] : ops::bilinear_resize(scene.images[v], c, c);
      t.settings.samples = cfg_.samples_coarse;
    } else {
      const std::size_t p = cfg_.patch_size, span = cfg_.full_resolution - p;
      Rng rng(derive_seed(derive_seed(key, "patch"), std::uint64_t{v}));
      const std::size_t r0 = rng.uniform_int(0, span), c0 = rng.uniform_int(0, span);
      t.camera = scene.cameras[v];
      t.pixels = patch_pixels(r0, c0, p, p);
      t.height = t.width = p;
      const Tensor rows = gather_rows(scene.images[v], t.pixels, 0, 0);
      t.reference = to_image(rows, p, p);
      t.settings.samples = cfg_.samples_fine;
    }
    targets.push_back(std::move(t));
  }
  std::size_t total_values = 0;
  for (const auto& t : targets) total_values += t.pixels.size() * 3;

  auto chunks = [&](const ViewTarget& t, auto&& fn) {
    for (std::size_t b = 0; b < t.pixels.size(); b += cfg_.chunk_rays) {
      const std::size_t e = std::min(t.pixels.size(), b + cfg_.chunk_rays);
      fn(b, e);
    }
  };

  std::vector<Tensor> fakes;  // rendered images, for the critic step
  if (!use_percept && !use_adv) {
    // Reconstruction is a per-pixel sum, so each chunk back-propagates on its own.
    double recon = 0.0;
    for (const ViewTarget& t : targets) {
      chunks(t, [&](std::size_t b, std::size_t e) {
        Tape tape;
        TapeScope scope(tape);
        const auto px = std::span(t.pixels).subspan(b, e - b);
        const Tensor colors = render_pixels(neural, t.camera, px, t.settings);
        const Tensor target = gather_rows(t.reference, px, t.pixels[0].row, t.pixels[0].col);
        const Tensor part =
            ops::sum(ops::square(colors - target)) * (1.0 / static_cast<double>(total_values));
        recon += part.item();
        backward(part);
      });
    }
    m.recon = recon;
    m.loss = recon;
  } else {
    // Pass 1: full images without a graph, then the image-level loss on
    // leaf copies to get d loss / d image.
    std::vector<Tensor> leaves_img;
    for (const ViewTarget& t : targets) {
      Tensor colors = Tensor::zeros({t.pixels.size(), 3});
      NoGradGuard no_grad;
      chunks(t, [&](std::size_t b, std::size_t e) {
        const auto px = std::span(t.pixels).subspan(b, e - b);
        const Tensor c = render_pixels(neural, t.camera, px, t.settings);
        for (std::size_t i = 0; i < c.numel(); ++i) colors.mutable_buffer().set(b * 3 + i, c.at(i));
      });
      leaves_img.push_back(to_image(colors, t.height, t.width).clone().set_requires_grad(true));
    }
    fakes = leaves_img;
    Tape loss_tape;
    {
      TapeScope scope(loss_tape);
      std::vector<Tensor> r, rf;
      for (std::size_t v = 0; v < targets.size(); ++v) {
        r.push_back(leaves_img[v]);
        rf.push_back(targets[v].reference);
      }
      LossParts parts;
      parts.recon = recon_loss(ops::concat(r, 0), ops::concat(rf, 0));
      if (use_percept) {
        Tensor p;
        for (std::size_t v = 0; v < r.size(); ++v) {
          const Tensor term = perceptual_loss(r[v], rf[v], extractor_);
          p = p.defined() ? p + term : term;
        }
        parts.percept = p * (1.0 / static_cast<double>(r.size()));
        m.percept = parts.percept.item();
      }
      if (use_adv) {
        parts.adv = generator_adv_term(disc_, r);
        m.adv = parts.adv.item();
      }
      const Tensor total = total_loss(parts, cfg_.weights);
      m.recon = parts.recon.item();
      m.loss = total.item();
      backward(total);
    }
    // Pass 2: re-render with a graph per chunk, seeded by the image gradient.
    for (std::size_t v = 0; v < targets.size(); ++v) {
      const ViewTarget& t = targets[v];
      const Tensor g = leaves_img[v].grad();
      const Tensor g_rows = ops::transpose(ops::reshape(g, {3, t.pixels.size()}));
      chunks(t, [&](std::size_t b, std::size_t e) {
        Tape tape;
        TapeScope scope(tape);
        const auto px = std::span(t.pixels).subspan(b, e - b);
        const Tensor colors = render_pixels(neural, t.camera, px, t.settings);
        const Tensor seed = ops::slice(g_rows, 0, b, e).to(colors.dtype());
        backward(std::span<const Tensor>(&colors, 1), std::span<const Tensor>(&seed, 1));
      });
    }
    for (auto& img : fakes) img = img.detach();
  }

  // Slot gradients through attention and the encoder.
  {
    TapeScope scope(enc_tape);
    std::vector<Tensor> outs, seeds;
    if (leaves.background.has_grad()) {
      outs.push_back(inferred.slots.background);
      seeds.push_back(leaves.background.grad());
    }
    if (leaves.foreground.has_grad()) {
      outs.push_back(inferred.slots.foreground);
      seeds.push_back(leaves.foreground.grad());
    }
    if (!outs.empty()) backward(outs, seeds);
    enc_tape.clear();
  }
  m.grad_norm = grad_norm(params);

  if (!std::isfinite(m.loss) || !std::isfinite(m.grad_norm)) {
    for (Tensor p : params) p.zero_grad();
    m.skipped = true;
  } else {
    const auto saved = model_->params().snapshot();
    const auto saved_m = model_opt_.first_moments(), saved_v = model_opt_.second_moments();
    std::vector<Buffer> mb, vb;
    for (const auto& t : saved_m) mb.push_back(t.buffer());
    for (const auto& t : saved_v) vb.push_back(t.buffer());
    const std::uint64_t saved_t = model_opt_.steps();
    model_opt_.step(m.lr);
    if (!params_finite(model_->params())) {
      model_->params().restore(saved);
      for (std::size_t i = 0; i < mb.size(); ++i) {
        model_opt_.first_moments()[i].mutable_buffer() = mb[i];
        model_opt_.second_moments()[i].mutable_buffer() = vb[i];
      }
      model_opt_.set_steps(saved_t);
      m.skipped = true;
    }
  }

  if (use_adv && !m.skipped) {
    Tape tape;
    TapeScope scope(tape);
    std::vector<Tensor> real;
    for (const auto& t : targets) real.push_back(t.reference);
    const DiscriminatorLoss dl = discriminator_loss(disc_, real, fakes, cfg_.weights.r1);
    m.disc_loss = dl.total.item();
    m.r1 = dl.r1.item();
    backward(dl.total);
    if (std::isfinite(m.disc_loss)) {
      disc_opt_.step(lr_at(step, cfg_.disc_lr, cfg_));
    } else {
      for (Tensor p : disc_opt_.params()) p.zero_grad();
    }
  }
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

namespace {

json metrics_json(const StepMetrics& m) {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return json{{"step", m.step},
              {"stage", stage_name(m.stage)},
              {"scene", m.scene},
              {"loss", m.loss},
              {"recon", m.recon},
              {"percept", m.percept},
              {"adv", m.adv},
              {"disc_loss", m.disc_loss},
              {"r1", m.r1},
              {"lr", m.lr},
              {"grad_norm", m.grad_norm},
              {"box_active", m.box_active},
              {"skipped", m.skipped},
              {"seconds", m.seconds},
              {"unix_ms", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
}

}  // namespace

void Trainer::run(const std::vector<SceneRecord>& data, const RunOptions& opts) {
  if (data.empty()) throw std::invalid_argument("training needs a non-empty dataset");
  std::ofstream log;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    log.open(opts.out_dir / "train_log.jsonl", std::ios::app);
    if (!log) throw std::runtime_error("cannot open " + (opts.out_dir / "train_log.jsonl").string());
  }
  const std::uint64_t total = cfg_.total_steps();
  const std::uint64_t end =
      opts.stop_after ? std::min<std::uint64_t>(total, next_step_ + opts.stop_after) : total;
  while (next_step_ < end) {
    const std::uint64_t step = next_step_;
    if (log && (step == 0 || step == cfg_.coarse_steps))
      log << json{{"event", "stage_begin"}, {"stage", stage_name(stage_at(step))}, {"step", step}}.dump()
          << '\n';
    const StepMetrics m = train_step(data);
    if (log) log << metrics_json(m).dump() << '\n' << std::flush;
    if (opts.on_step) opts.on_step(m);
    if (m.skipped && log)
      log << json{{"event", "non_finite_skip"}, {"step", step}}.dump() << '\n';
    const bool coarse_done = cfg_.fine_steps > 0 && next_step_ == cfg_.coarse_steps;
    if (!opts.out_dir.empty()) {
      if (coarse_done) save_checkpoint(opts.out_dir / "coarse_final.ckpt", checkpoint());
      if (opts.checkpoint_every && next_step_ % opts.checkpoint_every == 0)
        save_checkpoint(opts.out_dir / "latest.ckpt", checkpoint());
    }
    if (opts.on_eval && opts.eval_every && next_step_ % opts.eval_every == 0) opts.on_eval(next_step_, *this);
  }
  if (!opts.out_dir.empty()) {
    save_checkpoint(opts.out_dir / "latest.ckpt", checkpoint());
    if (next_step_ == total) save_checkpoint(opts.out_dir / "final.ckpt", checkpoint());
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config_digest = digest_;
  c.step = next_step_;
  c.meta = json{{"stage", stage_name(stage_at(next_step_))},
                {"seed", cfg_.seed},
                {"model_adam_steps", model_opt_.steps()},
                {"disc_adam_steps", disc_opt_.steps()},
                {"model", to_json(model_->config())}}
               .dump();
  for (const auto& e : model_->params().entries()) c.entries.emplace_back("model." + e.name, e.value);
  for (const auto& e : aux_.entries()) c.entries.emplace_back("aux." + e.name, e.value);
  const auto& trainable = model_opt_.params();
  const auto& reg = model_->params().entries();
  std::size_t k = 0;
  for (const auto& e : reg) {
    if (k < trainable.size() && trainable[k].same_as(e.value)) {
      c.entries.emplace_back("adam.model.m." + e.name, model_opt_.first_moments()[k]);
      c.entries.emplace_back("adam.model.v." + e.name, model_opt_.second_moments()[k]);
      ++k;
    }
  }
  for (std::size_t i = 0; i < disc_names_.size(); ++i) {
    c.entries.emplace_back("adam.disc.m." + disc_names_[i], disc_opt_.first_moments()[i]);
    c.entries.emplace_back("adam.disc.v." + disc_names_[i], disc_opt_.second_moments()[i]);
  }
  return c;
}

void Trainer::restore(const Checkpoint& ckpt, bool force) {
  if (ckpt.config_digest != digest_ && !force)
    throw CheckpointError("checkpoint config digest does not match the current config; pass --force");
  auto copy_into = [&](const std::string& name, Tensor dst) {
    const Tensor& src = ckpt.find(name);
    if (src.shape() != dst.shape())
      throw CheckpointError("checkpoint entry '" + name + "' has shape " + shape_str(src.shape()) +
                            ", expected " + shape_str(dst.shape()));
    dst.mutable_buffer() = src.to(dst.dtype()).buffer();
  };
  for (const auto& e : model_->params().entries()) copy_into("model." + e.name, e.value);
  for (const auto& e : aux_.entries()) copy_into("aux." + e.name, e.value);
  const auto& trainable = model_opt_.params();
  std::size_t k = 0;
  for (const auto& e : model_->params().entries()) {
    if (k < trainable.size() && trainable[k].same_as(e.value)) {
      copy_into("adam.model.m." + e.name, model_opt_.first_moments()[k]);
      copy_into("adam.model.v." + e.name, model_opt_.second_moments()[k]);
      ++k;
    }
  }
  for (std::size_t i = 0; i < disc_names_.size(); ++i) {
    copy_into("adam.disc.m." + disc_names_[i], disc_opt_.first_moments()[i]);
    copy_into("adam.disc.v." + disc_names_[i], disc_opt_.second_moments()[i]);
  }
  const json meta = json::parse(ckpt.meta);
  model_opt_.set_steps(meta.at("model_adam_steps").get<std::uint64_t>());
  disc_opt_.set_steps(meta.at("disc_adam_steps").get<std::uint64_t>());
  next_step_ = ckpt.step;
}

std::unique_ptr<SceneModel> model_from_checkpoint(const Checkpoint& ckpt) {
  json meta;
  try {
    meta = json::parse(ckpt.meta);
  } catch (const json::exception&) {
    throw CheckpointError("checkpoint metadata is not valid JSON");
  }
  if (!meta.contains("model")) throw CheckpointError("checkpoint does not record its model configuration");
  ModelConfig cfg;
  try {
    from_json(meta.at("model"), cfg);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint model configuration: ") + e.what());
  }
  auto model = std::make_unique<SceneModel>(cfg, 0);
  for (const auto& e : model->params().entries()) {
    const std::string name = "model." + e.name;
    if (!ckpt.contains(name)) throw CheckpointError("checkpoint lacks parameter '" + name + "'");
    const Tensor& src = ckpt.find(name);
    if (src.shape() != e.value.shape())
      throw CheckpointError("checkpoint entry '" + name + "' has shape " + shape_str(src.shape()) +
                            ", expected " + shape_str(e.value.shape()));
    Tensor dst = e.value;
    dst.mutable_buffer() = src.to(dst.dtype()).buffer();
  }
  return model;
}

}  // namespace orf

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

#include "orf/eval.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "orf/ops.hpp"
#include "orf/parallel.hpp"
#include "orf/rng.hpp"

namespace orf {

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double ari(std::span<const int> truth, std::span<const int> pred, std::span<const bool> mask) {
  if (truth.size() != pred.size()) throw EvalError("ari: label images differ in size");
  if (!mask.empty() && mask.size() != truth.size()) throw EvalError("ari: mask differs in size");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows, cols;
  double n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    joint[{truth[i], pred[i]}] += 1;
    rows[truth[i]] += 1;
    cols[pred[i]] += 1;
    n += 1;
  }
  if (n == 0) throw EvalError("ari: no pixels selected");
  double index = 0, sum_a = 0, sum_b = 0;
  for (const auto& [_, c] : joint) index += choose2(c);
  for (const auto& [_, c] : rows) sum_a += choose2(c);
  for (const auto& [_, c] : cols) sum_b += choose2(c);
  // Scaled by the pair count so integer counts stay exact (below 2^64 in
  // long double); the worked example then gives -0.5 to the last bit.
  const long double total = choose2(n);
  const long double ab = static_cast<long double>(sum_a) * sum_b;
  const long double num = index * total - ab;
  const long double den = 0.5L * (static_cast<long double>(sum_a) + sum_b) * total - ab;
  if (den == 0) return 1.0;
  return static_cast<double>(num / den);
}

double psnr(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("psnr: image shapes differ");
  double se = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = a.at(i) - b.at(i);
    se += d * d;
  }
  if (se == 0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / (se / static_cast<double>(a.numel())));
}

double ssim(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() || a.rank() != 3) throw ShapeError("ssim: expects equal [C x H x W] images");
  const std::size_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  constexpr std::size_t kWin = 11;
  if (h < kWin || w < kWin) throw ShapeError("ssim: image smaller than the 11x11 window");
  std::vector<double> ga(h * w, 0.0), gb(h * w, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h * w; ++i) {
      ga[i] += a.at(ch * h * w + i) / static_cast<double>(c);
      gb[i] += b.at(ch * h * w + i) / static_cast<double>(c);
    }
  double kernel[kWin], ksum = 0;
  for (std::size_t i = 0; i < kWin; ++i) {
    const double x = static_cast<double>(i) - 5.0;
    kernel[i] = std::exp(-x * x / (2 * 1.5 * 1.5));
    ksum += kernel[i];
  }
  for (double& k : kernel) k /= ksum;
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  std::size_t windows = 0;
  for (std::size_t r = 0; r + kWin <= h; ++r)
    for (std::size_t q = 0; q + kWin <= w; ++q) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t i = 0; i < kWin; ++i)
        for (std::size_t j = 0; j < kWin; ++j) {
          const double k = kernel[i] * kernel[j];
          const double x = ga[(r + i) * w + q + j], y = gb[(r + i) * w + q + j];
          ma += k * x;
          mb += k * y;
          saa += k * x * x;
          sbb += k * y * y;
          sab += k * x * y;
        }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  return total / static_cast<double>(windows);
}

double rfpd(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor) {
  NoGradGuard no_grad;
  return perceptual_loss(a.detach(), b.detach(), extractor).item();
}

const MetricSummary& EvalReport::metric(const std::string& name) const {
  for (const auto& [n, m] : aggregate)
    if (n == name) return m;
  throw EvalError("no metric named '" + name + "'");
}

namespace {

const char* const kMetrics[] = {"ari", "fg_ari", "nv_ari", "nv_fg_ari", "psnr", "ssim", "rfpd", "random_ari"};

double field(const SceneEval& e, const std::string& name) {
  if (name == "ari") return e.ari;
  if (name == "fg_ari") return e.fg_ari;
  if (name == "nv_ari") return e.nv_ari;
  if (name == "nv_fg_ari") return e.nv_fg_ari;
  if (name == "psnr") return e.psnr;
  if (name == "ssim") return e.ssim;
  if (name == "rfpd") return e.rfpd;
  return e.random_ari;
}

// NaN and infinity round-trip through JSON as null.
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const SceneEval& e : rows) {
    nlohmann::json r{{"seed", e.seed}, {"scene", e.scene}};
    for (const char* m : kMetrics) r[m] = num(field(e, m));
    rows_j.push_back(r);
  }
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [n, m] : aggregate) agg[n] = {{"mean", num(m.mean)}, {"std", num(m.std)}};
  return {{"rows", rows_j}, {"aggregate", agg}};
}

std::string EvalReport::table() const {
  std::ostringstream ss;
  ss << std::left << std::setw(12) << "metric" << std::right << std::setw(12) << "mean"
     << std::setw(12) << "std" << '\n';
  for (const auto& [n, m] : aggregate)
    ss << std::left << std::setw(12) << n << std::right << std::fixed << std::setprecision(4)
       << std::setw(12) << m.mean << std::setw(12) << m.std << '\n';
  return ss.str();
}

SceneEval eval_scene(const RadianceSource& source, const SceneRecord& scene, const EvalConfig& cfg,
                     const FeatureExtractor& extractor, std::uint64_t seed) {
  const std::size_t views = scene.cameras.size();
  if (cfg.input_view >= views) throw EvalError(scene.name + ": input view out of range");
  RenderSettings rs;
  rs.samples = cfg.samples;
  rs.near = scene.near;
  rs.far = scene.far;
  SceneEval out;
  out.seed = seed;
  out.scene = scene.name;
  double nv_ari = 0, nv_fg = 0, ps = 0, ss = 0, rf = 0;
  std::size_t nv_fg_count = 0;
  for (std::size_t v = 0; v < views; ++v) {
    const DensityMaps dm = render_density_maps(source, scene.cameras[v], rs);
    const std::vector<int> truth(scene.masks[v].begin(), scene.masks[v].end());
    const std::unique_ptr<bool[]> fg(new bool[truth.size()]);
    bool any_fg = false;
    for (std::size_t i = 0; i < truth.size(); ++i) any_fg |= (fg[i] = truth[i] != 0);
    const std::span<const bool> fg_span(fg.get(), truth.size());
    const double a = ari(truth, dm.labels);
    const double f = any_fg ? ari(truth, dm.labels, fg_span) : std::nan("");
    if (v == cfg.input_view) {
      out.ari = a;
      out.fg_ari = f;
      out.random_ari = random_label_ari(truth, source.components(), derive_seed(seed, scene.name));
      continue;
    }
    nv_ari += a;
    if (any_fg) {
      nv_fg += f;
      ++nv_fg_count;
    }
    ps += psnr(dm.image, scene.images[v]);
    ss += ssim(dm.image, scene.images[v]);
    rf += rfpd(dm.image, scene.images[v], extractor);
  }
  const double novel = static_cast<double>(views - 1);
  out.nv_ari = views > 1 ? nv_ari / novel : std::nan("");
  out.nv_fg_ari = nv_fg_count ? nv_fg / static_cast<double>(nv_fg_count) : std::nan("");
  out.psnr = views > 1 ? ps / novel : std::nan("");
  out.ssim = views > 1 ? ss / novel : std::nan("");
  out.rfpd = views > 1 ? rf / novel : std::nan("");
  return out;
}

EvalReport eval_run(const SourceFactory& make_source, const std::vector<SceneRecord>& data,
                    const EvalConfig& cfg, const FeatureExtractor& extractor) {
  if (data.empty()) throw EvalError("evaluation needs a non-empty dataset");
  if (cfg.seeds.empty()) throw EvalError("evaluation needs at least one seed");
  const std::size_t n = cfg.max_scenes ? std::min(cfg.max_scenes, data.size()) : data.size();
  EvalReport report;
  report.rows.resize(cfg.seeds.size() * n);
  parallel_for(report.rows.size(), [&](std::size_t b, std::size_t e) {
    NoGradGuard no_grad;
    for (std::size_t i = b; i < e; ++i) {
      const std::uint64_t seed = cfg.seeds[i / n];
      const SceneRecord& scene = data[i % n];
      const auto source = make_source(scene, cfg.input_view, seed);
      report.rows[i] = eval_scene(*source, scene, cfg, extractor, seed);
    }
  });
  for (const char* m : kMetrics) {
    std::vector<double> per_seed;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      double sum = 0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = field(report.rows[s * n + i], m);
        if (std::isnan(v)) continue;
        sum += v;
        ++count;
      }
      per_seed.push_back(count ? sum / static_cast<double>(count) : std::nan(""));
    }
    MetricSummary ms;
    for (double v : per_seed) ms.mean += v / static_cast<double>(per_seed.size());
    if (per_seed.size() > 1) {
      double var = 0;
      for (double v : per_seed) var += (v - ms.mean) * (v - ms.mean);
      ms.std = std::sqrt(var / static_cast<double>(per_seed.size() - 1));
    }
    report.aggregate.emplace_back(m, ms);
  }
  return report;
}

SourceFactory model_source(const SceneModel& model) {
  return [&model](const SceneRecord& scene, std::size_t input_view, std::uint64_t seed) {
    NoGradGuard no_grad;
    const SlotAttentionResult r =
        model.infer(scene.images.at(input_view), derive_seed(seed, "eval.slots"));
    return std::make_unique<NeuralScene>(model, r.slots.detached(), scene.cameras.at(input_view));
  };
}

SourceFactory analytic_source() {
  return [](const SceneRecord& scene, std::size_t, std::uint64_t) {
    return std::make_unique<AnalyticScene>(scene.spec);
  };
}

FeatureExtractor default_extractor(ParamRegistry& reg, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "init.extractor"));
  return FeatureExtractor(reg, "percept", rng);
}

double random_label_ari(std::span<const int> truth, std::size_t components, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> pred(truth.size());
  for (int& p : pred) p = static_cast<int>(rng.uniform_int(0, components - 1));
  return ari(truth, pred);
}

}  // namespace orf

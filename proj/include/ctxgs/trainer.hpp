#pragma once

// Rate-driven optimisation of the context nets, Theta and latents z with
// Adam. Anchor attributes are fixed inputs; only the entropy models learn.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ctxgs/codec.hpp"
#include "ctxgs/engine.hpp"
#include "ctxgs/partition.hpp"

namespace ctxgs {

struct TrainConfig {
  double lambda_e = 0.004;
  double lambda_d = 0.0;
  bool per_feature_dim = false;
  std::uint32_t iterations = 30000;
  double lr = 1e-3;
  double latent_lr = 0.0;  // learning rate for z; 0 means lr
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t batch_anchors = 0;  // 0 = full batch
  bool hyperprior = true;
  std::uint32_t h_c = 4;
  std::uint32_t hidden = 128;
  PlanOptions plan;
  /// Return the iterate with the lowest code-mode objective seen (evaluated
  /// once per step) rather than the last one.
  bool keep_best = true;

  void validate() const {
    require(lr > 0 && std::isfinite(lr), ErrorKind::Input, "learning rate must be positive");
    require(latent_lr >= 0 && std::isfinite(latent_lr), ErrorKind::Input, "latent learning rate must be >= 0");
    require(lambda_e >= 0 && lambda_d >= 0, ErrorKind::Input, "loss weights must be non-negative");
    require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && adam_eps > 0, ErrorKind::Input,
            "invalid Adam parameters");
  }

  LossConfig loss() const { return {lambda_e, lambda_d, per_feature_dim}; }
};

struct TrainReport {
  std::vector<double> loss;            // objective per iteration
  std::vector<double> bits_per_anchor;  // train-mode rate per iteration
  std::vector<double> code_bits_per_anchor;  // code-mode rate before each step
  RateBreakdown initial, final;        // code mode
  std::uint32_t best_iteration = 0;    // number of steps applied to the returned model
  double seconds = 0.0;
};

struct TrainResult {
  EntropyModel model;
  TrainReport report;
};

/// Model sized for `scene` and coding plan options.
inline ModelConfig model_config_for(const AnchorScene& scene, const LevelPartition& part, const TrainConfig& cfg) {
  const std::uint32_t levels = cfg.plan.context ? part.levels : 1;
  return ModelConfig::for_scene(scene.config, levels, cfg.h_c, cfg.hyperprior, cfg.hidden);
}

inline double code_objective(const RateBreakdown& rb, std::size_t anchors, const LossConfig& lc,
                             std::uint32_t feature_dim) {
  const double n = anchors ? double(anchors) : 1.0;
  return lc.lambda_e * rb.total() / n / (lc.per_feature_dim ? double(feature_dim) : 1.0) +
         lc.lambda_d * rb.distortion;
}

class Adam {
 public:
  Adam(const TrainConfig& c, std::size_t size, std::size_t latent_begin)
      : c_(c), m_(size, 0.0), v_(size, 0.0), latent_begin_(latent_begin) {}

  void step(EntropyModel& model, EntropyModel& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(c_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(c_.beta2, double(t_));
    std::vector<double*> gp;
    grad.for_each_block([&](double* p, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) gp.push_back(p + i);
    });
    std::size_t k = 0;
    model.for_each_block([&](double* p, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i, ++k) {
        const double g = *gp[k];
        m_[k] = c_.beta1 * m_[k] + (1.0 - c_.beta1) * g;
        v_[k] = c_.beta2 * v_[k] + (1.0 - c_.beta2) * g * g;
        const double lr = k >= latent_begin_ && c_.latent_lr > 0 ? c_.latent_lr : c_.lr;
        p[i] -= lr * (m_[k] / bc1) / (std::sqrt(v_[k] / bc2) + c_.adam_eps);
      }
    });
  }

 private:
  TrainConfig c_;
  std::vector<double> m_, v_;
  std::size_t latent_begin_;
  std::uint64_t t_ = 0;
};

inline std::size_t parameter_count(EntropyModel& m) {
  std::size_t n = 0;
  m.for_each_block([&](double*, Eigen::Index k) { n += std::size_t(k); });
  return n;
}

using TrainCallback = std::function<void(std::uint32_t iteration, double loss, double bits_per_anchor)>;

inline TrainResult train(const AnchorScene& scene, const LevelPartition& part, const TrainConfig& cfg,
                         const TrainCallback& on_iteration = {}) {
  cfg.validate();
  require(part.size() == scene.size(), ErrorKind::Input, "partition does not match the scene");
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);
  const ModelConfig mc = model_config_for(scene, part, cfg);
  TrainResult res{EntropyModel::create(mc, scene.size(), rng), {}};
  EntropyModel& m = res.model;
  const CodingPlan plan = make_plan(part, cfg.plan);
  const CodingScene cs = CodingScene::from(scene);
  const LossConfig lc = cfg.loss();
  const std::size_t n = scene.size();

  const std::size_t total = parameter_count(m);
  Adam adam(cfg, total, total - std::size_t(m.hyper.z.size()));
  DecodedStore store;
  EntropyModel best;
  double best_obj = 0.0;
  std::vector<std::uint8_t> selected;

  for (std::uint32_t it = 0;; ++it) {
    RateBreakdown code;
    try {
      code = quantize_walk(m, plan, cs, store);
    } catch (const Error& e) {
      // Once steps have been taken, symbols leaving the alphabet mean the parameters blew up.
      if (it == 0 || e.kind() != ErrorKind::Overflow) throw;
      fail(ErrorKind::Divergence, "training diverged at iteration " + std::to_string(it) + ": " + e.what());
    }
    const double obj = code_objective(code, n, lc, mc.feature_dim);
    if (it == 0) res.report.initial = code;
    if (it == 0 || obj < best_obj) {
      best_obj = obj;
      res.report.final = code;
      res.report.best_iteration = it;
      if (cfg.keep_best) best = m;
    }
    if (!cfg.keep_best) {
      res.report.final = code;
      res.report.best_iteration = it;
    }
    if (it == cfg.iterations) break;
    res.report.code_bits_per_anchor.push_back(n ? code.total() / double(n) : 0.0);

    const auto noise = NoiseDraws::draw(plan, mc, rng);
    if (cfg.batch_anchors > 0 && cfg.batch_anchors < n) {
      selected.assign(n, 0);
      for (std::size_t k = 0; k < cfg.batch_anchors;) {
        const auto a = rng.below(n);
        if (!selected[a]) {
          selected[a] = 1;
          ++k;
        }
      }
    }
    EntropyModel grad = m.zeros_like();
    const auto lv = train_loss(m, plan, cs, store, noise, lc, &grad, selected);
    bool finite = std::isfinite(lv.loss);
    grad.for_each_block([&](double* p, Eigen::Index k) {
      for (Eigen::Index i = 0; i < k && finite; ++i) finite = std::isfinite(p[i]);
    });
    if (!finite)
      fail(ErrorKind::Divergence, "training diverged at iteration " + std::to_string(it) + " (loss " +
                                      std::to_string(lv.loss) + ", last finite loss " +
                                      (res.report.loss.empty() ? std::string("none")
                                                               : std::to_string(res.report.loss.back())) +
                                      ")");
    res.report.loss.push_back(lv.loss);
    res.report.bits_per_anchor.push_back(lv.bits_per_anchor());
    if (on_iteration) on_iteration(it, lv.loss, lv.bits_per_anchor());
    adam.step(m, grad);
  }
  if (cfg.keep_best) m = std::move(best);
  res.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// Ablations

enum class Variant { Full, NoHyperprior, NoContext, NoAnchorForward, SingleLevel };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoHyperprior: return "no-hyperprior";
    case Variant::NoContext: return "no-context";
    case Variant::NoAnchorForward: return "no-anchor-forward";
    case Variant::SingleLevel: return "single-level";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  for (auto v : {Variant::Full, Variant::NoHyperprior, Variant::NoContext, Variant::NoAnchorForward,
                 Variant::SingleLevel})
    if (s == variant_name(v)) return v;
  fail(ErrorKind::Input, "unknown variant '" + s + "'");
}

struct AblationRow {
  Variant variant = Variant::Full;
  double bits_per_anchor = 0.0;  // coded hyperprior + attribute payload bits / N
  RateBreakdown estimate;        // code-mode model bits
  StorageReport storage;
  double train_seconds = 0.0;
};

/// Trains and encodes one variant. Bits per anchor count the entropy-coded
/// payload sections (hyperprior and attributes).
inline AblationRow ablation_run(const AnchorScene& scene, const PartitionConfig& pcfg, TrainConfig tcfg,
                                Variant v) {
  PartitionConfig pc = pcfg;
  switch (v) {
    case Variant::Full: break;
    case Variant::NoHyperprior: tcfg.hyperprior = false; break;
    case Variant::NoContext: tcfg.plan.context = false; break;
    case Variant::NoAnchorForward: tcfg.plan.anchor_forward = false; break;
    case Variant::SingleLevel: pc.levels = 1; break;
  }
  const auto part = partition(scene, pc);
  auto tr = train(scene, part, tcfg);
  auto enc = encode_scene(scene, part, tr.model, {tcfg.plan, false});
  AblationRow row;
  row.variant = v;
  row.estimate = enc.estimate;
  row.storage = enc.storage;
  std::size_t payload = enc.storage.hyper;
  for (auto g : enc.storage.groups) payload += g;
  row.bits_per_anchor = scene.empty() ? 0.0 : 8.0 * double(payload) / double(scene.size());
  row.train_seconds = tr.report.seconds;
  return row;
}

}  // namespace ctxgs

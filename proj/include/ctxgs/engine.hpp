#pragma once

// Evaluation engine shared by the encoder, decoder, rate estimator and
// trainer. Contexts for one plan level are built as a batch and pushed
// through the level's net in a single pass; the code-mode walk hands every
// (unit, channel) to a callback that returns the symbol, so encoding and
// decoding execute identical arithmetic.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ctxgs/coding_plan.hpp"
#include "ctxgs/entropy_models.hpp"
#include "ctxgs/scene.hpp"

namespace ctxgs {

struct EntropyModel {
  ContextNet net;
  HyperpriorTable hyper;

  const ModelConfig& config() const { return net.config; }

  static EntropyModel create(const ModelConfig& cfg, std::size_t anchors, Rng& rng) {
    return {ContextNet::create(cfg, rng), HyperpriorTable::create(anchors, cfg.hyper_dim)};
  }
  EntropyModel zeros_like() const { return {net.zeros_like(), hyper.zeros_like()}; }

  /// Visits every trainable block in a fixed order: nets, Theta, z.
  template <class F>
  void for_each_block(F&& f) {
    net.for_each_block(f);
    f(hyper.theta.params.data(), Eigen::Index(hyper.theta.params.size()));
    f(hyper.z.data(), hyper.z.size());
  }
};

/// Everything the decoder knows before attribute payloads: positions, bbox
/// and masks. The encoder also fills `attrs` (N x C, float).
struct CodingScene {
  std::uint32_t feature_dim = 0, scaling_dim = 0, offset_count = 0;
  std::vector<Vec3> positions;
  Vec3 bbox_min{}, bbox_max{};
  std::vector<std::uint8_t> masks;  // N x offset_count, empty without masks
  std::vector<float> attrs;

  std::size_t size() const { return positions.size(); }
  std::uint32_t channels() const { return feature_dim + scaling_dim + 3 * offset_count; }

  bool active(std::size_t anchor, std::uint32_t c) const {
    const std::uint32_t off = feature_dim + scaling_dim;
    if (c < off || masks.empty()) return true;
    return masks[anchor * offset_count + (c - off) / 3] != 0;
  }
  float attr(std::size_t anchor, std::uint32_t c) const { return attrs[anchor * channels() + c]; }

  std::size_t active_channels(std::size_t anchor) const {
    std::size_t n = 0;
    for (std::uint32_t c = 0; c < channels(); ++c) n += active(anchor, c);
    return n;
  }

  static CodingScene from(const AnchorScene& s) {
    CodingScene g;
    g.feature_dim = s.config.feature_dim;
    g.scaling_dim = s.config.scaling_dim;
    g.offset_count = s.config.offset_count;
    g.bbox_min = s.bbox_min;
    g.bbox_max = s.bbox_max;
    g.positions.reserve(s.anchors.size());
    g.attrs.reserve(s.anchors.size() * g.channels());
    for (const auto& a : s.anchors) {
      g.positions.push_back(a.position);
      g.attrs.insert(g.attrs.end(), a.feature.begin(), a.feature.end());
      g.attrs.insert(g.attrs.end(), a.scaling.begin(), a.scaling.end());
      g.attrs.insert(g.attrs.end(), a.offsets.begin(), a.offsets.end());
      if (s.config.has_masks) g.masks.insert(g.masks.end(), a.mask.begin(), a.mask.end());
    }
    return g;
  }
};

/// Dequantized attributes per coding unit, filled in coding order.
struct DecodedStore {
  std::uint32_t channels = 0;
  std::vector<float> values;
  std::vector<std::uint8_t> ready;

  DecodedStore() = default;
  DecodedStore(std::size_t units, std::uint32_t channels_)
      : channels(channels_), values(units * channels_, 0.0f), ready(units, 0) {}

  std::span<const float> row(std::size_t unit) const {
    return std::span(values).subspan(unit * channels, channels);
  }
  std::span<float> row(std::size_t unit) { return std::span(values).subspan(unit * channels, channels); }
};

inline void check_compatible(const ModelConfig& cfg, const CodingPlan& plan, const CodingScene& scene) {
  require(cfg.levels == plan.levels, ErrorKind::Input,
          "model has " + std::to_string(cfg.levels) + " levels, coding plan has " + std::to_string(plan.levels));
  require(cfg.feature_dim == scene.feature_dim && cfg.scaling_dim == scene.scaling_dim &&
              cfg.offset_count == scene.offset_count,
          ErrorKind::Input, "model dimensions do not match the scene");
  require(plan.anchor_count == scene.size(), ErrorKind::Input, "coding plan does not match the scene");
}

/// Context rows for the given units of one plan level. `zctx` holds the
/// z segment per anchor (rounded in code mode, noisy in train mode).
inline Mat level_contexts(const ModelConfig& cfg, const PlanLevel& lvl, std::span<const std::uint32_t> rows,
                          const CodingScene& scene, const Mat& zctx, const DecodedStore& store) {
  const std::uint32_t in = cfg.input_dim(lvl.level);
  Mat x(Eigen::Index(rows.size()), in);
  std::vector<double> z(cfg.hyper_dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const CodingUnit& u = lvl.units[rows[r]];
    for (std::uint32_t c = 0; c < cfg.hyper_dim; ++c) z[c] = zctx(Eigen::Index(u.anchor), c);
    std::span<const float> pf, ps;
    if (!cfg.is_top(lvl.level)) {
      if (u.parent < 0 || std::size_t(u.parent) >= store.ready.size() || !store.ready[std::size_t(u.parent)])
        fail(ErrorKind::Sequencing, "context for anchor " + std::to_string(u.anchor) + " at level " +
                                        std::to_string(lvl.level) + " needs a parent that is not decoded yet");
      auto prow = store.row(std::size_t(u.parent));
      pf = prow.subspan(0, cfg.feature_dim);
      ps = prow.subspan(cfg.feature_dim, cfg.scaling_dim);
    }
    const auto pos = normalize_position(scene.positions[u.anchor], scene.bbox_min, scene.bbox_max);
    write_context(cfg, lvl.level, z, pf, ps, pos, std::span<double>(x.row(Eigen::Index(r)).data(), in));
  }
  return x;
}

inline std::vector<std::uint32_t> all_rows(const PlanLevel& lvl) {
  std::vector<std::uint32_t> r(lvl.units.size());
  for (std::uint32_t i = 0; i < r.size(); ++i) r[i] = i;
  return r;
}

/// Rounded latents as doubles, the z segment of every code-mode context.
inline Mat rounded_latents(const HyperpriorTable& h) {
  Mat z(h.z.rows(), h.z.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = math::round_half_away(h.z.data()[i]);
  return z;
}

struct SymbolSite {
  std::uint32_t unit = 0, anchor = 0, channel = 0;
  std::size_t plan_level = 0;  // index into CodingPlan::order
  int group = 0;
  double mu = 0.0, sigma = 0.0, delta = 0.0;
};

/// Code-mode walk over the plan. For each active channel `symbol(site)`
/// returns the integer symbol and the store receives mu + s * delta as a
/// float; masked channels are skipped and read back as 0.
template <class SymbolFn>
void code_walk(const ContextNet& net, const CodingPlan& plan, const CodingScene& scene, const Mat& zhat,
               DecodedStore& store, SymbolFn&& symbol) {
  const ModelConfig& cfg = net.config;
  check_compatible(cfg, plan, scene);
  const std::uint32_t C = cfg.channels();
  if (store.ready.size() != plan.unit_count || store.channels != C) store = DecodedStore(plan.unit_count, C);
  std::fill(store.ready.begin(), store.ready.end(), std::uint8_t(0));
  for (std::size_t li = 0; li < plan.order.size(); ++li) {
    const PlanLevel& lvl = plan.order[li];
    if (lvl.units.empty()) continue;
    const auto rows = all_rows(lvl);
    auto acts = forward(net.nets[lvl.level], level_contexts(cfg, lvl, rows, scene, zhat, store));
    for (std::size_t r = 0; r < lvl.units.size(); ++r) {
      const std::uint32_t unit = lvl.first_unit + std::uint32_t(r);
      const std::uint32_t a = lvl.units[r].anchor;
      auto out = store.row(unit);
      const double* y = acts.y.row(Eigen::Index(r)).data();
      for (std::uint32_t c = 0; c < C; ++c) {
        if (!scene.active(a, c)) {
          out[c] = 0.0f;
          continue;
        }
        const int g = cfg.group_of(c);
        const auto h = head_transform(cfg, g, y[C + c], y[2 * C + c]);
        SymbolSite site{unit, a, c, li, g, y[c], h.sigma, h.delta};
        const std::int32_t s = symbol(site);
        out[c] = static_cast<float>(site.mu + double(s) * site.delta);
      }
      store.ready[unit] = 1;
    }
  }
}

/// Per-component bits; `symbols` counts coded attribute symbols.
struct RateBreakdown {
  double hyper = 0.0;
  std::array<double, kGroups> groups{};
  std::size_t symbols = 0;
  double distortion = 0.0;  // mean squared dequantization error over coded channels

  double attributes() const { return groups[0] + groups[1] + groups[2]; }
  double total() const { return hyper + attributes(); }
};

/// Reconstruction of every anchor (its final unit) as an N x C float table.
inline std::vector<float> final_values(const CodingPlan& plan, const DecodedStore& store) {
  std::vector<float> out;
  out.reserve(plan.anchor_count * store.channels);
  for (std::size_t a = 0; a < plan.anchor_count; ++a) {
    auto r = store.row(plan.final_unit[a]);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

/// Code-mode quantization of every unit: fills `store` with the dequantized
/// values and returns the model's bit estimate, -log2 of the clamped bin masses.
inline RateBreakdown quantize_walk(const EntropyModel& m, const CodingPlan& plan, const CodingScene& scene,
                                   DecodedStore& store) {
  RateBreakdown rb;
  const Mat zhat = rounded_latents(m.hyper);
  code_walk(m.net, plan, scene, zhat, store, [&](const SymbolSite& s) {
    const double v = scene.attr(s.anchor, s.channel);
    const auto q = quantize_attr(v, s.mu, s.delta, Mode::Code);
    rb.groups[s.group] += -std::log2(gaussian_bin_prob(q.surrogate, s.mu, s.sigma, s.delta));
    ++rb.symbols;
    const double err = double(static_cast<float>(q.surrogate)) - v;
    rb.distortion += err * err;
    return *q.symbol;
  });
  if (rb.symbols) rb.distortion /= double(rb.symbols);
  const auto prep = m.hyper.theta.prepare();
  for (Eigen::Index a = 0; a < zhat.rows(); ++a)
    for (std::uint32_t c = 0; c < m.hyper.dim(); ++c)
      rb.hyper += -std::log2(factorized_bin_prob(m.hyper.theta, c, zhat(a, c), &prep));
  return rb;
}

// ---------------------------------------------------------------------------
// Train mode

struct LossConfig {
  double lambda_e = 1.0;
  double lambda_d = 0.0;
  /// Also divide the rate term by D_f.
  bool per_feature_dim = false;
};

/// Uniform noise in [-1/2, 1/2) for z (N x D_z) and every unit channel.
struct NoiseDraws {
  Mat z;
  std::vector<double> attr;  // unit_count x C

  static NoiseDraws zeros(const CodingPlan& plan, const ModelConfig& cfg) {
    return {Mat::Zero(Eigen::Index(plan.anchor_count), cfg.hyper_dim),
            std::vector<double>(plan.unit_count * cfg.channels(), 0.0)};
  }
  static NoiseDraws draw(const CodingPlan& plan, const ModelConfig& cfg, Rng& rng) {
    auto n = zeros(plan, cfg);
    for (Eigen::Index i = 0; i < n.z.size(); ++i) n.z.data()[i] = rng.centered();
    for (double& v : n.attr) v = rng.centered();
    return n;
  }
};

struct LossValue {
  double loss = 0.0;
  double rate_bits = 0.0;   // summed over the selected anchors
  double distortion = 0.0;  // mean squared surrogate error
  std::size_t anchors = 0;  // anchors that contributed
  RateBreakdown bits;

  double bits_per_anchor() const { return anchors ? rate_bits / double(anchors) : 0.0; }
};

/// Train-mode objective and, when `grad` is given, its gradient (accumulated).
/// Parent segments come from `parents` and are treated as constants. A
/// non-empty `selected` (one flag per anchor) restricts the terms to a subset.
inline LossValue train_loss(const EntropyModel& m, const CodingPlan& plan, const CodingScene& scene,
                            const DecodedStore& parents, const NoiseDraws& noise, const LossConfig& lc,
                            EntropyModel* grad = nullptr, std::span<const std::uint8_t> selected = {}) {
  const ModelConfig& cfg = m.config();
  check_compatible(cfg, plan, scene);
  require(selected.empty() || selected.size() == scene.size(), ErrorKind::Input, "selection size mismatch");
  const std::uint32_t C = cfg.channels(), Dz = cfg.hyper_dim;
  auto chosen = [&](std::uint32_t a) { return selected.empty() || selected[a] != 0; };

  LossValue out;
  std::size_t active_total = 0;
  for (std::uint32_t a = 0; a < scene.size(); ++a) out.anchors += chosen(a);
  for (const auto& lvl : plan.order)
    for (const auto& u : lvl.units)
      if (chosen(u.anchor)) active_total += scene.active_channels(u.anchor);
  if (out.anchors == 0) return out;

  const double w = lc.lambda_e / double(out.anchors) / (lc.per_feature_dim ? double(cfg.feature_dim) : 1.0);
  const double wd = active_total ? lc.lambda_d / double(active_total) : 0.0;
  const bool want = grad != nullptr;

  Mat ztilde = m.hyper.z + noise.z;

  for (const auto& lvl : plan.order) {
    std::vector<std::uint32_t> rows;
    for (std::uint32_t r = 0; r < lvl.units.size(); ++r)
      if (chosen(lvl.units[r].anchor)) rows.push_back(r);
    if (rows.empty()) continue;
    auto acts = forward(m.net.nets[lvl.level], level_contexts(cfg, lvl, rows, scene, ztilde, parents));
    Mat dy;
    if (want) dy = Mat::Zero(acts.y.rows(), acts.y.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::uint32_t unit = lvl.first_unit + rows[r];
      const std::uint32_t a = lvl.units[rows[r]].anchor;
      const double* y = acts.y.row(Eigen::Index(r)).data();
      for (std::uint32_t c = 0; c < C; ++c) {
        if (!scene.active(a, c)) continue;
        const int g = cfg.group_of(c);
        const auto h = head_transform(cfg, g, y[C + c], y[2 * C + c]);
        const double n = noise.attr[std::size_t(unit) * C + c];
        const double v = quantize_attr(scene.attr(a, c), y[c], h.delta, Mode::Train, n).surrogate;
        const auto t = gaussian_bin_term(v, y[c], h.sigma, h.delta);
        out.bits.groups[g] += t.bits;
        ++out.bits.symbols;
        const double err = n * h.delta;
        out.distortion += err * err;
        if (want) {
          dy(Eigen::Index(r), c) = w * t.d_mu;
          dy(Eigen::Index(r), C + c) = w * t.d_sigma * h.dsigma_draw;
          const double d_delta = w * (t.d_delta + t.d_v * n) + wd * 2.0 * n * n * h.delta;
          dy(Eigen::Index(r), 2 * C + c) = d_delta * h.ddelta_draw;
        }
      }
    }
    if (want) {
      Mat dx = backward(m.net.nets[lvl.level], acts, dy, grad->net.nets[lvl.level]);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto a = Eigen::Index(lvl.units[rows[r]].anchor);
        for (std::uint32_t c = 0; c < Dz; ++c) grad->hyper.z(a, c) += dx(Eigen::Index(r), c);
      }
    }
  }

  const auto prep = m.hyper.theta.prepare();
  for (std::uint32_t a = 0; a < scene.size(); ++a) {
    if (!chosen(a)) continue;
    for (std::uint32_t c = 0; c < Dz; ++c) {
      const auto t = factorized_bin_term(m.hyper.theta, c, ztilde(a, c), want ? &grad->hyper.theta : nullptr, want, w,
                                         &prep);
      out.bits.hyper += t.bits;
      if (want) grad->hyper.z(a, c) += t.d_x;
    }
  }

  out.rate_bits = out.bits.total();
  if (active_total) out.distortion /= double(active_total);
  out.loss = w * out.rate_bits + lc.lambda_d * out.distortion;
  return out;
}

}  // namespace ctxgs

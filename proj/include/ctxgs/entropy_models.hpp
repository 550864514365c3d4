#pragma once

// Entropy models for anchor attributes.
//
// Each anchor attribute channel is modelled as a Gaussian convolved with a
// uniform of width delta, with (mu, sigma, delta) predicted per channel by a
// per-level MLP from the anchor's context. The per-anchor hyperprior latent
// is modelled by a learned factorized density built from a monotone chain of
// univariate stages (widths 1-3-3-3-1) followed by a logistic squash.
//
// All functions return bits (-log2 probability) together with analytic
// derivatives; the trainer composes them.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctxgs/error.hpp"
#include "ctxgs/math.hpp"
#include "ctxgs/rng.hpp"
#include "ctxgs/scene.hpp"

namespace ctxgs {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

/// Probability floor, matched to the 16-bit coder precision.
inline constexpr double kProbFloor = 1.0 / 32768.0;
inline constexpr std::int32_t kSymbolMin = -32768;
inline constexpr std::int32_t kSymbolMax = 32767;

enum class Mode { Train, Code };

inline constexpr int kGroups = 3;
inline constexpr std::array<const char*, kGroups> kGroupNames{"feature", "scaling", "offsets"};

struct ModelConfig {
  std::uint32_t levels = 3;  // one context net per level
  std::uint32_t feature_dim = 50;
  std::uint32_t scaling_dim = 3;
  std::uint32_t offset_count = 10;
  std::uint32_t hyper_dim = 12;  // D_z; 0 disables the hyperprior
  std::uint32_t hidden = 128;
  double sigma_min = 1e-3;
  double sigma_max = 1e3;
  std::array<double, kGroups> delta0{1.0, 0.01, 0.01};

  std::uint32_t channels() const { return feature_dim + scaling_dim + 3 * offset_count; }
  std::uint32_t group_size(int g) const {
    return g == 0 ? feature_dim : g == 1 ? scaling_dim : 3 * offset_count;
  }
  std::uint32_t group_begin(int g) const { return g == 0 ? 0 : g == 1 ? feature_dim : feature_dim + scaling_dim; }
  int group_of(std::uint32_t c) const { return c < feature_dim ? 0 : c < feature_dim + scaling_dim ? 1 : 2; }

  bool is_top(std::uint32_t level) const { return level + 1 == levels; }
  std::uint32_t input_dim(std::uint32_t level) const {
    return is_top(level) ? hyper_dim + 3 : hyper_dim + feature_dim + scaling_dim + 3;
  }
  std::uint32_t output_dim() const { return 3 * channels(); }

  void validate() const {
    require(levels >= 1, ErrorKind::Input, "model needs at least one level");
    require(hidden >= 1, ErrorKind::Input, "hidden width must be positive");
    require(sigma_min > 0 && sigma_max > sigma_min, ErrorKind::Input, "invalid sigma bounds");
    for (double d : delta0) require(d > 0 && std::isfinite(d), ErrorKind::Input, "base steps must be positive");
  }

  bool matches(const SceneConfig& s) const {
    return s.feature_dim == feature_dim && s.scaling_dim == scaling_dim && s.offset_count == offset_count;
  }

  /// D_z = floor(D_f / h_c).
  static ModelConfig for_scene(const SceneConfig& s, std::uint32_t levels, std::uint32_t h_c = 4,
                               bool hyperprior = true, std::uint32_t hidden = 128) {
    ModelConfig m;
    m.levels = levels;
    m.feature_dim = s.feature_dim;
    m.scaling_dim = s.scaling_dim;
    m.offset_count = s.offset_count;
    m.hyper_dim = hyperprior && h_c > 0 ? s.feature_dim / h_c : 0;
    m.hidden = hidden;
    return m;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// ---------------------------------------------------------------------------
// Gaussian conditional with adaptive bin width

struct GaussianTerm {
  double prob_raw = 0.0;  // unclamped bin mass
  double bits = 0.0;      // -log2(max(mass, floor))
  double d_v = 0.0, d_mu = 0.0, d_sigma = 0.0, d_delta = 0.0;  // d bits / d ...
  bool clamped = false;
};

/// Mass of [v - delta/2, v + delta/2) under N(mu, sigma) and its bit cost.
/// Derivatives are zero where the floor is active.
inline GaussianTerm gaussian_bin_term(double v, double mu, double sigma, double delta) {
  GaussianTerm t;
  const double a = v - mu;
  const double upper = (a + 0.5 * delta) / sigma;
  const double lower = (a - 0.5 * delta) / sigma;
  t.prob_raw = math::normal_mass(lower, upper);
  if (!(t.prob_raw >= kProbFloor)) {
    t.clamped = true;
    t.bits = -std::log2(kProbFloor);
    return t;
  }
  t.bits = -std::log2(t.prob_raw);
  const double pu = math::normal_pdf(upper), pl = math::normal_pdf(lower);
  const double scale = -1.0 / (t.prob_raw * math::kLn2);
  const double dp_dv = (pu - pl) / sigma;
  t.d_v = scale * dp_dv;
  t.d_mu = -t.d_v;
  t.d_delta = scale * 0.5 * (pu + pl) / sigma;
  t.d_sigma = scale * -(pu * upper - pl * lower) / sigma;
  return t;
}

/// Clamped bin probability. In code mode `v` is the reconstruction mu + s*delta.
inline double gaussian_bin_prob(double v, double mu, double sigma, double delta) {
  return std::max(math::normal_mass((v - mu - 0.5 * delta) / sigma, (v - mu + 0.5 * delta) / sigma), kProbFloor);
}

struct Quantized {
  double surrogate = 0.0;
  std::optional<std::int32_t> symbol;
};

/// Train mode adds uniform noise of one bin width; code mode snaps to the
/// mean-anchored grid mu + s*delta.
inline Quantized quantize_attr(double value, double mu, double delta, Mode mode, double noise = 0.0) {
  if (mode == Mode::Train) return {value + noise * delta, std::nullopt};
  const double q = math::round_half_away((value - mu) / delta);
  if (!(q >= kSymbolMin && q <= kSymbolMax))
    fail(ErrorKind::Overflow, "symbol overflow: round((v - mu) / delta) = " + std::to_string(q));
  const auto s = static_cast<std::int32_t>(q);
  return {mu + double(s) * delta, s};
}

// ---------------------------------------------------------------------------
// Head transforms: raw network outputs to (mu, sigma, delta)

struct HeadValue {
  double sigma = 0.0, delta = 0.0;
  double dsigma_draw = 0.0, ddelta_draw = 0.0;
};

/// sigma = clamp(sigma_min + softplus(r_s), sigma_min, sigma_max) and
/// delta = delta0 * 2^tanh(r_d), so delta lies in [delta0 / 2, 2 * delta0].
inline HeadValue head_transform(const ModelConfig& cfg, int group, double sigma_raw, double delta_raw) {
  HeadValue h;
  const double s = cfg.sigma_min + math::softplus(sigma_raw);
  if (s >= cfg.sigma_max) {
    h.sigma = cfg.sigma_max;
  } else {
    h.sigma = s;
    h.dsigma_draw = math::sigmoid(sigma_raw);
  }
  const double th = std::tanh(delta_raw);
  h.delta = cfg.delta0[group] * std::exp(th * math::kLn2);
  h.ddelta_draw = h.delta * math::kLn2 * (1.0 - th * th);
  return h;
}

// ---------------------------------------------------------------------------
// Context networks

/// One level's MLP: in -> hidden (ReLU) -> hidden (ReLU) -> 3 * channels.
/// Output rows [0, C) are mu, [C, 2C) raw sigma, [2C, 3C) raw delta.
struct LevelNet {
  Mat w1;
  Vec b1;
  Mat w2;
  Vec b2;
  Mat w3;
  Vec b3;

  static LevelNet zeros(std::uint32_t in, std::uint32_t hidden, std::uint32_t out) {
    return {Mat::Zero(hidden, in), Vec::Zero(hidden), Mat::Zero(hidden, hidden),
            Vec::Zero(hidden),     Mat::Zero(out, hidden), Vec::Zero(out)};
  }

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  void init(Rng& rng) {
    for (Mat* w : {&w1, &w2, &w3}) {
      const double bound = w->cols() > 0 ? 1.0 / std::sqrt(double(w->cols())) : 0.0;
      for (Eigen::Index i = 0; i < w->size(); ++i) w->data()[i] = rng.uniform(-bound, bound);
    }
    b1.setZero();
    b2.setZero();
    b3.setZero();
  }

  template <class F>
  void for_each_block(F&& f) {
    f(w1.data(), w1.size());
    f(b1.data(), b1.size());
    f(w2.data(), w2.size());
    f(b2.data(), b2.size());
    f(w3.data(), w3.size());
    f(b3.data(), b3.size());
  }
  template <class F>
  void for_each_block(F&& f) const {
    f(w1.data(), w1.size());
    f(b1.data(), b1.size());
    f(w2.data(), w2.size());
    f(b2.data(), b2.size());
    f(w3.data(), w3.size());
    f(b3.data(), b3.size());
  }
};

struct NetActivations {
  Mat x, z1, a1, z2, a2, y;
};

inline NetActivations forward(const LevelNet& net, Mat x) {
  NetActivations t;
  t.x = std::move(x);
  t.z1 = t.x * net.w1.transpose();
  t.z1.rowwise() += net.b1.transpose();
  t.a1 = t.z1.cwiseMax(0.0);
  t.z2 = t.a1 * net.w2.transpose();
  t.z2.rowwise() += net.b2.transpose();
  t.a2 = t.z2.cwiseMax(0.0);
  t.y = t.a2 * net.w3.transpose();
  t.y.rowwise() += net.b3.transpose();
  return t;
}

/// Accumulates parameter gradients into `grad` and returns d loss / d input.
inline Mat backward(const LevelNet& net, const NetActivations& t, const Mat& dy, LevelNet& grad) {
  grad.w3.noalias() += dy.transpose() * t.a2;
  grad.b3 += dy.colwise().sum().transpose();
  Mat dz2 = (dy * net.w3).cwiseProduct((t.z2.array() > 0.0).cast<double>().matrix());
  grad.w2.noalias() += dz2.transpose() * t.a1;
  grad.b2 += dz2.colwise().sum().transpose();
  Mat dz1 = (dz2 * net.w2).cwiseProduct((t.z1.array() > 0.0).cast<double>().matrix());
  grad.w1.noalias() += dz1.transpose() * t.x;
  grad.b1 += dz1.colwise().sum().transpose();
  return dz1 * net.w1;
}

struct ContextNet {
  ModelConfig config;
  std::vector<LevelNet> nets;  // indexed by level, 0 = finest

  static ContextNet zeros(const ModelConfig& cfg) {
    ContextNet c{cfg, {}};
    for (std::uint32_t k = 0; k < cfg.levels; ++k)
      c.nets.push_back(LevelNet::zeros(cfg.input_dim(k), cfg.hidden, cfg.output_dim()));
    return c;
  }
  static ContextNet create(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    auto c = zeros(cfg);
    for (auto& n : c.nets) n.init(rng);
    return c;
  }
  ContextNet zeros_like() const { return zeros(config); }

  template <class F>
  void for_each_block(F&& f) {
    for (auto& n : nets) n.for_each_block(f);
  }
  template <class F>
  void for_each_block(F&& f) const {
    for (const auto& n : nets) n.for_each_block(f);
  }
};

// ---------------------------------------------------------------------------
// Factorized density for the hyperprior latent

/// Per-channel parameters of the 1-3-3-3-1 monotone chain, flattened as
/// [H0 b0 a0 | H1 b1 a1 | H2 b2 a2 | H3 b3]. Matrices are made positive with
/// softplus; a_i gate the tanh nonlinearity of the first three stages.
struct FactorizedPrior {
  static constexpr int kStages = 4;
  static constexpr std::array<int, kStages + 1> kWidths{1, 3, 3, 3, 1};
  static constexpr int kParamsPerChannel = 43;
  static constexpr double kInitScale = 10.0;

  struct StageLayout {
    int in, out, h, b, a;  // offsets into the channel block; a = -1 for the last stage
  };
  static constexpr std::array<StageLayout, kStages> layout() {
    std::array<StageLayout, kStages> l{};
    int off = 0;
    for (int i = 0; i < kStages; ++i) {
      l[i].in = kWidths[i];
      l[i].out = kWidths[i + 1];
      l[i].h = off;
      off += l[i].in * l[i].out;
      l[i].b = off;
      off += l[i].out;
      if (i + 1 < kStages) {
        l[i].a = off;
        off += l[i].out;
      } else {
        l[i].a = -1;
      }
    }
    return l;
  }

  std::uint32_t channels = 0;
  std::vector<double> params;

  /// Symmetric initialisation: matrices chosen so the initial density is a
  /// logistic of scale kInitScale, zero biases and gates; cdf(0) = 1/2.
  static FactorizedPrior create(std::uint32_t channels) {
    FactorizedPrior p;
    p.channels = channels;
    p.params.assign(std::size_t(channels) * kParamsPerChannel, 0.0);
    const double scale = std::pow(kInitScale, 1.0 / kStages);
    for (std::uint32_t c = 0; c < channels; ++c)
      for (const auto& st : layout()) {
        const double init = std::log(std::expm1(1.0 / scale / st.out));
        for (int j = 0; j < st.in * st.out; ++j) p.params[c * kParamsPerChannel + st.h + j] = init;
      }
    return p;
  }
  FactorizedPrior zeros_like() const {
    FactorizedPrior p;
    p.channels = channels;
    p.params.assign(params.size(), 0.0);
    return p;
  }

  struct Tape {
    std::array<std::array<double, 3>, kStages + 1> h{};  // stage inputs, h[kStages] = logit
    std::array<std::array<double, 3>, kStages> z{};      // pre-gate values
  };

  /// Parameter transforms shared by every evaluation: softplus and sigmoid
  /// of the matrix entries, tanh of the gates (indexed like `params`).
  struct Prepared {
    std::vector<double> pos, dpos, gate;
  };
  Prepared prepare() const {
    Prepared r{std::vector<double>(params.size()), std::vector<double>(params.size()),
               std::vector<double>(params.size())};
    constexpr auto L = layout();
    for (std::uint32_t c = 0; c < channels; ++c) {
      const std::size_t base = std::size_t(c) * kParamsPerChannel;
      for (const auto& st : L) {
        for (int j = 0; j < st.in * st.out; ++j) {
          r.pos[base + st.h + j] = math::softplus(params[base + st.h + j]);
          r.dpos[base + st.h + j] = math::sigmoid(params[base + st.h + j]);
        }
        if (st.a >= 0)
          for (int o = 0; o < st.out; ++o) r.gate[base + st.a + o] = std::tanh(params[base + st.a + o]);
      }
    }
    return r;
  }

  double logit(std::uint32_t c, double x, Tape* tape = nullptr, const Prepared* prep = nullptr) const {
    const std::size_t base = std::size_t(c) * kParamsPerChannel;
    if (prep) return eval(params.data() + base, prep->pos.data() + base, prep->gate.data() + base, x, tape);
    const Prepared local = prepare_channel(c);
    return eval(params.data() + base, local.pos.data(), local.gate.data(), x, tape);
  }

  /// Back-propagates d loss / d logit through one recorded evaluation.
  /// Parameter gradients are added to `grad` (if given); returns d loss / d x.
  double logit_backward(std::uint32_t c, const Tape& t, double g_logit, FactorizedPrior* grad,
                        const Prepared* prep = nullptr) const {
    const std::size_t base = std::size_t(c) * kParamsPerChannel;
    double* gp = grad ? grad->params.data() + base : nullptr;
    if (prep) return back(prep->pos.data() + base, prep->dpos.data() + base, prep->gate.data() + base, gp, t, g_logit);
    const Prepared local = prepare_channel(c);
    return back(local.pos.data(), local.dpos.data(), local.gate.data(), gp, t, g_logit);
  }

 private:
  Prepared prepare_channel(std::uint32_t c) const {
    FactorizedPrior one;
    one.channels = 1;
    one.params.assign(params.begin() + std::ptrdiff_t(c) * kParamsPerChannel,
                      params.begin() + std::ptrdiff_t(c + 1) * kParamsPerChannel);
    return one.prepare();
  }

  static double eval(const double* p, const double* sp, const double* ga, double x, Tape* tape) {
    Tape local;
    Tape& t = tape ? *tape : local;
    t.h[0][0] = x;
    int s = 0;
    for (const auto& st : layout()) {
      for (int o = 0; o < st.out; ++o) {
        double v = p[st.b + o];
        for (int j = 0; j < st.in; ++j) v += sp[st.h + o * st.in + j] * t.h[s][j];
        t.z[s][o] = v;
        t.h[s + 1][o] = st.a >= 0 ? v + ga[st.a + o] * std::tanh(v) : v;
      }
      ++s;
    }
    return t.h[kStages][0];
  }

  static double back(const double* sp, const double* dsp, const double* ga, double* gp, const Tape& t,
                     double g_logit) {
    std::array<double, 3> g{g_logit, 0.0, 0.0};
    constexpr auto L = layout();
    for (int s = kStages - 1; s >= 0; --s) {
      const auto& st = L[s];
      std::array<double, 3> dz{}, gin{};
      for (int o = 0; o < st.out; ++o) {
        if (st.a >= 0) {
          const double ta = ga[st.a + o], tz = std::tanh(t.z[s][o]);
          dz[o] = g[o] * (1.0 + ta * (1.0 - tz * tz));
          if (gp) gp[st.a + o] += g[o] * tz * (1.0 - ta * ta);
        } else {
          dz[o] = g[o];
        }
        if (gp) gp[st.b + o] += dz[o];
        for (int j = 0; j < st.in; ++j) {
          if (gp) gp[st.h + o * st.in + j] += dz[o] * t.h[s][j] * dsp[st.h + o * st.in + j];
          gin[j] += dz[o] * sp[st.h + o * st.in + j];
        }
      }
      g = gin;
    }
    return g[0];
  }

 public:
  double cdf(std::uint32_t c, double x) const { return math::sigmoid(logit(c, x)); }
};

static_assert(FactorizedPrior::layout()[FactorizedPrior::kStages - 1].b + 1 == FactorizedPrior::kParamsPerChannel);

struct FactorizedTerm {
  double prob_raw = 0.0;
  double bits = 0.0;
  double d_x = 0.0;
  bool clamped = false;
};

/// Mass of [x - 1/2, x + 1/2) under channel c. With `want_grad`, `weight`
/// times the parameter gradient of the bit cost is added to `grad` (if given)
/// and d_x holds weight * d bits / d x.
inline FactorizedTerm factorized_bin_term(const FactorizedPrior& prior, std::uint32_t c, double x,
                                          FactorizedPrior* grad = nullptr, bool want_grad = true,
                                          double weight = 1.0, const FactorizedPrior::Prepared* prep = nullptr) {
  FactorizedPrior::Tape tu, tl;
  const double lu = prior.logit(c, x + 0.5, &tu, prep);
  const double ll = prior.logit(c, x - 0.5, &tl, prep);
  // Evaluate on the side of the logistic where the difference is well conditioned.
  const double sgn = (lu + ll) > 0.0 ? -1.0 : 1.0;
  FactorizedTerm t;
  t.prob_raw = std::abs(math::sigmoid(sgn * lu) - math::sigmoid(sgn * ll));
  if (!(t.prob_raw >= kProbFloor)) {
    t.clamped = true;
    t.bits = -std::log2(kProbFloor);
    return t;
  }
  t.bits = -std::log2(t.prob_raw);
  if (!want_grad) return t;
  const double scale = -weight / (t.prob_raw * math::kLn2);
  t.d_x = prior.logit_backward(c, tu, scale * math::sigmoid_grad(lu), grad, prep) +
          prior.logit_backward(c, tl, -scale * math::sigmoid_grad(ll), grad, prep);
  return t;
}

inline double factorized_cdf(const FactorizedPrior& prior, std::uint32_t c, double x) { return prior.cdf(c, x); }

inline double factorized_bin_prob(const FactorizedPrior& prior, std::uint32_t c, double x,
                                  const FactorizedPrior::Prepared* prep = nullptr) {
  return std::max(factorized_bin_term(prior, c, x, nullptr, false, 1.0, prep).prob_raw, kProbFloor);
}

/// Per-anchor latents z (N x D_z) and the factorized density over them.
struct HyperpriorTable {
  Mat z;
  FactorizedPrior theta;

  static HyperpriorTable create(std::size_t anchors, std::uint32_t dim) {
    return {Mat::Zero(Eigen::Index(anchors), dim), FactorizedPrior::create(dim)};
  }
  std::uint32_t dim() const { return static_cast<std::uint32_t>(z.cols()); }
  HyperpriorTable zeros_like() const { return {Mat::Zero(z.rows(), z.cols()), theta.zeros_like()}; }

  /// Integer latents as coded: round half away from zero.
  std::int32_t zhat(std::size_t anchor, std::uint32_t c) const {
    return static_cast<std::int32_t>(math::round_half_away(z(Eigen::Index(anchor), c)));
  }
};

// ---------------------------------------------------------------------------
// Contexts and parameter prediction

struct EntropyParams {
  std::vector<double> mu, sigma, delta;
};

/// Context layout: [z | parent feature | parent scaling | position], where the
/// parent segments are absent at the top level.
struct ContextVector {
  std::vector<double> values;
  std::uint32_t z_end = 0, feature_end = 0, scaling_end = 0;

  std::size_t size() const { return values.size(); }
  std::span<const double> position() const { return std::span(values).subspan(scaling_end, 3); }
};

/// Maps a position into [-1, 1]^3 through the scene bounding box; flat axes map to 0.
inline std::array<double, 3> normalize_position(const Vec3& x, const Vec3& lo, const Vec3& hi) {
  std::array<double, 3> r{};
  for (int d = 0; d < 3; ++d) {
    const double ext = double(hi[d]) - double(lo[d]);
    r[d] = ext > 0.0 ? 2.0 * (double(x[d]) - double(lo[d])) / ext - 1.0 : 0.0;
  }
  return r;
}

/// Writes one context row. `parent_feature`/`parent_scaling` are ignored at the top level.
inline void write_context(const ModelConfig& cfg, std::uint32_t level, std::span<const double> z,
                          std::span<const float> parent_feature, std::span<const float> parent_scaling,
                          const std::array<double, 3>& pos, std::span<double> out) {
  std::size_t i = 0;
  for (std::uint32_t c = 0; c < cfg.hyper_dim; ++c) out[i++] = z[c];
  if (!cfg.is_top(level)) {
    for (float v : parent_feature) out[i++] = v;
    for (float v : parent_scaling) out[i++] = v;
  }
  for (double v : pos) out[i++] = v;
}

inline ContextVector make_context(const ModelConfig& cfg, std::uint32_t level, std::span<const double> z,
                                  std::span<const float> parent_feature, std::span<const float> parent_scaling,
                                  const std::array<double, 3>& pos) {
  ContextVector v;
  v.values.resize(cfg.input_dim(level));
  write_context(cfg, level, z, parent_feature, parent_scaling, pos, v.values);
  v.z_end = cfg.hyper_dim;
  v.feature_end = v.z_end + (cfg.is_top(level) ? 0 : cfg.feature_dim);
  v.scaling_end = v.feature_end + (cfg.is_top(level) ? 0 : cfg.scaling_dim);
  return v;
}

/// Per-group (mu, sigma, delta) from raw network outputs of one row.
inline std::array<EntropyParams, kGroups> params_from_output(const ModelConfig& cfg,
                                                              const Eigen::Ref<const Eigen::RowVectorXd>& y) {
  const std::uint32_t C = cfg.channels();
  std::array<EntropyParams, kGroups> out;
  for (int g = 0; g < kGroups; ++g) {
    auto& p = out[g];
    for (std::uint32_t c = cfg.group_begin(g); c < cfg.group_begin(g) + cfg.group_size(g); ++c) {
      auto h = head_transform(cfg, g, y[C + c], y[2 * C + c]);
      p.mu.push_back(y[c]);
      p.sigma.push_back(h.sigma);
      p.delta.push_back(h.delta);
    }
  }
  return out;
}

inline std::array<EntropyParams, kGroups> predict_params(const ContextNet& net, std::uint32_t level,
                                                          const ContextVector& ctx) {
  const auto& cfg = net.config;
  require(level < cfg.levels, ErrorKind::Input, "predict_params: level out of range");
  require(ctx.size() == cfg.input_dim(level), ErrorKind::Input,
          "predict_params: context length " + std::to_string(ctx.size()) + " does not match level input " +
              std::to_string(cfg.input_dim(level)));
  Mat x = Eigen::Map<const Mat>(ctx.values.data(), 1, Eigen::Index(ctx.size()));
  auto acts = forward(net.nets[level], std::move(x));
  return params_from_output(cfg, acts.y.row(0));
}

}  // namespace ctxgs

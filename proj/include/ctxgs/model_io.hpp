#pragma once

// Model serialization ("CGSM"). Weights are flat little-endian float32
// arrays; a model is rounded to float32 before it is used for coding so the
// encoder and any decoder reading the serialized copy agree exactly.
//
// Layout: magic "CGSM", u16 version, u16 flags (bit 0: latents present),
// config block, then the weight block, then optionally N and N x D_z latents.
//
//   config: u32 levels, feature_dim, scaling_dim, offset_count, hyper_dim,
//           hidden; f64 sigma_min, sigma_max
//   weights: per level (finest first): w1, b1, w2, b2, w3, b3 (row-major);
//            delta0[3]; Theta, 43 values per channel

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ctxgs/binary_io.hpp"
#include "ctxgs/engine.hpp"
#include "ctxgs/ply_io.hpp"

namespace ctxgs {

inline constexpr std::uint16_t kModelVersion = 1;

inline double to_f32(double v) { return double(static_cast<float>(v)); }

/// Rounds every stored quantity (weights, Theta, delta0, latents) to float32.
inline void round_to_f32(EntropyModel& m) {
  m.for_each_block([](double* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) p[i] = to_f32(p[i]);
  });
  for (double& d : m.net.config.delta0) d = to_f32(d);
}

inline void write_model_config(ByteWriter& w, const ModelConfig& c) {
  w.u32(c.levels);
  w.u32(c.feature_dim);
  w.u32(c.scaling_dim);
  w.u32(c.offset_count);
  w.u32(c.hyper_dim);
  w.u32(c.hidden);
  w.f64(c.sigma_min);
  w.f64(c.sigma_max);
}

inline ModelConfig read_model_config(ByteReader& r) {
  ModelConfig c;
  c.levels = r.u32();
  c.feature_dim = r.u32();
  c.scaling_dim = r.u32();
  c.offset_count = r.u32();
  c.hyper_dim = r.u32();
  c.hidden = r.u32();
  c.sigma_min = r.f64();
  c.sigma_max = r.f64();
  require(c.levels >= 1 && c.levels <= 255, ErrorKind::Data, "model: level count out of range");
  require(c.hidden >= 1 && c.hidden <= 65536, ErrorKind::Data, "model: hidden width out of range");
  require(c.feature_dim <= 65536 && c.scaling_dim <= 65536 && c.offset_count <= 65536 && c.hyper_dim <= 65536,
          ErrorKind::Data, "model: dimension out of range");
  require(c.sigma_min > 0 && c.sigma_max > c.sigma_min, ErrorKind::Data, "model: invalid sigma bounds");
  return c;
}

/// Weight block only (nets, delta0, Theta); this is what the bitstream embeds.
inline void write_weights(ByteWriter& w, const EntropyModel& m) {
  auto put = [&](const double* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) w.f32(static_cast<float>(p[i]));
  };
  m.net.for_each_block(put);
  for (double d : m.config().delta0) w.f32(static_cast<float>(d));
  put(m.hyper.theta.params.data(), Eigen::Index(m.hyper.theta.params.size()));
}

/// Reads a weight block for `cfg`; the latent table is left with zero rows.
inline std::size_t weight_count(const ModelConfig& c) {
  std::size_t n = 0;
  for (std::uint32_t k = 0; k < c.levels; ++k)
    n += std::size_t(c.hidden) * (c.input_dim(k) + 1) + std::size_t(c.hidden) * (c.hidden + 1) +
         std::size_t(c.output_dim()) * (c.hidden + 1);
  return n + kGroups + std::size_t(c.hyper_dim) * FactorizedPrior::kParamsPerChannel;
}

inline EntropyModel read_weights(ByteReader& r, ModelConfig cfg) {
  require(weight_count(cfg) <= r.remaining() / 4, ErrorKind::Data, "model: truncated weights");
  EntropyModel m{ContextNet::zeros(cfg), HyperpriorTable::create(0, cfg.hyper_dim)};
  auto get = [&](double* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = r.f32();
      require(std::isfinite(p[i]), ErrorKind::Data, "model: non-finite weight");
    }
  };
  m.net.for_each_block(get);
  for (double& d : m.net.config.delta0) {
    d = r.f32();
    require(d > 0 && std::isfinite(d), ErrorKind::Data, "model: invalid base step");
  }
  get(m.hyper.theta.params.data(), Eigen::Index(m.hyper.theta.params.size()));
  return m;
}

inline std::vector<std::uint8_t> serialize_model(const EntropyModel& m, bool with_latents = true) {
  ByteWriter w;
  w.tag("CGSM");
  w.u16(kModelVersion);
  w.u16(with_latents ? 1 : 0);
  write_model_config(w, m.config());
  write_weights(w, m);
  if (with_latents) {
    w.u64(static_cast<std::uint64_t>(m.hyper.z.rows()));
    for (Eigen::Index i = 0; i < m.hyper.z.size(); ++i) w.f32(static_cast<float>(m.hyper.z.data()[i]));
  }
  return w.take();
}

inline EntropyModel parse_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "model file");
  r.expect_tag("CGSM");
  const auto version = r.u16();
  require(version == kModelVersion, ErrorKind::Data, "model: unsupported version " + std::to_string(version));
  const auto flags = r.u16();
  require((flags & ~1u) == 0, ErrorKind::Data, "model: unknown flags");
  auto m = read_weights(r, read_model_config(r));
  if (flags & 1u) {
    const auto n = r.u64();
    require(n <= r.remaining() / 4, ErrorKind::Data, "model: truncated latents");
    m.hyper.z = Mat::Zero(Eigen::Index(n), m.config().hyper_dim);
    for (Eigen::Index i = 0; i < m.hyper.z.size(); ++i) {
      m.hyper.z.data()[i] = r.f32();
      require(std::isfinite(m.hyper.z.data()[i]), ErrorKind::Data, "model: non-finite latent");
    }
  }
  require(r.remaining() == 0, ErrorKind::Data, "model: trailing bytes");
  return m;
}

inline void save_model(const EntropyModel& m, const std::filesystem::path& path) {
  ply::write_file(path, serialize_model(m));
}

inline EntropyModel load_model(const std::filesystem::path& path) { return parse_model(ply::read_file(path)); }

}  // namespace ctxgs

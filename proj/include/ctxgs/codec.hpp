#pragma once

// Scene bitstream ("CGSC"). See docs/bitstream.md for the byte layout.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ctxgs/binary_io.hpp"
#include "ctxgs/coding_plan.hpp"
#include "ctxgs/engine.hpp"
#include "ctxgs/model_io.hpp"
#include "ctxgs/partition.hpp"
#include "ctxgs/symbol_tables.hpp"

namespace ctxgs {

inline constexpr std::uint16_t kStreamVersion = 1;

enum StreamFlags : std::uint16_t {
  kFlagMasks = 1u << 0,
  kFlagExternalWeights = 1u << 1,
  kFlagNoContext = 1u << 2,
  kFlagNoAnchorForward = 1u << 3,
};

struct EncodeOptions {
  PlanOptions plan;
  bool external_weights = false;
};

/// Byte counts per bitstream part; attribute sections are summed over levels.
struct StorageReport {
  std::size_t header = 0;  // fixed header plus section table
  std::size_t positions = 0, masks = 0, weights = 0, hyper = 0;
  std::array<std::size_t, kGroups> groups{};
  std::size_t crc = 4;
  std::size_t total = 0;
  std::vector<std::size_t> sections;  // raw section lengths in stream order

  std::size_t section_sum() const { return std::accumulate(sections.begin(), sections.end(), std::size_t(0)); }
};

struct EncodeResult {
  std::vector<std::uint8_t> bytes;
  AnchorScene reconstruction;    // dequantized attributes, as the decoder will produce them
  RateBreakdown estimate;        // model bits for the coded symbols
  StorageReport storage;
  std::size_t coded_symbols = 0;  // attribute symbols
};

struct DecodeResult {
  AnchorScene scene;
  LevelPartition partition;
  PlanOptions plan;
  EntropyModel model;  // weights used, with rounded latents as z
};

namespace detail {

inline std::size_t section_count(std::uint32_t plan_levels) { return 4 + std::size_t(kGroups) * plan_levels; }

struct StreamHeader {
  std::uint16_t flags = 0;
  std::uint64_t n = 0;
  std::uint32_t levels = 1;
  ModelConfig model;
  std::vector<float> eps;
  std::vector<double> kappa;
  std::vector<std::uint32_t> level_counts;
  Vec3 bbox_min{}, bbox_max{};

  PlanOptions plan() const { return {!(flags & kFlagNoContext), !(flags & kFlagNoAnchorForward)}; }
  std::uint32_t plan_levels() const { return (flags & kFlagNoContext) ? 1 : levels; }
};

inline void write_header(ByteWriter& w, const StreamHeader& h) {
  w.tag("CGSC");
  w.u16(kStreamVersion);
  w.u16(h.flags);
  w.u64(h.n);
  w.u32(h.levels);
  write_model_config(w, h.model);
  for (float e : h.eps) w.f32(e);
  for (double k : h.kappa) w.f64(k);
  for (auto c : h.level_counts) w.u32(c);
  for (float v : h.bbox_min) w.f32(v);
  for (float v : h.bbox_max) w.f32(v);
  for (double d : h.model.delta0) w.f32(static_cast<float>(d));
}

inline StreamHeader read_header(ByteReader& r) {
  StreamHeader h;
  r.expect_tag("CGSC");
  const auto version = r.u16();
  require(version == kStreamVersion, ErrorKind::Data, "unsupported bitstream version " + std::to_string(version));
  h.flags = r.u16();
  require((h.flags & ~0xFu) == 0, ErrorKind::Data, "unknown bitstream flags");
  h.n = r.u64();
  h.levels = r.u32();
  require(h.levels >= 1 && h.levels <= 255, ErrorKind::Data, "level count out of range");
  require(h.n <= r.remaining() / 12, ErrorKind::Data, "anchor count exceeds stream size");
  h.model = read_model_config(r);
  require(h.model.levels == h.plan_levels(), ErrorKind::Data, "model level count does not match the header");
  for (std::uint32_t k = 0; k < h.levels; ++k) h.eps.push_back(r.f32());
  for (std::uint32_t k = 0; k < h.levels; ++k) h.kappa.push_back(r.f64());
  for (std::uint32_t k = 0; k < h.levels; ++k) h.level_counts.push_back(r.u32());
  for (float& v : h.bbox_min) v = r.f32();
  for (float& v : h.bbox_max) v = r.f32();
  for (double& d : h.model.delta0) {
    d = r.f32();
    require(d > 0 && std::isfinite(d), ErrorKind::Data, "invalid base step in header");
  }
  for (std::uint32_t k = 0; k < h.levels; ++k) {
    require(std::isfinite(h.eps[k]) && h.eps[k] > 0, ErrorKind::Data, "invalid voxel size in header");
    if (k > 0) require(h.eps[k] > h.eps[k - 1], ErrorKind::Data, "voxel sizes are not strictly increasing");
  }
  std::uint64_t total = 0;
  for (auto c : h.level_counts) total += c;
  require(total == h.n, ErrorKind::Data, "level counts do not sum to the anchor count");
  return h;
}

inline std::vector<std::uint8_t> pack_masks(const CodingScene& s) {
  std::vector<std::uint8_t> out((s.masks.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < s.masks.size(); ++i)
    if (s.masks[i]) out[i / 8] |= std::uint8_t(1u << (i % 8));
  return out;
}

}  // namespace detail

/// Byte accounting of a stream from its header and section table.
inline StorageReport storage_report(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 4, ErrorKind::Data, "bitstream: truncated");
  ByteReader r(bytes.first(bytes.size() - 4), "bitstream");
  const auto h = detail::read_header(r);
  const auto count = r.u32();
  require(count == detail::section_count(h.plan_levels()), ErrorKind::Data, "bitstream: unexpected section count");
  StorageReport rep;
  for (std::uint32_t i = 0; i < count; ++i) rep.sections.push_back(r.u64());
  rep.header = r.position();
  require(rep.section_sum() == r.remaining(), ErrorKind::Data, "bitstream: section lengths do not match stream size");
  rep.positions = rep.sections[0];
  rep.masks = rep.sections[1];
  rep.weights = rep.sections[2];
  rep.hyper = rep.sections[3];
  for (std::size_t i = 4; i < rep.sections.size(); ++i) rep.groups[(i - 4) % kGroups] += rep.sections[i];
  rep.total = bytes.size();
  return rep;
}

/// Encodes `scene` with a copy of `model` rounded to float32. The model's
/// latent table must have one row per anchor and its level count must match
/// the coding plan (1 when context is disabled).
inline EncodeResult encode_scene(const AnchorScene& scene, const LevelPartition& part, const EntropyModel& model,
                                 const EncodeOptions& opt = {}) {
  const std::size_t n = scene.size();
  require(part.size() == n, ErrorKind::Input, "partition does not match the scene");
  for (std::size_t i = 0; i < n; ++i) validate_anchor(scene.config, scene.anchors[i], i);
  require(model.config().matches(scene.config), ErrorKind::Input, "model dimensions do not match the scene");
  require(std::size_t(model.hyper.z.rows()) == n, ErrorKind::Input,
          "model latent table has " + std::to_string(model.hyper.z.rows()) + " rows for " + std::to_string(n) +
              " anchors");

  EntropyModel m = model;
  round_to_f32(m);
  const CodingPlan plan = make_plan(part, opt.plan);
  const CodingScene cs = CodingScene::from(scene);
  check_compatible(m.config(), plan, cs);

  detail::StreamHeader h;
  h.flags = (scene.config.has_masks ? kFlagMasks : 0) | (opt.external_weights ? kFlagExternalWeights : 0) |
            (opt.plan.context ? 0 : kFlagNoContext) | (opt.plan.anchor_forward ? 0 : kFlagNoAnchorForward);
  h.n = n;
  h.levels = part.levels;
  h.model = m.config();
  h.eps = part.eps;
  h.kappa = part.kappa;
  h.level_counts = part.level_counts;
  h.bbox_min = scene.bbox_min;
  h.bbox_max = scene.bbox_max;

  std::vector<std::vector<std::uint8_t>> sections;

  // Positions grouped by level, coarse to fine.
  {
    ByteWriter w;
    for (const auto& lvl : coding_order(part))
      for (auto a : lvl)
        for (float v : cs.positions[a]) w.f32(v);
    sections.push_back(w.take());
  }
  sections.push_back(detail::pack_masks(cs));
  {
    ByteWriter w;
    if (!opt.external_weights) write_weights(w, m);
    sections.push_back(w.take());
  }

  EncodeResult res;
  const std::uint32_t Dz = m.config().hyper_dim;
  const Mat zhat = rounded_latents(m.hyper);
  {
    std::vector<SymbolTable> tables;
    for (std::uint32_t c = 0; c < Dz; ++c) tables.push_back(factorized_table(m.hyper.theta, c));
    const auto prep = m.hyper.theta.prepare();
    RangeEncoder enc;
    for (std::size_t a = 0; a < n; ++a)
      for (std::uint32_t c = 0; c < Dz; ++c) {
        const double s = zhat(Eigen::Index(a), c);
        require(s >= kSymbolMin && s <= kSymbolMax, ErrorKind::Overflow,
                "hyperprior symbol overflow at anchor " + std::to_string(a) + ", channel " + std::to_string(c));
        encode_symbol(enc, tables[c], static_cast<std::int32_t>(s));
        res.estimate.hyper += -std::log2(factorized_bin_prob(m.hyper.theta, c, s, &prep));
      }
    sections.push_back(enc.finish());
  }

  std::vector<std::array<RangeEncoder, kGroups>> encoders(plan.order.size());
  DecodedStore store;
  code_walk(m.net, plan, cs, zhat, store, [&](const SymbolSite& s) {
    const auto q = [&] {
      try {
        return quantize_attr(cs.attr(s.anchor, s.channel), s.mu, s.delta, Mode::Code);
      } catch (const Error& e) {
        fail(e.kind(), std::string(e.what()) + " at anchor " + std::to_string(s.anchor) + ", group " +
                           kGroupNames[s.group] + ", channel " + std::to_string(s.channel));
      }
    }();
    encode_symbol(encoders[s.plan_level][s.group], gaussian_table(s.sigma, s.delta), *q.symbol);
    res.estimate.groups[s.group] += -std::log2(gaussian_bin_prob(q.surrogate, s.mu, s.sigma, s.delta));
    ++res.estimate.symbols;
    return *q.symbol;
  });
  for (auto& lv : encoders)
    for (auto& e : lv) sections.push_back(e.finish());
  res.coded_symbols = res.estimate.symbols;

  ByteWriter w;
  detail::write_header(w, h);
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& s : sections) w.u64(s.size());
  for (const auto& s : sections) w.bytes(s);
  w.u32(crc32(w.data()));
  res.bytes = w.take();

  res.reconstruction = scene;
  const auto vals = final_values(plan, store);
  const std::uint32_t C = cs.channels();
  for (std::size_t a = 0; a < n; ++a) {
    auto& an = res.reconstruction.anchors[a];
    const float* v = vals.data() + a * C;
    std::copy(v, v + cs.feature_dim, an.feature.begin());
    std::copy(v + cs.feature_dim, v + cs.feature_dim + cs.scaling_dim, an.scaling.begin());
    std::copy(v + cs.feature_dim + cs.scaling_dim, v + C, an.offsets.begin());
  }
  res.storage = storage_report(res.bytes);
  return res;
}

/// Decodes a stream. `external` supplies the weights when the stream was
/// written without them (its latent table is ignored).
inline DecodeResult decode_scene(std::span<const std::uint8_t> bytes, const EntropyModel* external = nullptr) {
  require(bytes.size() >= 4, ErrorKind::Data, "bitstream: truncated");
  {
    ByteReader tail(bytes.last(4), "bitstream");
    const auto stored = tail.u32();
    if (stored != crc32(bytes.first(bytes.size() - 4)))
      fail(ErrorKind::Data, "bitstream: CRC mismatch (stream is corrupt)");
  }
  ByteReader r(bytes.first(bytes.size() - 4), "bitstream");
  const auto h = detail::read_header(r);
  const std::uint32_t plan_levels = h.plan_levels();
  const auto count = r.u32();
  require(count == detail::section_count(plan_levels), ErrorKind::Data, "bitstream: unexpected section count");
  std::vector<std::uint64_t> lengths(count);
  for (auto& l : lengths) l = r.u64();
  {
    std::uint64_t sum = 0;
    for (auto l : lengths) {
      require(l <= r.remaining(), ErrorKind::Data, "bitstream: section length exceeds stream");
      sum += l;
    }
    require(sum == r.remaining(), ErrorKind::Data, "bitstream: section lengths do not match stream size");
  }
  std::size_t next_section = 0;
  auto section = [&](const std::string& what) {
    return ByteReader(r.bytes(std::size_t(lengths[next_section++])), what);
  };

  const ModelConfig& mc = h.model;
  const std::size_t n = h.n;
  SceneConfig sc{mc.feature_dim, mc.scaling_dim, mc.offset_count, (h.flags & kFlagMasks) != 0};

  // Positions: level groups coarse to fine, each in canonical order.
  std::vector<Vec3> grouped(n);
  {
    auto s = section("positions section");
    for (auto& p : grouped)
      for (float& v : p) {
        v = s.f32();
        require(std::isfinite(v), ErrorKind::Data, "bitstream: non-finite position");
      }
    require(s.remaining() == 0, ErrorKind::Data, "positions section: trailing bytes");
  }
  std::vector<Vec3> positions = grouped;
  std::sort(positions.begin(), positions.end(), canonical_less);
  for (std::size_t i = 1; i < n; ++i)
    require(!same_bits(positions[i - 1], positions[i]), ErrorKind::Data, "bitstream: duplicate positions");

  LevelPartition part = assemble_partition(positions, h.eps, h.kappa);
  {
    // The stored grouping must agree with the recomputed level assignment.
    std::size_t i = 0;
    for (const auto& lvl : coding_order(part))
      for (auto a : lvl)
        require(same_bits(grouped[i++], positions[a]), ErrorKind::Data,
                "bitstream: stored level grouping disagrees with the recomputed partition");
    require(part.level_counts == h.level_counts, ErrorKind::Data, "bitstream: level counts disagree");
  }

  CodingScene cs;
  cs.feature_dim = mc.feature_dim;
  cs.scaling_dim = mc.scaling_dim;
  cs.offset_count = mc.offset_count;
  cs.positions = positions;
  cs.bbox_min = h.bbox_min;
  cs.bbox_max = h.bbox_max;
  {
    auto s = section("mask section");
    const std::size_t bits = sc.has_masks ? n * mc.offset_count : 0;
    require(s.remaining() == (bits + 7) / 8, ErrorKind::Data, "mask section: wrong length");
    auto raw = s.bytes(s.remaining());
    cs.masks.resize(bits);
    for (std::size_t i = 0; i < bits; ++i) cs.masks[i] = (raw[i / 8] >> (i % 8)) & 1u;
  }

  EntropyModel m;
  {
    auto s = section("weights section");
    if (h.flags & kFlagExternalWeights) {
      require(external != nullptr, ErrorKind::Input, "stream was written without weights; a model file is required");
      require(s.remaining() == 0, ErrorKind::Data, "weights section should be empty");
      m.net = external->net;
      m.hyper.theta = external->hyper.theta;
      round_to_f32(m);
      require(m.config() == mc, ErrorKind::Input, "external model configuration does not match the stream");
    } else {
      m = read_weights(s, mc);
      require(s.remaining() == 0, ErrorKind::Data, "weights section: trailing bytes");
      require(m.config() == mc, ErrorKind::Data, "weights section: base steps disagree with the header");
    }
  }

  const std::uint32_t Dz = mc.hyper_dim;
  Mat zhat = Mat::Zero(Eigen::Index(n), Dz);
  {
    std::vector<SymbolTable> tables;
    for (std::uint32_t c = 0; c < Dz; ++c) tables.push_back(factorized_table(m.hyper.theta, c));
    auto s = section("hyperprior section");
    auto payload = s.bytes(s.remaining());
    require(n * Dz > 0 || payload.empty(), ErrorKind::Data, "hyperprior section should be empty");
    if (n * Dz > 0) {
      RangeDecoder dec(payload, "hyperprior section");
      for (std::size_t a = 0; a < n; ++a)
        for (std::uint32_t c = 0; c < Dz; ++c) zhat(Eigen::Index(a), c) = decode_symbol(dec, tables[c]);
      dec.finish();
    }
  }
  m.hyper.z = zhat;

  const CodingPlan plan = make_plan(part, h.plan());
  std::vector<std::array<std::vector<std::uint8_t>, kGroups>> payloads(plan.order.size());
  std::vector<std::array<std::optional<RangeDecoder>, kGroups>> decoders(plan.order.size());
  std::vector<std::array<std::size_t, kGroups>> expected(plan.order.size());
  for (std::size_t li = 0; li < plan.order.size(); ++li) {
    expected[li].fill(0);
    for (const auto& u : plan.order[li].units)
      for (std::uint32_t c = 0; c < cs.channels(); ++c)
        if (cs.active(u.anchor, c)) ++expected[li][mc.group_of(c)];
    for (int g = 0; g < kGroups; ++g) {
      const std::string what = std::string(kGroupNames[g]) + " section (level " +
                               std::to_string(plan.order[li].level) + ")";
      auto s = section(what);
      auto p = s.bytes(s.remaining());
      payloads[li][g].assign(p.begin(), p.end());
      if (expected[li][g] > 0)
        decoders[li][g].emplace(payloads[li][g], what);
      else
        require(p.empty(), ErrorKind::Data, what + ": should be empty");
    }
  }

  DecodedStore store;
  code_walk(m.net, plan, cs, zhat, store, [&](const SymbolSite& s) {
    auto& dec = decoders[s.plan_level][s.group];
    if (!dec) fail(ErrorKind::Sequencing, "no decoder for a coded group");
    return decode_symbol(*dec, gaussian_table(s.sigma, s.delta));
  });
  for (auto& lv : decoders)
    for (auto& d : lv)
      if (d) d->finish();

  DecodeResult out;
  std::vector<Anchor> anchors(n);
  const auto vals = final_values(plan, store);
  const std::uint32_t C = cs.channels();
  for (std::size_t a = 0; a < n; ++a) {
    auto& an = anchors[a];
    an.position = positions[a];
    const float* v = vals.data() + a * C;
    an.feature.assign(v, v + cs.feature_dim);
    an.scaling.assign(v + cs.feature_dim, v + cs.feature_dim + cs.scaling_dim);
    an.offsets.assign(v + cs.feature_dim + cs.scaling_dim, v + C);
    if (sc.has_masks) an.mask.assign(cs.masks.begin() + a * mc.offset_count, cs.masks.begin() + (a + 1) * mc.offset_count);
  }
  out.scene = AnchorScene{sc, std::move(anchors), {}, {}};
  compute_bbox(out.scene);
  require(same_bits(out.scene.bbox_min, h.bbox_min) && same_bits(out.scene.bbox_max, h.bbox_max), ErrorKind::Data,
          "bitstream: stored bounding box disagrees with positions");
  out.partition = std::move(part);
  out.plan = h.plan();
  out.model = std::move(m);
  return out;
}

/// Bits under the model for the whole scene. Code mode rounds with the
/// mean-anchored grid; train mode uses noisy surrogates drawn from `seed`.
inline RateBreakdown estimate_rate(const AnchorScene& scene, const LevelPartition& part, const EntropyModel& model,
                                   Mode mode, const PlanOptions& popt = {}, std::uint64_t seed = 0) {
  const CodingPlan plan = make_plan(part, popt);
  const CodingScene cs = CodingScene::from(scene);
  DecodedStore store;
  auto code = quantize_walk(model, plan, cs, store);
  if (mode == Mode::Code) return code;
  Rng rng(seed);
  const auto noise = NoiseDraws::draw(plan, model.config(), rng);
  return train_loss(model, plan, cs, store, noise, LossConfig{}).bits;
}

}  // namespace ctxgs

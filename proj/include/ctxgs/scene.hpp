#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "ctxgs/error.hpp"

namespace ctxgs {

using Vec3 = std::array<float, 3>;

/// Scene-wide attribute dimensions. Every anchor of a scene carries exactly
/// these sizes.
struct SceneConfig {
  std::uint32_t feature_dim = 50;
  std::uint32_t scaling_dim = 3;
  std::uint32_t offset_count = 10;  // k offsets of 3 components each
  bool has_masks = false;

  std::uint32_t offset_values() const { return 3 * offset_count; }
  /// Coded real channels per anchor: feature, scaling, then offsets row-major.
  std::uint32_t channels() const { return feature_dim + scaling_dim + offset_values(); }

  friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

struct Anchor {
  Vec3 position{};
  std::vector<float> feature;
  std::vector<float> scaling;
  std::vector<float> offsets;     // offset_count x 3, row-major
  std::vector<std::uint8_t> mask;  // offset_count entries of 0/1, empty without masks

  bool offset_active(std::size_t i) const { return mask.empty() || mask[i] != 0; }
};

struct AnchorScene {
  SceneConfig config;
  std::vector<Anchor> anchors;  // canonical order
  Vec3 bbox_min{};
  Vec3 bbox_max{};

  std::size_t size() const { return anchors.size(); }
  bool empty() const { return anchors.empty(); }
};

namespace detail {
inline std::uint32_t bits(float v) { return std::bit_cast<std::uint32_t>(v); }
}  // namespace detail

/// Canonical anchor order: lexicographic by position value, then by the raw
/// bit patterns (separates +0.0 from -0.0). Positions within a scene are
/// unique at the bit level, so this is a strict total order on valid scenes.
inline bool canonical_less(const Vec3& a, const Vec3& b) {
  if (a[0] != b[0]) return a[0] < b[0];
  if (a[1] != b[1]) return a[1] < b[1];
  if (a[2] != b[2]) return a[2] < b[2];
  using detail::bits;
  return std::tuple(bits(a[0]), bits(a[1]), bits(a[2])) < std::tuple(bits(b[0]), bits(b[1]), bits(b[2]));
}

inline bool same_bits(const Vec3& a, const Vec3& b) {
  using detail::bits;
  return bits(a[0]) == bits(b[0]) && bits(a[1]) == bits(b[1]) && bits(a[2]) == bits(b[2]);
}

/// Checks dimensions and finiteness. `index` is reported in error messages.
inline void validate_anchor(const SceneConfig& cfg, const Anchor& a, std::size_t index) {
  const auto where = " at anchor " + std::to_string(index);
  require(a.feature.size() == cfg.feature_dim, ErrorKind::Data, "feature dimension mismatch" + where);
  require(a.scaling.size() == cfg.scaling_dim, ErrorKind::Data, "scaling dimension mismatch" + where);
  require(a.offsets.size() == cfg.offset_values(), ErrorKind::Data, "offset dimension mismatch" + where);
  require(a.mask.size() == (cfg.has_masks ? cfg.offset_count : 0u), ErrorKind::Data, "mask dimension mismatch" + where);
  auto finite = [](const auto& v) { return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); }); };
  require(finite(a.position), ErrorKind::Data, "non-finite position" + where);
  require(finite(a.feature), ErrorKind::Data, "non-finite feature" + where);
  require(finite(a.scaling), ErrorKind::Data, "non-finite scaling" + where);
  require(finite(a.offsets), ErrorKind::Data, "non-finite offset" + where);
  for (auto m : a.mask) require(m <= 1, ErrorKind::Data, "mask value other than 0/1" + where);
}

inline void compute_bbox(AnchorScene& s) {
  if (s.anchors.empty()) {
    s.bbox_min = s.bbox_max = Vec3{0.f, 0.f, 0.f};
    return;
  }
  s.bbox_min = s.bbox_max = s.anchors.front().position;
  for (const auto& a : s.anchors)
    for (int d = 0; d < 3; ++d) {
      s.bbox_min[d] = std::min(s.bbox_min[d], a.position[d]);
      s.bbox_max[d] = std::max(s.bbox_max[d], a.position[d]);
    }
}

/// Validates anchors (indices refer to the input order), sorts them into
/// canonical order and computes the bounding box.
inline AnchorScene make_scene(const SceneConfig& cfg, std::vector<Anchor> anchors) {
  for (std::size_t i = 0; i < anchors.size(); ++i) validate_anchor(cfg, anchors[i], i);
  std::stable_sort(anchors.begin(), anchors.end(),
                   [](const Anchor& a, const Anchor& b) { return canonical_less(a.position, b.position); });
  for (std::size_t i = 1; i < anchors.size(); ++i)
    require(!same_bits(anchors[i - 1].position, anchors[i].position), ErrorKind::Data,
            "duplicate anchor position (" + std::to_string(anchors[i].position[0]) + ", " +
                std::to_string(anchors[i].position[1]) + ", " + std::to_string(anchors[i].position[2]) + ")");
  AnchorScene s{cfg, std::move(anchors), {}, {}};
  compute_bbox(s);
  return s;
}

/// Bit-level equality of two scenes, including masks and bounding box.
inline bool bit_equal(const AnchorScene& a, const AnchorScene& b) {
  if (!(a.config == b.config) || a.anchors.size() != b.anchors.size()) return false;
  if (!same_bits(a.bbox_min, b.bbox_min) || !same_bits(a.bbox_max, b.bbox_max)) return false;
  auto eq = [](const std::vector<float>& x, const std::vector<float>& y) {
    return x.size() == y.size() &&
           std::equal(x.begin(), x.end(), y.begin(), [](float p, float q) { return detail::bits(p) == detail::bits(q); });
  };
  for (std::size_t i = 0; i < a.anchors.size(); ++i) {
    const auto &p = a.anchors[i], &q = b.anchors[i];
    if (!same_bits(p.position, q.position) || !eq(p.feature, q.feature) || !eq(p.scaling, q.scaling) ||
        !eq(p.offsets, q.offsets) || p.mask != q.mask)
      return false;
  }
  return true;
}

/// Neural-Gaussian centres spawned by an anchor: mu_i = x + O_i * l, with the
/// scaling applied elementwise.
inline std::vector<Vec3> spawn_positions(const Anchor& a) {
  require(a.scaling.size() == 3, ErrorKind::Input,
          "spawn_positions needs a 3-component scaling, got " + std::to_string(a.scaling.size()));
  require(a.offsets.size() % 3 == 0, ErrorKind::Input, "offset count is not a multiple of 3");
  std::vector<Vec3> out(a.offsets.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (int d = 0; d < 3; ++d) out[i][d] = a.position[d] + a.offsets[3 * i + d] * a.scaling[d];
  return out;
}

}  // namespace ctxgs

#pragma once

// Synthetic anchor scenes for tests and experiments.
//
//   grid        side^3 anchors at integer coordinates, i.i.d. attributes
//   clustered   Gaussian blobs around uniform centres, i.i.d. attributes
//   iid         uniform positions, i.i.d. attributes (no spatial structure)
//   correlated  uniform positions; attributes generated coarse to fine over
//               the partition so that each child is a noisy copy of its parent

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ctxgs/partition.hpp"
#include "ctxgs/rng.hpp"
#include "ctxgs/scene.hpp"

namespace ctxgs {

enum class SynthKind { Grid, Clustered, Iid, Correlated };

inline const char* synth_kind_name(SynthKind k) {
  switch (k) {
    case SynthKind::Grid: return "grid";
    case SynthKind::Clustered: return "clustered";
    case SynthKind::Iid: return "iid";
    case SynthKind::Correlated: return "correlated";
  }
  return "?";
}

inline SynthKind parse_synth_kind(const std::string& s) {
  for (auto k : {SynthKind::Grid, SynthKind::Clustered, SynthKind::Iid, SynthKind::Correlated})
    if (s == synth_kind_name(k)) return k;
  fail(ErrorKind::Input, "unknown scene kind '" + s + "'");
}

struct SynthConfig {
  SynthKind kind = SynthKind::Correlated;
  std::size_t anchors = 1000;  // ignored for grid
  std::uint32_t grid_side = 10;
  double extent = 10.0;  // positions lie in [0, extent]^3
  std::uint32_t clusters = 8;
  double cluster_sd = 0.5;
  SceneConfig dims;
  double feature_scale = 4.0;
  double scaling_scale = 0.05;
  double offset_scale = 0.05;
  double rho = 0.95;    // parent-child correlation (correlated kind)
  double gamma = 0.5;   // share of each anchor's innovation common to all its feature channels
  double mask_p = 0.7;  // P(mask bit = 1) when dims.has_masks
  PartitionConfig partition;  // structure the correlated kind is generated over
  std::uint64_t seed = 0;
};

namespace detail {

/// Fills attributes with independent draws: component * scale * N(0, 1).
inline void fill_iid(Anchor& a, const SynthConfig& c, Rng& rng) {
  for (auto& v : a.feature) v = static_cast<float>(c.feature_scale * rng.normal());
  for (auto& v : a.scaling) v = static_cast<float>(c.scaling_scale * rng.normal());
  for (auto& v : a.offsets) v = static_cast<float>(c.offset_scale * rng.normal());
}

}  // namespace detail

inline AnchorScene synthesize(const SynthConfig& c) {
  Rng rng(c.seed);
  std::vector<Vec3> pos;
  if (c.kind == SynthKind::Grid) {
    for (std::uint32_t i = 0; i < c.grid_side; ++i)
      for (std::uint32_t j = 0; j < c.grid_side; ++j)
        for (std::uint32_t k = 0; k < c.grid_side; ++k) pos.push_back({float(i), float(j), float(k)});
  } else {
    std::vector<Vec3> centres;
    for (std::uint32_t i = 0; i < std::max<std::uint32_t>(1, c.clusters); ++i)
      centres.push_back({float(rng.uniform(0, c.extent)), float(rng.uniform(0, c.extent)),
                         float(rng.uniform(0, c.extent))});
    std::vector<Vec3> raw;
    while (raw.size() < c.anchors) {
      Vec3 p;
      if (c.kind == SynthKind::Clustered) {
        const auto& ctr = centres[rng.below(centres.size())];
        for (int d = 0; d < 3; ++d) p[d] = static_cast<float>(ctr[d] + c.cluster_sd * rng.normal());
      } else {
        for (int d = 0; d < 3; ++d) p[d] = static_cast<float>(rng.uniform(0, c.extent));
      }
      raw.push_back(p);
      // Bit-identical duplicates are astronomically rare; drop them if they occur.
      if (raw.size() == c.anchors) {
        std::sort(raw.begin(), raw.end(), canonical_less);
        raw.erase(std::unique(raw.begin(), raw.end(), same_bits), raw.end());
      }
    }
    pos = std::move(raw);
  }

  std::vector<Anchor> anchors(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    auto& a = anchors[i];
    a.position = pos[i];
    a.feature.assign(c.dims.feature_dim, 0.f);
    a.scaling.assign(c.dims.scaling_dim, 0.f);
    a.offsets.assign(c.dims.offset_values(), 0.f);
    if (c.dims.has_masks) a.mask.assign(c.dims.offset_count, 0);
  }
  auto scene = make_scene(c.dims, std::move(anchors));

  if (c.kind != SynthKind::Correlated) {
    for (auto& a : scene.anchors) detail::fill_iid(a, c, rng);
  } else {
    const auto part = partition(scene, c.partition);
    const double keep = std::sqrt(std::max(0.0, 1.0 - c.rho * c.rho));
    const double common = c.gamma, own = std::sqrt(std::max(0.0, 1.0 - c.gamma * c.gamma));
    auto innovate = [&](std::vector<float>& v, const std::vector<float>* parent, double scale, double shift) {
      for (std::size_t j = 0; j < v.size(); ++j) {
        const double e = scale * (common * shift + own * rng.normal());
        v[j] = static_cast<float>(parent ? c.rho * (*parent)[j] + keep * e : e);
      }
    };
    for (const auto& level : coding_order(part))
      for (auto i : level) {
        auto& a = scene.anchors[i];
        const Anchor* p = part.parent_of[i] == kNoParent ? nullptr : &scene.anchors[std::size_t(part.parent_of[i])];
        const double shift = rng.normal();
        innovate(a.feature, p ? &p->feature : nullptr, c.feature_scale, shift);
        innovate(a.scaling, p ? &p->scaling : nullptr, c.scaling_scale, shift);
        innovate(a.offsets, p ? &p->offsets : nullptr, c.offset_scale, shift);
      }
  }
  if (c.dims.has_masks)
    for (auto& a : scene.anchors)
      for (auto& m : a.mask) m = rng.uniform() < c.mask_p ? 1 : 0;
  return scene;
}

}  // namespace ctxgs

#pragma once

// Bottom-up hierarchical anchor partitioning.
//
// hat V^0 is the whole scene. hat V^k keeps one representative per occupied
// voxel of size eps^k among the members of hat V^{k-1}; the representative is
// the member with the smallest canonical index. Levels are the set differences
// V^k = hat V^k \ hat V^{k+1}, with V^{K-1} = hat V^{K-1}. Each eps^k = kappa^k *
// eps^0, where kappa^k is found by bisection so that |hat V^k| is close to
// tau * |hat V^{k-1}|.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctxgs/error.hpp"
#include "ctxgs/scene.hpp"

namespace ctxgs {

struct PartitionConfig {
  std::uint32_t levels = 3;  // K
  double tau = 0.2;          // target |hat V^k| / |hat V^{k-1}|
  float eps0 = 0.01f;        // base voxel size
  double kappa_tolerance = 1e-6;  // relative bracket width at which bisection stops
  int max_iterations = 64;

  void validate() const {
    require(levels >= 1, ErrorKind::Input, "partition needs at least one level");
    require(tau > 0.0 && tau < 1.0, ErrorKind::Input, "tau must lie in (0, 1)");
    require(std::isfinite(eps0) && eps0 > 0.f, ErrorKind::Input, "base voxel size must be positive");
    require(kappa_tolerance > 0.0, ErrorKind::Input, "kappa tolerance must be positive");
    require(max_iterations > 0, ErrorKind::Input, "max_iterations must be positive");
  }
};

inline constexpr std::int32_t kNoParent = -1;

struct LevelPartition {
  std::uint32_t levels = 1;
  std::vector<float> eps;      // eps^0 .. eps^{K-1}, strictly increasing
  std::vector<double> kappa;   // kappa^0 = 1
  std::vector<std::uint8_t> level_of;   // per anchor
  std::vector<std::int32_t> parent_of;  // per anchor, kNoParent exactly for level K-1
  std::vector<std::uint32_t> level_counts;  // |V^k|
  std::vector<std::uint32_t> hat_counts;    // |hat V^k|
  std::vector<std::string> warnings;

  std::size_t size() const { return level_of.size(); }

  /// Same level assignment, parents, voxel sizes and counts. kappa and
  /// warnings are search diagnostics and are not compared.
  bool same_structure(const LevelPartition& o) const {
    if (levels != o.levels || level_of != o.level_of || parent_of != o.parent_of ||
        level_counts != o.level_counts || eps.size() != o.eps.size())
      return false;
    for (std::size_t k = 0; k < eps.size(); ++k)
      if (detail::bits(eps[k]) != detail::bits(o.eps[k])) return false;
    return true;
  }
};

using VoxelKey = std::array<std::int64_t, 3>;

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (auto v : k) {
      h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      h *= 0xBF58476D1CE4E5B9ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 31));
  }
};

/// Integer voxel index round(x / eps), half away from zero, computed with one
/// IEEE division and one rounding per component.
inline VoxelKey voxel_key(const Vec3& x, float eps) {
  VoxelKey k;
  for (int d = 0; d < 3; ++d) k[d] = static_cast<std::int64_t>(std::round(double(x[d]) / double(eps)));
  return k;
}

/// round(x / eps) * eps componentwise.
inline std::array<double, 3> quantize_position(const Vec3& x, float eps) {
  auto k = voxel_key(x, eps);
  return {double(k[0]) * double(eps), double(k[1]) * double(eps), double(k[2]) * double(eps)};
}

struct LevelBuild {
  std::vector<std::uint32_t> representatives;  // ascending canonical index
  std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash> voxel_rep;
};

/// One representative per occupied voxel at `eps_next`: the member with the
/// smallest canonical index.
inline LevelBuild build_level(std::span<const std::uint32_t> members, float eps_next,
                              std::span<const Vec3> positions) {
  LevelBuild out;
  out.voxel_rep.reserve(members.size());
  for (auto m : members) {
    auto [it, inserted] = out.voxel_rep.try_emplace(voxel_key(positions[m], eps_next), m);
    if (!inserted && m < it->second) it->second = m;
  }
  out.representatives.reserve(out.voxel_rep.size());
  for (const auto& [key, rep] : out.voxel_rep) out.representatives.push_back(rep);
  std::sort(out.representatives.begin(), out.representatives.end());
  return out;
}

inline std::size_t count_voxels(std::span<const std::uint32_t> members, float eps,
                                std::span<const Vec3> positions) {
  std::unordered_map<VoxelKey, char, VoxelKeyHash> seen;
  seen.reserve(members.size());
  for (auto m : members) seen.try_emplace(voxel_key(positions[m], eps), 0);
  return seen.size();
}

/// Voxel size used for a scale multiplier; the float rounding is part of the
/// definition since the decoder only sees the stored float.
inline float scaled_eps(double kappa, float eps0) { return static_cast<float>(kappa * double(eps0)); }

struct KappaSearch {
  double kappa = 1.0;
  float eps = 0.f;
  std::size_t count = 0;
  bool unreachable = false;
};

/// Finds kappa > kappa_min whose voxel count over `members` is closest to
/// `target` (ties go to the smaller kappa). The upper bracket doubles until the
/// count drops to the target, then bisection runs until the count hits the
/// target exactly, the bracket is narrower than `tolerance * lo`, or
/// `max_iterations` steps elapse.
inline KappaSearch search_kappa(std::span<const std::uint32_t> members, float eps0, std::size_t target,
                                std::span<const Vec3> positions, double kappa_min = 1.0,
                                double tolerance = 1e-6, int max_iterations = 64) {
  require(!members.empty(), ErrorKind::Input, "search_kappa needs at least one member");
  require(target >= 1, ErrorKind::Input, "search_kappa target must be >= 1");

  std::vector<KappaSearch> tried;
  auto eval = [&](double kappa) {
    KappaSearch r;
    r.kappa = kappa;
    r.eps = scaled_eps(kappa, eps0);
    r.count = count_voxels(members, r.eps, positions);
    tried.push_back(r);
    return r.count;
  };
  auto best = [&](bool unreachable) {
    KappaSearch b = tried.front();
    auto dist = [&](std::size_t c) { return c > target ? c - target : target - c; };
    for (const auto& t : tried)
      if (dist(t.count) < dist(b.count) || (dist(t.count) == dist(b.count) && t.kappa < b.kappa)) b = t;
    b.unreachable = unreachable;
    return b;
  };

  double lo = kappa_min * (1.0 + tolerance);
  std::size_t c_lo = eval(lo);
  if (c_lo <= target) return best(c_lo < target);

  double hi = 2.0 * kappa_min;
  bool bracketed = false;
  for (int i = 0; i < max_iterations; ++i) {
    if (eval(hi) <= target) {
      bracketed = true;
      break;
    }
    lo = hi;
    hi *= 2.0;
  }
  if (!bracketed) {
    KappaSearch m = tried.front();
    for (const auto& t : tried)
      if (t.count < m.count) m = t;
    m.unreachable = true;
    return m;
  }
  for (int i = 0; i < max_iterations && hi - lo > tolerance * lo; ++i) {
    double mid = 0.5 * (lo + hi);
    std::size_t c = eval(mid);
    if (c == target) break;
    if (c > target) lo = mid;
    else hi = mid;
  }
  return best(false);
}

/// Level targets are round(tau * |hat V^{k-1}|), at least 1.
inline std::size_t level_target(double tau, std::size_t prev) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(tau * double(prev))));
}

inline std::vector<Vec3> positions_of(const AnchorScene& scene) {
  std::vector<Vec3> p;
  p.reserve(scene.size());
  for (const auto& a : scene.anchors) p.push_back(a.position);
  return p;
}

/// Assigns levels and parents given fixed voxel sizes. Shared by the encoder
/// (after the kappa search) and by the decoder's parent reconstruction.
inline LevelPartition assemble_partition(std::span<const Vec3> positions, std::vector<float> eps,
                                         std::vector<double> kappa) {
  LevelPartition p;
  p.levels = static_cast<std::uint32_t>(eps.size());
  p.eps = std::move(eps);
  p.kappa = std::move(kappa);
  const std::size_t n = positions.size();
  p.level_of.assign(n, 0);
  p.parent_of.assign(n, kNoParent);

  std::vector<std::uint32_t> hat(n);
  for (std::size_t i = 0; i < n; ++i) hat[i] = static_cast<std::uint32_t>(i);
  p.hat_counts.push_back(static_cast<std::uint32_t>(n));
  std::vector<LevelBuild> builds;
  for (std::uint32_t k = 1; k < p.levels; ++k) {
    builds.push_back(build_level(hat, p.eps[k], positions));
    hat = builds.back().representatives;
    p.hat_counts.push_back(static_cast<std::uint32_t>(hat.size()));
    for (auto a : hat) p.level_of[a] = static_cast<std::uint8_t>(k);
  }
  // An anchor leaves hat V at level(a) + 1; its voxel representative there is its parent.
  for (std::size_t a = 0; a < n; ++a) {
    std::uint32_t k = p.level_of[a];
    if (k + 1 < p.levels) p.parent_of[a] = static_cast<std::int32_t>(builds[k].voxel_rep.at(voxel_key(positions[a], p.eps[k + 1])));
  }
  p.level_counts.assign(p.levels, 0);
  for (auto l : p.level_of) ++p.level_counts[l];
  return p;
}

inline LevelPartition partition(const AnchorScene& scene, const PartitionConfig& cfg) {
  cfg.validate();
  require(cfg.levels <= 255, ErrorKind::Input, "at most 255 levels are supported");
  const auto positions = positions_of(scene);
  std::vector<float> eps{cfg.eps0};
  std::vector<double> kappa{1.0};
  std::vector<std::string> warnings;

  std::vector<std::uint32_t> hat(positions.size());
  for (std::size_t i = 0; i < hat.size(); ++i) hat[i] = static_cast<std::uint32_t>(i);
  for (std::uint32_t k = 1; k < cfg.levels; ++k) {
    float e;
    double kap;
    if (hat.empty()) {
      kap = 2.0 * kappa.back();
      e = scaled_eps(kap, cfg.eps0);
    } else {
      auto target = level_target(cfg.tau, hat.size());
      auto r = search_kappa(hat, cfg.eps0, target, positions, kappa.back(), cfg.kappa_tolerance, cfg.max_iterations);
      if (r.unreachable)
        warnings.push_back("level " + std::to_string(k) + ": unreachable-target (wanted " + std::to_string(target) +
                           ", got " + std::to_string(r.count) + ")");
      kap = r.kappa;
      e = r.eps;
    }
    if (!(e > eps.back())) e = std::nextafter(eps.back(), std::numeric_limits<float>::infinity());
    eps.push_back(e);
    kappa.push_back(kap);
    if (!hat.empty()) hat = build_level(hat, e, positions).representatives;
  }
  auto p = assemble_partition(positions, std::move(eps), std::move(kappa));
  p.warnings = std::move(warnings);
  return p;
}

/// Anchor indices per level, coarse (K-1) first; canonical order within a level.
inline std::vector<std::vector<std::uint32_t>> coding_order(const LevelPartition& p) {
  std::vector<std::vector<std::uint32_t>> out(p.levels);
  for (std::size_t a = 0; a < p.size(); ++a)
    out[p.levels - 1 - p.level_of[a]].push_back(static_cast<std::uint32_t>(a));
  return out;
}

}  // namespace ctxgs

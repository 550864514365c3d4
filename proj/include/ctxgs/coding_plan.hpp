#pragma once

// Which anchor copies get coded at which level, and which already-coded copy
// each one is conditioned on.

#include <cstdint>
#include <string>
#include <vector>

#include "ctxgs/error.hpp"
#include "ctxgs/partition.hpp"

namespace ctxgs {

struct PlanOptions {
  /// Condition finer levels on their decoded parent. Off collapses the scene
  /// into a single position-only level.
  bool context = true;
  /// Code each anchor once at its own level. Off codes every member of
  /// hat V^k at level k, so coarse anchors are re-coded at each finer level.
  bool anchor_forward = true;

  friend bool operator==(const PlanOptions&, const PlanOptions&) = default;
};

struct CodingUnit {
  std::uint32_t anchor = 0;
  std::int32_t parent = -1;  // unit id, -1 at the top level
};

struct PlanLevel {
  std::uint32_t level = 0;  // net index, 0 = finest
  std::uint32_t first_unit = 0;
  std::vector<CodingUnit> units;
};

struct CodingPlan {
  std::uint32_t levels = 1;
  std::vector<PlanLevel> order;           // coarse to fine
  std::vector<std::uint32_t> final_unit;  // per anchor: unit holding its reconstruction
  std::size_t unit_count = 0;
  std::size_t anchor_count = 0;

  const CodingUnit& unit(std::uint32_t id) const {
    for (const auto& l : order)
      if (id < l.first_unit + l.units.size()) return l.units[id - l.first_unit];
    fail(ErrorKind::Sequencing, "unit id out of range");
  }
};

inline CodingPlan make_plan(const LevelPartition& p, const PlanOptions& opt = {}) {
  CodingPlan plan;
  const std::size_t n = p.size();
  plan.anchor_count = n;
  plan.final_unit.assign(n, 0);
  if (!opt.context) {
    plan.levels = 1;
    PlanLevel l;
    for (std::uint32_t a = 0; a < n; ++a) l.units.push_back({a, -1});
    for (std::uint32_t a = 0; a < n; ++a) plan.final_unit[a] = a;
    plan.unit_count = n;
    plan.order.push_back(std::move(l));
    return plan;
  }

  plan.levels = p.levels;
  const std::uint32_t K = p.levels;
  // unit_at[k][a] for the copy of anchor a coded at level k (only filled where it exists)
  std::vector<std::vector<std::int32_t>> unit_at(K, std::vector<std::int32_t>(n, -1));
  std::uint32_t next = 0;
  for (std::uint32_t kk = 0; kk < K; ++kk) {
    const std::uint32_t k = K - 1 - kk;
    PlanLevel l;
    l.level = k;
    l.first_unit = next;
    for (std::uint32_t a = 0; a < n; ++a) {
      const bool member = opt.anchor_forward ? p.level_of[a] == k : p.level_of[a] >= k;
      if (!member) continue;
      std::int32_t parent = -1;
      if (k + 1 < K) {
        // Representative of a's voxel in hat V^{k+1}: itself if it survives there.
        const std::uint32_t rep = p.level_of[a] > k ? a : static_cast<std::uint32_t>(p.parent_of[a]);
        parent = opt.anchor_forward ? unit_at[p.level_of[rep]][rep] : unit_at[k + 1][rep];
        require(parent >= 0, ErrorKind::Sequencing, "parent of anchor " + std::to_string(a) + " is not coded before it");
      }
      unit_at[k][a] = static_cast<std::int32_t>(next++);
      l.units.push_back({a, parent});
      plan.final_unit[a] = static_cast<std::uint32_t>(unit_at[k][a]);
    }
    plan.order.push_back(std::move(l));
  }
  plan.unit_count = next;
  return plan;
}

}  // namespace ctxgs

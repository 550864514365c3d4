#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "ctxgs/partition.hpp"
#include "ctxgs/scene.hpp"

namespace ctxgs {

/// Cosine similarity between each anchor's feature and its parent's feature,
/// grouped by (child level, parent level).
struct SimilarityReport {
  static constexpr int kBins = 20;  // uniform over [-1, 1]

  struct Pair {
    std::uint32_t child_level = 0;
    std::uint32_t parent_level = 0;
    std::uint64_t count = 0;
    double sum = 0.0;
    std::vector<std::uint64_t> histogram = std::vector<std::uint64_t>(kBins, 0);

    double mean() const { return count ? sum / double(count) : 0.0; }
  };

  std::vector<Pair> pairs;  // sorted by (child_level, parent_level)
  std::uint64_t zero_norm_skipped = 0;

  std::uint64_t total_count() const {
    std::uint64_t n = 0;
    for (const auto& p : pairs) n += p.count;
    return n;
  }
  double overall_mean() const {
    double s = 0.0;
    for (const auto& p : pairs) s += p.sum;
    auto n = total_count();
    return n ? s / double(n) : 0.0;
  }
};

inline double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b, bool* zero_norm = nullptr) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * double(b[i]);
    na += double(a[i]) * double(a[i]);
    nb += double(b[i]) * double(b[i]);
  }
  if (na == 0.0 || nb == 0.0) {
    if (zero_norm) *zero_norm = true;
    return 0.0;
  }
  if (zero_norm) *zero_norm = false;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline SimilarityReport similarity_report(const AnchorScene& scene, const LevelPartition& partition) {
  require(partition.size() == scene.size(), ErrorKind::Input, "partition does not match scene");
  std::map<std::pair<std::uint32_t, std::uint32_t>, SimilarityReport::Pair> acc;
  SimilarityReport r;
  for (std::size_t a = 0; a < scene.size(); ++a) {
    auto parent = partition.parent_of[a];
    if (parent == kNoParent) continue;
    bool zero = false;
    double c = cosine_similarity(scene.anchors[a].feature, scene.anchors[parent].feature, &zero);
    if (zero) {
      ++r.zero_norm_skipped;
      continue;
    }
    auto key = std::pair<std::uint32_t, std::uint32_t>(partition.level_of[a], partition.level_of[parent]);
    auto& p = acc[key];
    p.child_level = key.first;
    p.parent_level = key.second;
    ++p.count;
    p.sum += c;
    int bin = std::min(SimilarityReport::kBins - 1, static_cast<int>((c + 1.0) * 0.5 * SimilarityReport::kBins));
    ++p.histogram[bin];
  }
  for (auto& [k, p] : acc) r.pairs.push_back(std::move(p));
  return r;
}

}  // namespace ctxgs

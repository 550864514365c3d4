#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <set>

#include "partition_oracle.hpp"
#include "test_support.hpp"

using namespace ctxgs;

namespace {

AnchorScene grid_scene(std::uint32_t side = 10) {
  SynthConfig c;
  c.kind = SynthKind::Grid;
  c.grid_side = side;
  c.dims = ctxgs::testing::small_dims();
  return synthesize(c);
}

std::vector<std::uint32_t> iota_members(std::size_t n) {
  std::vector<std::uint32_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = std::uint32_t(i);
  return m;
}

void expect_matches_oracle(const AnchorScene& s, const PartitionConfig& cfg) {
  const auto p = partition(s, cfg);
  const auto o = oracle::partition(positions_of(s), cfg.levels, cfg.tau, cfg.eps0);
  ASSERT_EQ(p.eps.size(), o.eps.size());
  for (std::size_t k = 0; k < o.eps.size(); ++k) {
    EXPECT_EQ(ctxgs::testing::bits_of(p.eps[k]), ctxgs::testing::bits_of(o.eps[k])) << "level " << k;
    EXPECT_EQ(p.kappa[k], o.kappa[k]) << "level " << k;
  }
  EXPECT_EQ(p.level_of, o.level);
  EXPECT_EQ(p.parent_of, o.parent);
}

// Counts at a fine grid of kappa values: the achievable counts near a target.
std::set<std::size_t> scanned_counts(const std::vector<std::uint32_t>& members, float eps0,
                                     const std::vector<Vec3>& pos, double kmin, double kmax) {
  std::set<std::size_t> out;
  for (double k = kmin; k <= kmax; k += 1e-3) out.insert(oracle::count(members, float(k * double(eps0)), pos));
  return out;
}

std::size_t distance_to_closest(const std::set<std::size_t>& counts, std::size_t target) {
  std::size_t best = SIZE_MAX;
  for (auto c : counts) best = std::min(best, c > target ? c - target : target - c);
  return best;
}

}  // namespace

TEST(QuantizePosition, Zero) {
  auto q = quantize_position({0, 0, 0}, 0.5f);
  EXPECT_EQ(q, (std::array<double, 3>{0, 0, 0}));
}

TEST(QuantizePosition, MatchesOracle) {
  auto q = quantize_position({0.26f, -0.26f, 1.0f}, 0.5f);
  EXPECT_EQ(q, (std::array<double, 3>{0.5, -0.5, 1.0}));
  auto k = oracle::key({0.26f, -0.26f, 1.0f}, 0.5f);
  EXPECT_EQ(k, (oracle::Key{1, -1, 2}));
}

TEST(QuantizePosition, TiesRoundAwayFromZero) {
  auto q = quantize_position({0.25f, -0.25f, 0.f}, 0.5f);
  EXPECT_EQ(q, (std::array<double, 3>{0.5, -0.5, 0.0}));
  EXPECT_EQ(voxel_key({0.75f, -0.75f, 1.25f}, 0.5f), (VoxelKey{2, -2, 3}));
}

TEST(QuantizePosition, KeysAgreeWithLongDoubleOracle) {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    Vec3 x{float(rng.uniform(-100, 100)), float(rng.uniform(-1, 1)), float(rng.uniform(-1e4, 1e4))};
    const float eps = float(std::exp(rng.uniform(-6, 3)));
    auto k = voxel_key(x, eps);
    ASSERT_EQ(oracle::key(x, eps), (oracle::Key{k[0], k[1], k[2]}));
  }
  // Exact half-way quotients.
  for (int i = -50; i <= 50; ++i) {
    const float eps = 0.125f;
    const Vec3 x{(float(i) + 0.5f) * eps, 0.f, 0.f};
    ASSERT_EQ(voxel_key(x, eps)[0], std::get<0>(oracle::key(x, eps)));
  }
}

TEST(BuildLevel, SingletonIsItsOwnRepresentative) {
  std::vector<Vec3> pos{{1.f, 2.f, 3.f}};
  std::vector<std::uint32_t> m{0};
  auto b = build_level(m, 1.f, pos);
  EXPECT_EQ(b.representatives, (std::vector<std::uint32_t>{0}));
}

TEST(BuildLevel, MinimumIndexWins) {
  std::vector<Vec3> pos(8, Vec3{50.f, 50.f, 50.f});
  for (std::uint32_t i = 0; i < 8; ++i) pos[i][0] += float(i) * 10.f;
  pos[3] = {0.1f, 0.f, 0.f};
  pos[7] = {0.2f, 0.f, 0.f};
  std::vector<std::uint32_t> m{7, 3};
  auto b = build_level(m, 1.f, pos);
  EXPECT_EQ(b.representatives, (std::vector<std::uint32_t>{3}));
  EXPECT_EQ(b.voxel_rep.at(VoxelKey{0, 0, 0}), 3u);
}

TEST(BuildLevel, GridCountMatchesDistinctKeys) {
  auto s = grid_scene();
  auto pos = positions_of(s);
  auto m = iota_members(s.size());
  auto b = build_level(m, 2.f, pos);
  std::set<oracle::Key> keys;
  for (const auto& p : pos) keys.insert(oracle::key(p, 2.f));
  EXPECT_EQ(b.representatives.size(), keys.size());
  EXPECT_EQ(b.representatives, oracle::reps(m, 2.f, pos));
}

TEST(SearchKappa, GridTarget200) {
  auto s = grid_scene();
  auto pos = positions_of(s);
  auto m = iota_members(s.size());
  auto r = search_kappa(m, 1.f, 200, pos);
  // Oracle: the achievable counts near 200 are 125 and 216 (5^3 and 6^3);
  // 216 is closer. Its plateau is kappa in (9 / 5.5, 2].
  auto counts = scanned_counts(m, 1.f, pos, 1.0, 3.0);
  EXPECT_TRUE(counts.count(216));
  EXPECT_EQ(distance_to_closest(counts, 200), 16u);
  EXPECT_EQ(r.count, 216u);
  EXPECT_GT(r.kappa, 9.0 / 5.5);
  EXPECT_LE(r.kappa, 2.0);
  EXPECT_FALSE(r.unreachable);
}

TEST(SearchKappa, SingleAnchorUnreachable) {
  std::vector<Vec3> pos{{0, 0, 0}};
  std::vector<std::uint32_t> m{0};
  auto r = search_kappa(m, 1.f, 5, pos);
  EXPECT_EQ(r.count, 1u);
  EXPECT_TRUE(r.unreachable);
  auto r1 = search_kappa(m, 1.f, 1, pos);
  EXPECT_EQ(r1.count, 1u);
  EXPECT_FALSE(r1.unreachable);
}

TEST(SearchKappa, CoincidentVoxelStopsAtFirstStep) {
  std::vector<Vec3> pos{{0.01f, 0, 0}, {0.02f, 0, 0}, {0.03f, 0, 0}};
  auto m = iota_members(3);
  auto r = search_kappa(m, 1.f, 1, pos, 1.0, 1e-6);
  EXPECT_EQ(r.count, 1u);
  EXPECT_EQ(r.kappa, 1.0 * (1.0 + 1e-6));
}

TEST(SearchKappa, MatchesOracleOnRandomMembers) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = ctxgs::testing::random_scene(500 + 100 * seed, ctxgs::testing::small_dims(), seed);
    auto pos = positions_of(s);
    auto m = iota_members(s.size());
    for (std::size_t target : {1ul, 7ul, s.size() / 5, s.size() / 2}) {
      auto r = search_kappa(m, 0.01f, target, pos);
      auto o = oracle::search(m, 0.01f, target, pos, 1.0);
      EXPECT_EQ(r.kappa, o.kappa) << "seed " << seed << " target " << target;
      EXPECT_EQ(r.count, o.count);
    }
  }
}

TEST(SearchKappa, GridCountsNonIncreasingInKappa) {
  auto s = grid_scene();
  auto pos = positions_of(s);
  auto m = iota_members(s.size());
  std::size_t prev = SIZE_MAX;
  for (double k = 1.0; k < 12.0; k += 0.01) {
    auto c = count_voxels(m, float(k), pos);
    EXPECT_LE(c, prev) << "kappa " << k;
    prev = c;
  }
}

TEST(Partition, SingleLevel) {
  auto s = ctxgs::testing::random_scene(100, ctxgs::testing::small_dims(), 1);
  PartitionConfig c;
  c.levels = 1;
  auto p = partition(s, c);
  EXPECT_EQ(p.levels, 1u);
  for (auto l : p.level_of) EXPECT_EQ(l, 0);
  for (auto q : p.parent_of) EXPECT_EQ(q, kNoParent);
  auto order = coding_order(p);
  ASSERT_EQ(order.size(), 1u);
  EXPECT_EQ(order[0], iota_members(100));
}

TEST(Partition, SingleAnchorSitsAtTop) {
  auto s = ctxgs::testing::random_scene(1, ctxgs::testing::small_dims(), 1);
  auto p = partition(s, PartitionConfig{});
  EXPECT_EQ(p.level_of[0], 2);
  EXPECT_EQ(p.parent_of[0], kNoParent);
  EXPECT_EQ(p.level_counts, (std::vector<std::uint32_t>{0, 0, 1}));
  // A target of one representative is always reachable.
  EXPECT_TRUE(p.warnings.empty());
  auto order = coding_order(p);
  EXPECT_EQ(order, (std::vector<std::vector<std::uint32_t>>{{0}, {}, {}}));
}

TEST(Partition, EmptyScene) {
  auto s = make_scene(ctxgs::testing::small_dims(), {});
  auto p = partition(s, PartitionConfig{});
  EXPECT_EQ(p.levels, 3u);
  EXPECT_EQ(p.level_counts, (std::vector<std::uint32_t>{0, 0, 0}));
  EXPECT_LT(p.eps[0], p.eps[1]);
  EXPECT_LT(p.eps[1], p.eps[2]);
}

TEST(Partition, GridTenCubed) {
  auto s = grid_scene();
  PartitionConfig c;
  c.eps0 = 1.f;
  auto p = partition(s, c);
  ASSERT_EQ(p.hat_counts.size(), 3u);
  EXPECT_EQ(p.hat_counts[0], 1000u);
  EXPECT_EQ(p.hat_counts[1], 216u);
  std::uint32_t sum = 0;
  for (auto n : p.level_counts) sum += n;
  EXPECT_EQ(sum, 1000u);

  // Each ratio is the closest achievable one found by a dense kappa scan.
  auto pos = positions_of(s);
  std::vector<std::uint32_t> hat = iota_members(1000);
  for (std::uint32_t k = 1; k < 3; ++k) {
    const std::size_t target = level_target(0.2, hat.size());
    auto counts = scanned_counts(hat, 1.f, pos, p.kappa[k - 1], 20.0);
    const std::size_t got = p.hat_counts[k];
    EXPECT_LE(got > target ? got - target : target - got, distance_to_closest(counts, target)) << "level " << k;
    hat = oracle::reps(hat, p.eps[k], pos);
    EXPECT_EQ(hat.size(), got);
  }
  // 216 survivors form a 6^3 lattice: the counts around the target 43 are 27 and 64.
  EXPECT_EQ(p.hat_counts[2], 27u);

  for (std::size_t a = 0; a < s.size(); ++a) {
    const auto k = p.level_of[a];
    if (k == 2) continue;
    const auto par = std::size_t(p.parent_of[a]);
    EXPECT_EQ(voxel_key(pos[a], p.eps[k + 1]), voxel_key(pos[par], p.eps[k + 1]));
  }
}

TEST(Partition, Invariants) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto s = seed % 2 ? ctxgs::testing::random_scene(1500, ctxgs::testing::small_dims(), seed)
                      : ctxgs::testing::correlated_scene(1500, ctxgs::testing::small_dims(), seed);
    PartitionConfig c = ctxgs::testing::small_partition(2 + std::uint32_t(seed % 3));
    auto p = partition(s, c);
    const std::uint32_t K = p.levels;
    EXPECT_EQ(p.kappa[0], 1.0);
    for (std::uint32_t k = 1; k < K; ++k) {
      EXPECT_GT(p.eps[k], p.eps[k - 1]);
      EXPECT_LE(p.hat_counts[k], p.hat_counts[k - 1]);
    }
    // Disjoint cover.
    std::vector<int> seen(s.size(), 0);
    for (const auto& lvl : coding_order(p)) {
      EXPECT_TRUE(std::is_sorted(lvl.begin(), lvl.end()));
      for (auto a : lvl) ++seen[a];
    }
    for (int v : seen) EXPECT_EQ(v, 1);
    // Parent consistency.
    auto pos = positions_of(s);
    for (std::size_t a = 0; a < s.size(); ++a) {
      const auto k = p.level_of[a];
      if (k + 1u == K) {
        EXPECT_EQ(p.parent_of[a], kNoParent);
        continue;
      }
      const auto par = p.parent_of[a];
      ASSERT_GE(par, 0);
      EXPECT_NE(std::size_t(par), a);
      EXPECT_GE(p.level_of[std::size_t(par)], k + 1);
      EXPECT_EQ(voxel_key(pos[a], p.eps[k + 1]), voxel_key(pos[std::size_t(par)], p.eps[k + 1]));
    }
    // Determinism.
    EXPECT_TRUE(p.same_structure(partition(s, c)));
  }
}

TEST(Partition, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const std::size_t n = 50 + seed * 250;
    auto s = seed % 3 == 0 ? ctxgs::testing::correlated_scene(n, ctxgs::testing::small_dims(), seed)
                           : ctxgs::testing::random_scene(n, ctxgs::testing::small_dims(), seed, 1.0 + double(seed));
    PartitionConfig c = ctxgs::testing::small_partition(1 + std::uint32_t(seed % 4));
    c.tau = 0.1 + 0.05 * double(seed % 5);
    expect_matches_oracle(s, c);
  }
  expect_matches_oracle(grid_scene(), [] {
    PartitionConfig c;
    c.eps0 = 1.f;
    return c;
  }());
}

TEST(Partition, CoincidentScaleStillStrictlyIncreasing) {
  // Anchors far apart relative to eps0: every level keeps all anchors until
  // kappa grows, and voxel sizes must still increase.
  std::vector<Anchor> anchors;
  auto dims = ctxgs::testing::small_dims();
  for (int i = 0; i < 4; ++i) {
    Anchor a;
    a.position = {float(i) * 1000.f, 0.f, 0.f};
    a.feature.assign(dims.feature_dim, 0.f);
    a.scaling.assign(dims.scaling_dim, 0.f);
    a.offsets.assign(dims.offset_values(), 0.f);
    anchors.push_back(a);
  }
  auto s = make_scene(dims, anchors);
  PartitionConfig c;
  c.levels = 4;
  auto p = partition(s, c);
  for (std::uint32_t k = 1; k < p.levels; ++k) EXPECT_GT(p.eps[k], p.eps[k - 1]);
  EXPECT_EQ(p.level_counts[3], 1u);
}

TEST(Partition, RejectsBadConfig) {
  auto s = ctxgs::testing::random_scene(10, ctxgs::testing::small_dims(), 1);
  PartitionConfig c;
  c.tau = 1.0;
  EXPECT_THROW(partition(s, c), Error);
  c = PartitionConfig{};
  c.levels = 0;
  EXPECT_THROW(partition(s, c), Error);
  c = PartitionConfig{};
  c.eps0 = 0.f;
  EXPECT_THROW(partition(s, c), Error);
}

TEST(Partition, FiveThousandAnchorsUnderOneSecond) {
  auto s = ctxgs::testing::random_scene(5000, ctxgs::testing::small_dims(), 99, 10.0);
  const auto t0 = std::chrono::steady_clock::now();
  auto p = partition(s, PartitionConfig{});
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(sec, 1.0);
  EXPECT_EQ(p.size(), 5000u);
}

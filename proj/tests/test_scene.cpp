#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "test_support.hpp"

using namespace ctxgs;
using ctxgs::testing::bits_of;
using ctxgs::testing::temp_path;

namespace {

Anchor zero_anchor(const SceneConfig& c, Vec3 pos) {
  Anchor a;
  a.position = pos;
  a.feature.assign(c.feature_dim, 0.f);
  a.scaling.assign(c.scaling_dim, 0.f);
  a.offsets.assign(c.offset_values(), 0.f);
  if (c.has_masks) a.mask.assign(c.offset_count, 1);
  return a;
}

// Minimal PLY writer independent of serialize_scene, so the parser is tested
// against bytes built by hand.
std::vector<std::uint8_t> hand_ply(const std::vector<std::string>& props, const std::vector<std::vector<float>>& rows) {
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\nelement vertex " << rows.size() << "\n";
  for (const auto& p : props) h << "property float " << p << "\n";
  h << "end_header\n";
  auto s = h.str();
  std::vector<std::uint8_t> out(s.begin(), s.end());
  for (const auto& r : rows)
    for (float v : r) {
      auto u = bits_of(v);
      for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(u >> (8 * i)));
    }
  return out;
}

std::vector<std::string> default_props(std::uint32_t df, std::uint32_t dl, std::uint32_t k) {
  std::vector<std::string> p{"x", "y", "z"};
  for (std::uint32_t i = 0; i < df; ++i) p.push_back("f_anchor_feat_" + std::to_string(i));
  for (std::uint32_t i = 0; i < dl; ++i) p.push_back("scale_" + std::to_string(i));
  for (std::uint32_t i = 0; i < 3 * k; ++i) p.push_back("f_offset_" + std::to_string(i));
  return p;
}

}  // namespace

TEST(LoadScene, SingleZeroPoint) {
  auto bytes = hand_ply(default_props(2, 3, 1), {std::vector<float>(3 + 2 + 3 + 3, 0.f)});
  auto s = parse_scene(bytes);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.config.feature_dim, 2u);
  EXPECT_EQ(s.config.scaling_dim, 3u);
  EXPECT_EQ(s.config.offset_count, 1u);
  EXPECT_FALSE(s.config.has_masks);
  for (int d = 0; d < 3; ++d) {
    EXPECT_EQ(s.bbox_min[d], 0.f);
    EXPECT_EQ(s.bbox_max[d], 0.f);
  }
}

TEST(LoadScene, ReordersCanonically) {
  std::vector<float> a(11, 0.f), b(11, 0.f);
  a[0] = 1.f;
  b[3] = 7.f;  // feature of the point at the origin
  auto s = parse_scene(hand_ply(default_props(2, 3, 1), {a, b}));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.anchors[0].position, (Vec3{0.f, 0.f, 0.f}));
  EXPECT_EQ(s.anchors[0].feature[0], 7.f);
  EXPECT_EQ(s.anchors[1].position, (Vec3{1.f, 0.f, 0.f}));
  EXPECT_EQ(s.bbox_max, (Vec3{1.f, 0.f, 0.f}));
}

TEST(LoadScene, NanNamesAnchorIndex) {
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 10; ++i) {
    std::vector<float> r(11, 0.f);
    r[0] = float(i);
    rows.push_back(r);
  }
  rows[7][4] = std::numeric_limits<float>::quiet_NaN();
  try {
    parse_scene(hand_ply(default_props(2, 3, 1), rows));
    FAIL() << "expected a validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
    EXPECT_NE(std::string(e.what()).find("anchor 7"), std::string::npos) << e.what();
  }
}

TEST(LoadScene, MissingPropertyIsNamed) {
  auto props = default_props(2, 3, 1);
  props[1] = "yy";
  try {
    parse_scene(hand_ply(props, {std::vector<float>(11, 0.f)}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Input);
    EXPECT_NE(std::string(e.what()).find("'y'"), std::string::npos) << e.what();
  }
}

TEST(LoadScene, PropertyMapAdaptsNames) {
  std::vector<std::string> props{"px", "py", "pz", "feat0", "feat1", "s0", "s1", "s2", "o0", "o1", "o2"};
  std::vector<float> row{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  PropertyNames names;
  names.set("x", "px");
  names.set("y", "py");
  names.set("z", "pz");
  names.set("feature", "feat");
  names.set("scaling", "s");
  names.set("offset", "o");
  auto s = parse_scene(hand_ply(props, {row}), names);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.anchors[0].feature, (std::vector<float>{4, 5}));
  EXPECT_EQ(s.anchors[0].offsets, (std::vector<float>{9, 10, 11}));
  EXPECT_THROW(names.set("colour", "c"), Error);
}

TEST(LoadScene, MissingFileIsInputError) {
  try {
    load_scene(temp_path("does_not_exist.ply"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Input);
  }
}

TEST(SaveScene, EmptySceneRoundTrips) {
  auto s = make_scene(SceneConfig{}, {});
  auto path = temp_path("empty.ply");
  save_scene(s, path);
  auto t = load_scene(path);
  EXPECT_TRUE(bit_equal(s, t));
}

TEST(SaveScene, RandomSceneRoundTripsBitExactly) {
  auto s = ctxgs::testing::random_scene(1000, SceneConfig{}, 42);
  // Signed zeros and subnormals must survive.
  s.anchors[3].feature[0] = -0.0f;
  s.anchors[4].feature[1] = std::numeric_limits<float>::denorm_min();
  auto path = temp_path("random.ply");
  save_scene(s, path);
  auto t = load_scene(path);
  EXPECT_TRUE(bit_equal(s, t));
  EXPECT_EQ(bits_of(t.anchors[3].feature[0]), 0x80000000u);
}

TEST(SaveScene, MasksPreserved) {
  auto s = ctxgs::testing::random_scene(50, ctxgs::testing::small_dims(true), 3);
  std::size_t zeros = 0;
  for (const auto& a : s.anchors) zeros += std::count(a.mask.begin(), a.mask.end(), 0);
  ASSERT_GT(zeros, 0u);
  auto t = parse_scene(serialize_scene(s));
  EXPECT_TRUE(t.config.has_masks);
  EXPECT_TRUE(bit_equal(s, t));
}

TEST(CanonicalOrder, AnyPermutationSortsIdentically) {
  auto s = ctxgs::testing::random_scene(200, ctxgs::testing::small_dims(), 5);
  // Add values that differ only in sign of zero.
  s.anchors.push_back(zero_anchor(s.config, {0.f, 0.f, 0.f}));
  s.anchors.push_back(zero_anchor(s.config, {-0.f, 0.f, 0.f}));
  Rng rng(9);
  std::vector<Vec3> ref;
  for (int trial = 0; trial < 20; ++trial) {
    auto anchors = s.anchors;
    for (std::size_t i = anchors.size(); i > 1; --i) std::swap(anchors[i - 1], anchors[rng.below(i)]);
    auto t = make_scene(s.config, anchors);
    std::vector<Vec3> pos;
    for (const auto& a : t.anchors) pos.push_back(a.position);
    if (trial == 0) ref = pos;
    ASSERT_EQ(pos.size(), ref.size());
    for (std::size_t i = 0; i < pos.size(); ++i) ASSERT_TRUE(same_bits(pos[i], ref[i]));
  }
  // Equal values fall back to bit patterns, so +0.0 sorts before -0.0.
  auto it = std::find_if(ref.begin(), ref.end(), [](const Vec3& p) { return p[0] == 0.f && p[1] == 0.f; });
  ASSERT_NE(it, ref.end());
  EXPECT_EQ(bits_of((*it)[0]), 0u);
  EXPECT_EQ(bits_of((*(it + 1))[0]), 0x80000000u);
}

TEST(CanonicalOrder, DuplicatePositionsRejected) {
  SceneConfig c = ctxgs::testing::small_dims();
  EXPECT_THROW(make_scene(c, {zero_anchor(c, {1, 2, 3}), zero_anchor(c, {1, 2, 3})}), Error);
}

TEST(Validation, DimensionMismatch) {
  SceneConfig c = ctxgs::testing::small_dims();
  auto a = zero_anchor(c, {0, 0, 0});
  a.feature.pop_back();
  EXPECT_THROW(make_scene(c, {a}), Error);
}

TEST(Spawn, ZeroOffsetsGiveAnchorPosition) {
  SceneConfig c{4, 3, 5, false};
  auto a = zero_anchor(c, {1.5f, -2.f, 3.f});
  a.scaling = {0.3f, 0.7f, 2.f};
  for (const auto& p : spawn_positions(a)) EXPECT_EQ(p, a.position);
}

TEST(Spawn, IdentityScaling) {
  SceneConfig c{1, 3, 1, false};
  auto a = zero_anchor(c, {0, 0, 0});
  a.scaling = {1, 1, 1};
  a.offsets = {1, 2, 3};
  EXPECT_EQ(spawn_positions(a)[0], (Vec3{1, 2, 3}));
}

TEST(Spawn, ElementwiseScaling) {
  SceneConfig c{1, 3, 1, false};
  auto a = zero_anchor(c, {1, 1, 1});
  a.scaling = {2.f, 0.5f, 1.f};
  a.offsets = {1, 2, 3};
  // Scalar oracle: x_d + O_d * l_d.
  const Vec3 want{1.f + 1.f * 2.f, 1.f + 2.f * 0.5f, 1.f + 3.f * 1.f};
  EXPECT_EQ(spawn_positions(a)[0], want);
  EXPECT_EQ(want, (Vec3{3, 2, 4}));
}

TEST(Spawn, TranslationEquivariant) {
  auto s = ctxgs::testing::random_scene(100, SceneConfig{}, 11);
  Rng rng(2);
  for (auto a : s.anchors) {
    const Vec3 t{float(rng.uniform(-8, 8)), float(rng.uniform(-8, 8)), float(rng.uniform(-8, 8))};
    auto before = spawn_positions(a);
    for (int d = 0; d < 3; ++d) a.position[d] += t[d];
    auto after = spawn_positions(a);
    for (std::size_t i = 0; i < before.size(); ++i)
      for (int d = 0; d < 3; ++d) EXPECT_NEAR(after[i][d], before[i][d] + t[d], 1e-4);
  }
}

TEST(Spawn, RejectsWrongScalingDim) {
  SceneConfig c{1, 6, 1, false};
  EXPECT_THROW(spawn_positions(zero_anchor(c, {0, 0, 0})), Error);
}

TEST(Similarity, SharedFeatureGivesOne) {
  auto s = ctxgs::testing::random_scene(300, ctxgs::testing::small_dims(), 4);
  for (auto& a : s.anchors) a.feature = s.anchors[0].feature;
  auto p = partition(s, ctxgs::testing::small_partition());
  auto r = similarity_report(s, p);
  ASSERT_GT(r.total_count(), 0u);
  for (const auto& pr : r.pairs) {
    EXPECT_NEAR(pr.mean(), 1.0, 1e-12);
    EXPECT_EQ(pr.histogram.back(), pr.count);
  }
}

TEST(Similarity, OrthogonalGivesZeroAndZeroNormSkipped) {
  EXPECT_NEAR(cosine_similarity({1, 0, 0}, {0, 5, 0}), 0.0, 1e-15);
  bool zero = false;
  cosine_similarity({0, 0, 0}, {1, 0, 0}, &zero);
  EXPECT_TRUE(zero);

  auto s = ctxgs::testing::random_scene(300, ctxgs::testing::small_dims(), 8);
  for (auto& a : s.anchors) a.feature.assign(8, 0.f);
  auto r = similarity_report(s, partition(s, ctxgs::testing::small_partition()));
  EXPECT_EQ(r.total_count(), 0u);
  EXPECT_GT(r.zero_norm_skipped, 0u);
}

TEST(Similarity, MeanMatchesBruteForce) {
  auto s = ctxgs::testing::random_scene(800, ctxgs::testing::small_dims(), 21);
  auto p = partition(s, ctxgs::testing::small_partition());
  auto r = similarity_report(s, p);
  // Oracle: plain loop over (child, parent) pairs.
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t a = 0; a < s.size(); ++a) {
    if (p.parent_of[a] < 0) continue;
    const auto& x = s.anchors[a].feature;
    const auto& y = s.anchors[std::size_t(p.parent_of[a])].feature;
    long double dot = 0, nx = 0, ny = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      dot += (long double)x[i] * y[i];
      nx += (long double)x[i] * x[i];
      ny += (long double)y[i] * y[i];
    }
    sum += double(dot / std::sqrt(nx * ny));
    ++n;
  }
  ASSERT_EQ(r.total_count(), n);
  EXPECT_NEAR(r.overall_mean(), sum / double(n), 1e-12);
  for (const auto& pr : r.pairs) {
    EXPECT_GT(pr.parent_level, pr.child_level);
    EXPECT_EQ(std::accumulate(pr.histogram.begin(), pr.histogram.end(), std::uint64_t(0)), pr.count);
  }
}

TEST(Synth, GridHasIntegerCoordinates) {
  SynthConfig c;
  c.kind = SynthKind::Grid;
  auto s = synthesize(c);
  ASSERT_EQ(s.size(), 1000u);
  for (const auto& a : s.anchors)
    for (float v : a.position) EXPECT_EQ(v, std::round(v));
}

TEST(Synth, CorrelatedMeetsCosineTarget) {
  SynthConfig c;
  c.seed = 1;
  c.partition.eps0 = 0.05f;
  auto s = synthesize(c);
  auto r = similarity_report(s, partition(s, c.partition));
  EXPECT_GE(r.overall_mean(), 0.9);
}

TEST(Synth, SameSeedSameBytes) {
  SynthConfig c;
  c.anchors = 300;
  c.seed = 77;
  c.dims.has_masks = true;
  EXPECT_EQ(serialize_scene(synthesize(c)), serialize_scene(synthesize(c)));
}

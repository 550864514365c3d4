#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ctxgs/ctxgs.hpp"

namespace ctxgs::testing {

inline std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ctxgs_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

inline SceneConfig small_dims(bool masks = false) { return {8, 3, 2, masks}; }

/// Uniform positions in [0, extent]^3 and normal attributes.
inline AnchorScene random_scene(std::size_t n, const SceneConfig& dims, std::uint64_t seed, double extent = 4.0) {
  SynthConfig c;
  c.kind = SynthKind::Iid;
  c.anchors = n;
  c.dims = dims;
  c.extent = extent;
  c.seed = seed;
  c.feature_scale = 2.0;
  if (n == 0) return make_scene(dims, {});
  return synthesize(c);
}

/// Correlated scene with a small partition, used by codec and trainer tests.
inline AnchorScene correlated_scene(std::size_t n, const SceneConfig& dims, std::uint64_t seed) {
  SynthConfig c;
  c.kind = SynthKind::Correlated;
  c.anchors = n;
  c.dims = dims;
  c.seed = seed;
  c.partition.eps0 = 0.05f;
  return synthesize(c);
}

inline PartitionConfig small_partition(std::uint32_t levels = 3) {
  PartitionConfig p;
  p.levels = levels;
  p.eps0 = 0.05f;
  return p;
}

inline std::uint32_t bits_of(float v) { return std::bit_cast<std::uint32_t>(v); }

}  // namespace ctxgs::testing

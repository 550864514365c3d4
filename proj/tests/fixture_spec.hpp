#pragma once

// Inputs behind the golden files. The generator and the tests both build
// from here, so a change shows up as a byte mismatch rather than drift.

#include <cstdint>
#include <vector>

#include "ctxgs/ctxgs.hpp"

namespace fixture {

using namespace ctxgs;

/// Symbol i is coded under a table of 1 + i % 17 entries with p_k ~ 1 / (1 + k^2).
inline void range_coder_input(std::vector<CdfTable>& tables, std::vector<std::uint32_t>& symbols) {
  for (int i = 0; i < 300; ++i) {
    std::vector<double> p(std::size_t(1 + i % 17));
    double sum = 0;
    for (std::size_t k = 0; k < p.size(); ++k) sum += (p[k] = 1.0 / double(1 + k * k));
    for (auto& v : p) v /= sum;
    tables.push_back(quantize_cdf(p));
    symbols.push_back(std::uint32_t((i * 7) % int(p.size())));
  }
}

inline std::vector<std::uint8_t> range_coder_bytes() {
  std::vector<CdfTable> tables;
  std::vector<std::uint32_t> symbols;
  range_coder_input(tables, symbols);
  return encode(symbols, tables).bytes;
}

inline AnchorScene small_scene() {
  SynthConfig c;
  c.kind = SynthKind::Correlated;
  c.anchors = 120;
  c.dims = {8, 3, 2, true};
  c.seed = 7;
  c.partition.eps0 = 0.5f;
  return synthesize(c);
}

inline PartitionConfig small_partition() {
  PartitionConfig p;
  p.levels = 3;
  p.eps0 = 0.5f;
  return p;
}

inline TrainConfig small_train() {
  TrainConfig t;
  t.iterations = 30;
  t.hidden = 8;
  t.h_c = 4;
  t.lr = 3e-3;
  t.seed = 7;
  return t;
}

}  // namespace fixture

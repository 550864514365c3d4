#pragma once

// Finite coding tables for the two symbol families.
//
// A table covers symbols [lo, hi] plus one escape entry at the end. Symbols
// outside the range are coded as the escape followed by the raw 16-bit value
// (s + 32768) with frequency 1, so any symbol in [-32768, 32767] is codable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ctxgs/entropy_models.hpp"
#include "ctxgs/range_coder.hpp"

namespace ctxgs {

inline constexpr std::int32_t kTableRadiusCap = 2047;
inline constexpr double kTailMass = 1e-9;

struct SymbolTable {
  std::int32_t lo = 0, hi = -1;
  CdfTable cdf;

  std::size_t escape() const { return std::size_t(hi - lo + 1); }
  bool in_range(std::int32_t s) const { return s >= lo && s <= hi; }

  /// Exact bit cost of `s` under the quantized table, including escapes.
  double bits(std::int32_t s) const {
    if (in_range(s)) return cdf.bits(std::size_t(s - lo));
    return cdf.bits(escape()) + double(kCdfBits);
  }
};

/// Table for symbols s of a value coded on the grid mu + s*delta under
/// N(mu, sigma). Bin masses do not depend on mu.
inline SymbolTable gaussian_table(double sigma, double delta) {
  const double ratio = sigma / delta;
  const double rmax = std::ceil(6.0 * ratio) + 1.0;
  const auto R = static_cast<std::int32_t>(std::min<double>(kTableRadiusCap, rmax));
  SymbolTable t;
  t.lo = -R;
  t.hi = R;
  std::vector<double> p(std::size_t(2 * R + 2));
  for (std::int32_t s = -R; s <= R; ++s) {
    // By symmetry evaluate on the non-positive side.
    const double a = -std::abs(double(s));
    p[std::size_t(s + R)] = math::normal_mass((a - 0.5) / ratio, (a + 0.5) / ratio);
  }
  p.back() = 2.0 * math::normal_cdf(-(double(R) + 0.5) / ratio);
  t.cdf = quantize_cdf(p);
  return t;
}

/// Table for one hyperprior channel: the symbol range grows outward from 0
/// until each tail holds less than kTailMass (or the radius cap is reached).
inline SymbolTable factorized_table(const FactorizedPrior& prior, std::uint32_t c) {
  SymbolTable t;
  std::int32_t lo = 0, hi = 0;
  while (lo > -kTableRadiusCap && prior.cdf(c, double(lo) - 0.5) >= kTailMass) --lo;
  while (hi < kTableRadiusCap && 1.0 - prior.cdf(c, double(hi) + 0.5) >= kTailMass) ++hi;
  t.lo = lo;
  t.hi = hi;
  std::vector<double> p(std::size_t(hi - lo + 2));
  for (std::int32_t s = lo; s <= hi; ++s)
    p[std::size_t(s - lo)] = factorized_bin_term(prior, c, double(s), nullptr, false).prob_raw;
  p.back() = math::sigmoid(prior.logit(c, double(lo) - 0.5)) + math::sigmoid(-prior.logit(c, double(hi) + 0.5));
  t.cdf = quantize_cdf(p);
  return t;
}

inline void encode_symbol(RangeEncoder& enc, const SymbolTable& t, std::int32_t s) {
  if (t.in_range(s)) {
    enc.encode(t.cdf, std::size_t(s - t.lo));
    return;
  }
  require(s >= kSymbolMin && s <= kSymbolMax, ErrorKind::Overflow, "symbol " + std::to_string(s) + " not codable");
  enc.encode(t.cdf, t.escape());
  enc.encode(static_cast<std::uint32_t>(s - kSymbolMin), 1);
}

inline std::int32_t decode_symbol(RangeDecoder& dec, const SymbolTable& t) {
  const std::size_t i = dec.decode(t.cdf);
  if (i != t.escape()) return t.lo + static_cast<std::int32_t>(i);
  const std::uint32_t raw = dec.peek();
  dec.decode_interval(raw, 1);
  const std::int32_t s = static_cast<std::int32_t>(raw) + kSymbolMin;
  if (t.in_range(s)) fail(ErrorKind::Data, "corrupt stream: escaped symbol inside table range");
  return s;
}

}  // namespace ctxgs

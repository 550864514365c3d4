#pragma once

// Carry-less 32-bit range coder (Subbotin style) over 16-bit cumulative
// frequency tables. Byte output depends only on the symbol/table sequence.
//
// Stream layout: the encoder emits one byte per renormalization shift and four
// flush bytes at the end; an empty symbol sequence produces an empty stream.
// The decoder consumes exactly the bytes the encoder produced, so reading past
// the end or leaving bytes unread both indicate corruption.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ctxgs/error.hpp"

namespace ctxgs {

inline constexpr unsigned kCdfBits = 16;
inline constexpr std::uint32_t kCdfTotal = 1u << kCdfBits;

/// Quantized cumulative frequencies: cdf[0] = 0, cdf[n] = 2^16 and every
/// symbol has a frequency of at least 1.
struct CdfTable {
  std::vector<std::uint32_t> cdf;

  std::size_t alphabet() const { return cdf.empty() ? 0 : cdf.size() - 1; }
  std::uint32_t freq(std::size_t s) const { return cdf[s + 1] - cdf[s]; }
  double bits(std::size_t s) const { return std::log2(double(kCdfTotal) / double(freq(s))); }
};

/// Largest-remainder rounding of `p * 2^16` with a floor of one count per
/// symbol. Inputs are renormalized by their sum, which must be within 1e-3 of 1.
inline CdfTable quantize_cdf(std::span<const double> probs) {
  const std::size_t n = probs.size();
  require(n >= 1, ErrorKind::Input, "quantize_cdf: empty alphabet");
  require(n <= kCdfTotal, ErrorKind::Input, "quantize_cdf: alphabet larger than 2^16");
  double sum = 0.0;
  for (double p : probs) {
    require(p >= 0.0 && std::isfinite(p), ErrorKind::Input, "quantize_cdf: negative or non-finite probability");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-3, ErrorKind::Input, "quantize_cdf: probabilities do not sum to 1");

  std::vector<std::uint32_t> count(n);
  std::vector<double> rem(n);
  std::int64_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double scaled = probs[i] / sum * double(kCdfTotal);
    double fl = std::floor(scaled);
    count[i] = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(fl));
    rem[i] = count[i] == 1 && fl < 1.0 ? 0.0 : scaled - fl;
    used += count[i];
  }
  std::int64_t diff = std::int64_t(kCdfTotal) - used;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (diff > 0) {
    // Hand out the shortfall by descending remainder, lower index first on ties.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t i = 0; diff > 0; i = (i + 1) % n, --diff) ++count[order[i]];
  } else if (diff < 0) {
    // Floors pushed the total over: take counts back from the largest symbols.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return count[a] > count[b]; });
    for (std::size_t i = 0; diff < 0; i = (i + 1) % n) {
      if (count[order[i]] > 1) {
        --count[order[i]];
        ++diff;
      }
    }
  }
  CdfTable t;
  t.cdf.resize(n + 1);
  t.cdf[0] = 0;
  for (std::size_t i = 0; i < n; ++i) t.cdf[i + 1] = t.cdf[i] + count[i];
  return t;
}

class RangeEncoder {
 public:
  /// Codes the interval [cum, cum + freq) out of 2^16.
  void encode(std::uint32_t cum, std::uint32_t freq) {
    range_ >>= kCdfBits;
    low_ += cum * range_;
    range_ *= freq;
    ++symbols_;
    while ((low_ ^ (low_ + range_)) < kTop || (range_ < kBot && ((range_ = (0u - low_) & (kBot - 1)), true))) {
      out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
      low_ <<= 8;
      range_ <<= 8;
    }
  }

  void encode(const CdfTable& t, std::size_t symbol) {
    if (symbol >= t.alphabet())
      fail(ErrorKind::Input, "range coder: symbol " + std::to_string(symbol) + " outside alphabet of " +
                                 std::to_string(t.alphabet()));
    encode(t.cdf[symbol], t.freq(symbol));
  }

  /// Flushes the coder state; returns the finished stream.
  std::vector<std::uint8_t> finish() {
    if (symbols_ > 0)
      for (int i = 0; i < 4; ++i) {
        out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
        low_ <<= 8;
      }
    low_ = 0;
    range_ = 0xFFFFFFFFu;
    symbols_ = 0;
    return std::move(out_);
  }

  std::size_t symbols() const { return symbols_; }

 private:
  static constexpr std::uint32_t kTop = 1u << 24;
  static constexpr std::uint32_t kBot = 1u << 16;
  std::uint32_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::size_t symbols_ = 0;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> in, std::string what = "range-coded stream")
      : in_(in), what_(std::move(what)) {
    if (!in_.empty())
      for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next();
  }

  /// Cumulative frequency of the next symbol (before decode_interval()).
  std::uint32_t peek() {
    if (in_.empty()) fail(ErrorKind::Data, what_ + ": truncated (no data)");
    range_ >>= kCdfBits;
    std::uint32_t f = (code_ - low_) / range_;
    if (f >= kCdfTotal) fail(ErrorKind::Data, what_ + ": corrupt (frequency out of range)");
    return f;
  }

  void decode_interval(std::uint32_t cum, std::uint32_t freq) {
    low_ += cum * range_;
    range_ *= freq;
    while ((low_ ^ (low_ + range_)) < kTop || (range_ < kBot && ((range_ = (0u - low_) & (kBot - 1)), true))) {
      code_ = (code_ << 8) | next();
      low_ <<= 8;
      range_ <<= 8;
    }
  }

  std::size_t decode(const CdfTable& t) {
    std::uint32_t f = peek();
    auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), f);
    std::size_t s = static_cast<std::size_t>(it - t.cdf.begin()) - 1;
    if (s >= t.alphabet()) fail(ErrorKind::Data, what_ + ": corrupt (symbol outside table)");
    decode_interval(t.cdf[s], t.freq(s));
    return s;
  }

  /// Every byte must have been consumed once the expected symbols are decoded.
  void finish() const {
    if (pos_ != in_.size())
      fail(ErrorKind::Data, what_ + ": " + std::to_string(in_.size() - pos_) + " trailing bytes");
  }

 private:
  std::uint8_t next() {
    if (pos_ >= in_.size()) fail(ErrorKind::Data, what_ + ": truncated");
    return in_[pos_++];
  }

  static constexpr std::uint32_t kTop = 1u << 24;
  static constexpr std::uint32_t kBot = 1u << 16;
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
  std::string what_;
};

struct EncodedStream {
  std::vector<std::uint8_t> bytes;
  std::size_t symbol_count = 0;
};

/// Codes symbols[i] under cdfs[i].
inline EncodedStream encode(std::span<const std::uint32_t> symbols, std::span<const CdfTable> cdfs) {
  require(symbols.size() == cdfs.size(), ErrorKind::Input, "encode: one table per symbol required");
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] >= cdfs[i].alphabet())
      fail(ErrorKind::Input, "encode: symbol " + std::to_string(symbols[i]) + " at index " + std::to_string(i) +
                                 " outside its alphabet");
    enc.encode(cdfs[i], symbols[i]);
  }
  return {enc.finish(), symbols.size()};
}

inline std::vector<std::uint32_t> decode(const EncodedStream& stream, std::span<const CdfTable> cdfs) {
  require(stream.symbol_count == cdfs.size(), ErrorKind::Input, "decode: one table per symbol required");
  std::vector<std::uint32_t> out;
  out.reserve(cdfs.size());
  if (cdfs.empty()) {
    if (!stream.bytes.empty()) fail(ErrorKind::Data, "decode: trailing bytes in empty stream");
    return out;
  }
  RangeDecoder dec(stream.bytes);
  for (const auto& t : cdfs) out.push_back(static_cast<std::uint32_t>(dec.decode(t)));
  dec.finish();
  return out;
}

}  // namespace ctxgs

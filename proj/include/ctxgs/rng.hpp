#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ctxgs {

/// Seeded generator with platform-independent draws. std::mt19937_64 output
/// is fully specified by the standard; the distribution adaptors are not, so
/// the conversions are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform on [-1/2, 1/2), the quantization-noise proxy.
  double centered() { return uniform() - 0.5; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next() { return eng_(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n ? static_cast<std::uint64_t>(uniform() * double(n)) % n : 0; }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ctxgs

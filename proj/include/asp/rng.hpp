#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace asp {

/// Deterministic random source. All transforms (bounded integers, uniform
/// reals, normals) are implemented here on top of std::mt19937_64 rather than
/// through std::*_distribution, whose output is implementation-defined; this
/// keeps index streams and generated instances reproducible across standard
/// libraries. Normal variates use the Marsaglia polar method.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, n), rejection-sampled.
  Eigen::Index uniform_index(Eigen::Index n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return static_cast<Eigen::Index>(v % un);
  }

  /// Standard normal variate (Marsaglia polar, one spare cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

  /// Counter-based seed schedule (splitmix64). Independent streams for
  /// parallel trials are derived from a base seed and a stream index, never
  /// from shared generator state.
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + (stream + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  Rng child(std::uint64_t stream) const {
    return Rng(derive_seed(seed_, stream));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace asp

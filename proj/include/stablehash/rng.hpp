#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "stablehash/bits.hpp"

namespace stablehash {

/// Source of random bits for XOR-string generation. The production
/// implementation draws from the operating system's CSPRNG; the seeded
/// implementation exists for reproducible tests only and must be enabled
/// explicitly.
class BitSource {
public:
  virtual ~BitSource() = default;
  virtual void fill(std::uint8_t* out, std::size_t n) = 0;

  BitString bits(std::size_t nbits);
};

/// Cryptographically secure randomness (OpenSSL RAND_bytes).
class SecureBitSource : public BitSource {
public:
  void fill(std::uint8_t* out, std::size_t n) override;
};

/// Deterministic bit source for test mode. Not suitable for production
/// XOR strings.
class SeededBitSource : public BitSource {
public:
  explicit SeededBitSource(std::uint64_t seed) : engine_(seed) {}
  void fill(std::uint8_t* out, std::size_t n) override;

private:
  std::mt19937_64 engine_;
};

/// Stateless 64-bit mix, used to derive independent per-record seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic scalar RNG with explicit distributions so that output is
/// identical across platforms and standard-library versions.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] (inclusive), by rejection sampling.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stablehash

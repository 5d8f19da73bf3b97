#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "stablehash/bits.hpp"

namespace stablehash {

/// A 512-bit SHA3-512 digest. The only biometric-derived value that is
/// ever persisted.
struct Digest {
  static constexpr std::size_t kBytes = 64;
  static constexpr std::size_t kBits = 512;

  std::array<std::uint8_t, kBytes> bytes{};

  /// Lowercase hexadecimal, 128 characters.
  std::string hex() const;
  static Digest from_hex(const std::string& hex);

  std::size_t hamming(const Digest& other) const;
  /// Hamming distance divided by 512, in [0, 1].
  double normalized_distance(const Digest& other) const {
    return static_cast<double>(hamming(other)) / static_cast<double>(kBits);
  }

  bool bit(std::size_t i) const { return (bytes[i / 8] >> (7 - i % 8)) & 1; }

  bool operator==(const Digest& other) const { return bytes == other.bytes; }
  bool operator!=(const Digest& other) const { return !(*this == other); }
  bool operator<(const Digest& other) const { return bytes < other.bytes; }
};

/// SHA3-512 of a byte buffer.
Digest sha3_512(std::span<const std::uint8_t> data);
Digest sha3_512(const std::string& data);

}  // namespace stablehash

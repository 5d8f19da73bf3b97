#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stablehash/errors.hpp"

namespace stablehash {

/// Fixed-length binary string. Bit 0 is the most significant bit of the
/// first packed byte (MSB-first, big-endian byte order), which is the
/// canonical serialization used before hashing and in hex encodings.
class BitString {
public:
  BitString() = default;
  explicit BitString(std::size_t n) : bits_(n, 0) {}

  static BitString from_bits(std::vector<std::uint8_t> bits);
  /// Parses a lowercase/uppercase hex string into exactly `nbits` bits.
  /// Trailing pad bits in the last nibble must be zero.
  static BitString from_hex(const std::string& hex, std::size_t nbits);
  static BitString concat(const BitString& a, const BitString& b);

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }

  std::uint8_t bit(std::size_t i) const { return bits_[i]; }
  void set_bit(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  void flip_bit(std::size_t i) { bits_[i] ^= 1; }

  BitString slice(std::size_t start, std::size_t len) const;

  BitString operator^(const BitString& other) const;
  bool operator==(const BitString& other) const { return bits_ == other.bits_; }
  bool operator!=(const BitString& other) const { return !(*this == other); }
  bool operator<(const BitString& other) const { return bits_ < other.bits_; }

  std::size_t hamming(const BitString& other) const;

  /// MSB-first packing, zero-padded to a whole byte count.
  std::vector<std::uint8_t> packed() const;
  /// Lowercase hex of the packed bytes.
  std::string hex() const;

private:
  std::vector<std::uint8_t> bits_;  // one value in {0,1} per bit
};

}  // namespace stablehash

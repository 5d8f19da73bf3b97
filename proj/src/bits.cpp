#include "stablehash/bits.hpp"

#include <bit>

namespace stablehash {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

constexpr char kHexDigits[] = "0123456789abcdef";

}  // namespace

BitString BitString::from_bits(std::vector<std::uint8_t> bits) {
  for (auto& b : bits) {
    if (b > 1) throw InputError("bit values must be 0 or 1");
  }
  BitString s;
  s.bits_ = std::move(bits);
  return s;
}

BitString BitString::from_hex(const std::string& hex, std::size_t nbits) {
  const std::size_t bytes = (nbits + 7) / 8;
  if (hex.size() != bytes * 2) {
    throw InputError("hex string has " + std::to_string(hex.size()) +
                     " chars, expected " + std::to_string(bytes * 2) +
                     " for " + std::to_string(nbits) + " bits");
  }
  BitString s(nbits);
  for (std::size_t i = 0; i < bytes; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw InputError("invalid hex character");
    const std::uint8_t byte = static_cast<std::uint8_t>((hi << 4) | lo);
    for (int k = 0; k < 8; ++k) {
      const std::size_t pos = i * 8 + static_cast<std::size_t>(k);
      const bool v = (byte >> (7 - k)) & 1;
      if (pos < nbits) {
        s.bits_[pos] = v ? 1 : 0;
      } else if (v) {
        throw InputError("nonzero padding bits in hex string");
      }
    }
  }
  return s;
}

BitString BitString::concat(const BitString& a, const BitString& b) {
  BitString out;
  out.bits_.reserve(a.size() + b.size());
  out.bits_.insert(out.bits_.end(), a.bits_.begin(), a.bits_.end());
  out.bits_.insert(out.bits_.end(), b.bits_.begin(), b.bits_.end());
  return out;
}

BitString BitString::slice(std::size_t start, std::size_t len) const {
  if (start + len > bits_.size()) throw InputError("bit slice out of range");
  BitString out(len);
  for (std::size_t i = 0; i < len; ++i) out.bits_[i] = bits_[start + i];
  return out;
}

BitString BitString::operator^(const BitString& other) const {
  if (size() != other.size()) {
    throw InputError("XOR of bit strings with different lengths (" +
                     std::to_string(size()) + " vs " +
                     std::to_string(other.size()) + ")");
  }
  BitString out(size());
  for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = bits_[i] ^ other.bits_[i];
  return out;
}

std::size_t BitString::hamming(const BitString& other) const {
  if (size() != other.size()) {
    throw InputError("Hamming distance of bit strings with different lengths");
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < size(); ++i) d += bits_[i] != other.bits_[i];
  return d;
}

std::vector<std::uint8_t> BitString::packed() const {
  std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
  }
  return out;
}

std::string BitString::hex() const {
  const auto bytes = packed();
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0xf]);
  }
  return out;
}

}  // namespace stablehash

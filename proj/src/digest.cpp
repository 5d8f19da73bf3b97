#include "stablehash/digest.hpp"

#include <openssl/evp.h>

#include <bit>

#include "stablehash/errors.hpp"

namespace stablehash {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

std::string Digest::hex() const {
  std::string out;
  out.reserve(2 * kBytes);
  for (auto b : bytes) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0xf]);
  }
  return out;
}

Digest Digest::from_hex(const std::string& hex) {
  if (hex.size() != 2 * kBytes) {
    throw InputError("digest hex must be 128 characters, got " +
                     std::to_string(hex.size()));
  }
  Digest d;
  for (std::size_t i = 0; i < kBytes; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw InputError("invalid hex character in digest");
    d.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return d;
}

std::size_t Digest::hamming(const Digest& other) const {
  std::size_t d = 0;
  for (std::size_t i = 0; i < kBytes; ++i) {
    d += static_cast<std::size_t>(
        std::popcount(static_cast<unsigned>(bytes[i] ^ other.bytes[i])));
  }
  return d;
}

Digest sha3_512(std::span<const std::uint8_t> data) {
  Digest out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.bytes.data(), &len,
                 EVP_sha3_512(), nullptr) != 1 ||
      len != Digest::kBytes) {
    throw Error("SHA3-512 computation failed");
  }
  return out;
}

Digest sha3_512(const std::string& data) {
  return sha3_512(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

}  // namespace stablehash

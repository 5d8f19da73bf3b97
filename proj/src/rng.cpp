#include "stablehash/rng.hpp"

#include <openssl/rand.h>

#include "stablehash/errors.hpp"

namespace stablehash {

BitString BitSource::bits(std::size_t nbits) {
  std::vector<std::uint8_t> bytes((nbits + 7) / 8);
  fill(bytes.data(), bytes.size());
  BitString out(nbits);
  for (std::size_t i = 0; i < nbits; ++i) {
    out.set_bit(i, (bytes[i / 8] >> (7 - i % 8)) & 1);
  }
  return out;
}

void SecureBitSource::fill(std::uint8_t* out, std::size_t n) {
  if (RAND_bytes(out, static_cast<int>(n)) != 1) {
    throw Error("secure random source unavailable");
  }
}

void SeededBitSource::fill(std::uint8_t* out, std::size_t n) {
  std::size_t i = 0;
  while (i < n) {
    std::uint64_t w = engine_();
    for (int k = 0; k < 8 && i < n; ++k, ++i) {
      out[i] = static_cast<std::uint8_t>(w & 0xff);
      w >>= 8;
    }
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw InputError("uniform_int: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());  // full range
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace stablehash

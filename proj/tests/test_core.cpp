#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "stablehash/bits.hpp"
#include "stablehash/digest.hpp"
#include "stablehash/image.hpp"
#include "stablehash/rng.hpp"

using namespace stablehash;

TEST_CASE("bit strings pack MSB-first into whole bytes") {
  BitString s(12);
  s.set_bit(0, true);   // 0x80 in byte 0
  s.set_bit(7, true);   // 0x01 in byte 0
  s.set_bit(8, true);   // 0x80 in byte 1
  const auto bytes = s.packed();
  REQUIRE(bytes.size() == 2);
  CHECK(bytes[0] == 0x81);
  CHECK(bytes[1] == 0x80);
  CHECK(s.hex() == "8180");
}

TEST_CASE("bit string hex round trip and padding validation") {
  BitString s(16);
  for (std::size_t i = 0; i < 16; i += 3) s.set_bit(i, true);
  CHECK(BitString::from_hex(s.hex(), 16) == s);
  CHECK_THROWS_AS(BitString::from_hex("ff", 4), InputError);  // pad bits set
  CHECK_THROWS_AS(BitString::from_hex("f", 8), InputError);   // wrong length
  CHECK_THROWS_AS(BitString::from_hex("zz", 8), InputError);
}

TEST_CASE("xor requires equal lengths and is an involution") {
  SeededBitSource src(7);
  const auto a = src.bits(64);
  const auto b = src.bits(64);
  CHECK(((a ^ b) ^ b) == a);
  CHECK_THROWS_AS((void)(a ^ src.bits(32)), InputError);
}

TEST_CASE("hamming distance counts differing bits") {
  BitString a(8), b(8);
  b.set_bit(1, true);
  b.set_bit(6, true);
  CHECK(a.hamming(b) == 2);
  CHECK(a.hamming(a) == 0);
}

TEST_CASE("sha3-512 known answer vectors") {
  CHECK(sha3_512(std::string("")).hex() ==
        "a69f73cca23a9ac5c8b567dc185a756e97c982164fe25859e0d1dcc1475c80a6"
        "15b2123af1f5f94c11e3e9402c3ac558f500199d95b6d3e301758586281dcd26");
  CHECK(sha3_512(std::string("abc")).hex() ==
        "b751850b1a57168a5693cd924b6b096e08f621827444f70d884f5d0240d2712e"
        "10e116e9192af3c91a7ec57647e3934057340b4cf408d5a56592f8274eec53f0");
  CHECK(sha3_512(std::string(
            "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")).hex() ==
        "04a371e84ecfb5b8b77cb48610fca8182dd457ce6f326a0fd3d7ec2f1e91636d"
        "ee691fbe0c985302ba1b0d8dc78c086346b533b49c030d99a27daf1139d6e75e");
}

TEST_CASE("digest hex round trip and length checks") {
  const Digest d = sha3_512(std::string("x"));
  CHECK(Digest::from_hex(d.hex()) == d);
  CHECK(d.hex().size() == 128);
  CHECK_THROWS_AS(Digest::from_hex(d.hex().substr(0, 127)), InputError);
  CHECK(d.hamming(d) == 0);
}

TEST_CASE("seeded rng reproduces bit streams; secure source varies") {
  SeededBitSource a(42), b(42), c(43);
  CHECK(a.bits(96) == b.bits(96));
  CHECK(a.bits(96) != c.bits(96));
  SecureBitSource sec;
  std::set<std::string> seen;
  for (int i = 0; i < 100; ++i) seen.insert(sec.bits(96).hex());
  CHECK(seen.size() == 100);
}

TEST_CASE("scalar rng determinism, uniform range, normal moments") {
  Rng r1(5), r2(5);
  for (int i = 0; i < 100; ++i) {
    CHECK(r1.uniform() == r2.uniform());
  }
  Rng r(11);
  double mean = 0, var = 0;
  const int n = 20000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = r.normal();
  for (double x : xs) mean += x;
  mean /= n;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= n;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.uniform_int(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
  }
}

TEST_CASE("bilinear resize is identity at the same shape and interpolates") {
  Image img(2, 2);
  img << 0.0, 1.0, 1.0, 0.0;
  CHECK(resize_bilinear(img, 2, 2) == img);
  const Image up = resize_bilinear(img, 3, 3);
  CHECK(up(0, 0) == doctest::Approx(0.0));
  CHECK(up(1, 1) == doctest::Approx(0.5));
  CHECK(up(2, 2) == doctest::Approx(0.0));
}

TEST_CASE("crop bounds are validated") {
  Image img = Image::Zero(4, 4);
  CHECK(crop(img, 1, 1, 2, 2).rows() == 2);
  CHECK_THROWS_AS(crop(img, 3, 3, 2, 2), InputError);
}

TEST_CASE("pgm round trip and luminance conversion") {
  Image img(3, 5);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 5; ++c) img(r, c) = (r * 5 + c) / 14.0;
  }
  const std::string path = "/tmp/stablehash_test_img.pgm";
  write_pgm(path, img);
  const Image back = read_image(path);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 5);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 5; ++c) {
      CHECK(back(r, c) == doctest::Approx(img(r, c)).epsilon(0.01));
    }
  }
  // Pure green pixel through the luminance weights.
  std::vector<std::uint8_t> rgb = {0, 255, 0};
  const Image g = luminance(rgb, 1, 1);
  CHECK(g(0, 0) == doctest::Approx(0.587).epsilon(0.001));
}

TEST_CASE("png round trip") {
  Image img(6, 4);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 4; ++c) img(r, c) = ((r + c) % 2) ? 1.0 : 0.25;
  }
  const std::string path = "/tmp/stablehash_test_img.png";
  write_png(path, img);
  const Image back = read_image(path);
  REQUIRE(back.rows() == 6);
  REQUIRE(back.cols() == 4);
  CHECK(back(0, 1) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(back(0, 0) == doctest::Approx(0.25).epsilon(0.01));
}

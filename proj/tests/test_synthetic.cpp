#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "stablehash/image.hpp"
#include "stablehash/synthetic.hpp"

using namespace stablehash;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.classes = 6;
  spec.samples_per_class = 8;
  spec.height = 16;
  spec.width = 16;
  spec.seed = 3;
  return spec;
}

}  // namespace

TEST_CASE("zero noise reproduces class centers exactly") {
  SyntheticSpec spec = small_spec();
  spec.noise = NoiseModel{0.0, 0.0, 0, 0, 0.0};
  const auto ds = generate(spec);
  REQUIRE(ds.size() == 48);
  for (const auto& rec : ds.records()) {
    const Image center = synthetic_center(spec.seed, rec.sample.label, 16, 16);
    CHECK((rec.sample.pixels - center).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("generation is deterministic under the seed") {
  const auto a = generate(small_spec());
  const auto b = generate(small_spec());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.records()[i].sample.pixels == b.records()[i].sample.pixels);
    CHECK(a.records()[i].user_id == b.records()[i].user_id);
  }
  SyntheticSpec other = small_spec();
  other.seed = 4;
  const auto c = generate(other);
  CHECK(a.records()[0].sample.pixels != c.records()[0].sample.pixels);
}

TEST_CASE("pixels stay in [0,1] and classes are separable") {
  SyntheticSpec spec = small_spec();
  spec.classes = 10;
  spec.samples_per_class = 12;
  const auto ds = generate(spec);
  double intra = 0, inter = 0;
  int intra_n = 0, inter_n = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ds.records()[i].sample.validate();  // throws when outside [0,1]
    for (std::size_t j = i + 1; j < ds.size(); ++j) {
      const double d = (ds.records()[i].sample.pixels -
                        ds.records()[j].sample.pixels)
                           .norm();
      if (ds.records()[i].sample.label == ds.records()[j].sample.label) {
        intra += d;
        ++intra_n;
      } else {
        inter += d;
        ++inter_n;
      }
    }
  }
  CHECK(intra / intra_n < inter / inter_n);
}

TEST_CASE("experiment layout produces disjoint splits with shared labels") {
  ExperimentSpec spec;
  spec.base = small_spec();
  spec.test_per_class = 3;
  spec.unknown_classes = 4;
  spec.unknown_samples_per_class = 5;
  const auto ds = generate_experiment(spec);
  CHECK(ds.class_count() == 6);
  CHECK(ds.by_split(Split::kTrain).size() == 6 * 8);
  CHECK(ds.by_split(Split::kTest).size() == 6 * 3);
  CHECK(ds.by_split(Split::kUnknown).size() == 4 * 5);
  for (const auto* r : ds.by_split(Split::kUnknown)) {
    CHECK(r->sample.label == -1);
    CHECK(ds.label_map().count(r->user_id) == 0);
  }
}

TEST_CASE("manifest ingestion loads, resizes and splits records") {
  const std::string dir = "/tmp/stablehash_manifest_test";
  std::filesystem::create_directories(dir);
  Image img(10, 12);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 12; ++c) img(r, c) = (r + c) / 21.0;
  }
  write_pgm(dir + "/a.pgm", img);
  write_pgm(dir + "/b.pgm", Image::Constant(6, 6, 0.5));
  write_png(dir + "/c.png", Image::Constant(8, 8, 0.25));
  {
    std::ofstream m(dir + "/manifest.tsv");
    m << "stablehash-manifest 1\n";
    m << "a.pgm\tuserA\ttrain\n";
    m << "b.pgm\tuserA\ttest\n";
    m << "c.png\tuserB\tunknown\n";
  }
  const auto ds = ingest(dir + "/manifest.tsv", 8, 8);
  REQUIRE(ds.size() == 3);
  CHECK(ds.records()[0].sample.pixels.rows() == 8);
  CHECK(ds.records()[0].sample.pixels.cols() == 8);
  CHECK(ds.records()[0].split == Split::kTrain);
  CHECK(ds.records()[2].split == Split::kUnknown);
  CHECK(ds.class_count() == 1);

  // Missing file names the record index.
  {
    std::ofstream m(dir + "/bad.tsv");
    m << "stablehash-manifest 1\n";
    m << "a.pgm\tuserA\ttrain\n";
    m << "missing.pgm\tuserA\ttrain\n";
  }
  try {
    ingest(dir + "/bad.tsv", 8, 8);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("record 2") != std::string::npos);
  }

  // Unknown split tag is rejected.
  {
    std::ofstream m(dir + "/badsplit.tsv");
    m << "stablehash-manifest 1\n";
    m << "a.pgm\tuserA\tvalidation\n";
  }
  CHECK_THROWS_AS(ingest(dir + "/badsplit.tsv", 8, 8), IoError);

  // Missing header is rejected.
  {
    std::ofstream m(dir + "/nohdr.tsv");
    m << "a.pgm\tuserA\ttrain\n";
  }
  CHECK_THROWS_AS(ingest(dir + "/nohdr.tsv", 8, 8), IoError);
}

TEST_CASE("rgb inputs are collapsed to one luminance channel") {
  const std::string dir = "/tmp/stablehash_manifest_test";
  std::filesystem::create_directories(dir);
  // A P3 (ascii RGB) file with a single pure red pixel.
  {
    std::ofstream p(dir + "/red.ppm");
    p << "P3\n1 1\n255\n255 0 0\n";
  }
  {
    std::ofstream m(dir + "/rgb.tsv");
    m << "stablehash-manifest 1\n";
    m << "red.ppm\tuserR\ttrain\n";
  }
  const auto ds = ingest(dir + "/rgb.tsv", 1, 1);
  REQUIRE(ds.size() == 1);
  CHECK(ds.records()[0].sample.pixels(0, 0) == doctest::Approx(0.299).epsilon(0.01));
}

TEST_CASE("invalid specs are rejected") {
  SyntheticSpec spec = small_spec();
  spec.classes = 1;
  CHECK_THROWS_AS(generate(spec), InputError);
  spec = small_spec();
  spec.samples_per_class = 1;
  CHECK_THROWS_AS(generate(spec), InputError);
  spec = small_spec();
  spec.noise.gaussian_sigma = -0.1;
  CHECK_THROWS_AS(generate(spec), InputError);
}

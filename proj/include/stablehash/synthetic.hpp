#pragma once

#include <cstdint>
#include <string>

#include "stablehash/types.hpp"

namespace stablehash {

/// Per-sample perturbations applied on top of a class center. All
/// parameters non-negative; zeros give exact copies of the center.
struct NoiseModel {
  double gaussian_sigma = 0.06;
  double occlusion_rate = 0.20;  // probability a sample gets one occluded patch
  int occlusion_size = 5;        // square patch side, pixels
  int shift_range = 3;           // max |dx|, |dy| translation, pixels
  double illumination_range = 0.12;  // multiplicative gain in [1-r, 1+r]

  void validate() const;
};

/// Desk-scale synthetic dataset: every sample is a noisy copy of a smooth
/// random class center.
struct SyntheticSpec {
  int classes = 20;
  int samples_per_class = 30;
  int height = 24;
  int width = 24;
  NoiseModel noise;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Smooth low-frequency random field in roughly [0.15, 0.85]; the class
/// center for class `index` under `seed`. Reproducible from (seed, index)
/// alone.
Image synthetic_center(std::uint64_t seed, int index, int height, int width);

class Rng;

/// One noisy view of an image: translation, illumination gain, additive
/// Gaussian noise and an optional occluded patch, clamped to [0,1]. Also
/// used for train-time augmentation.
Image perturb_image(const Image& base, const NoiseModel& noise, Rng& rng);

/// Generates classes*samples_per_class train-split records with user ids
/// "u000", "u001", ... Deterministic under spec.seed and parallel-safe
/// per record.
Dataset generate(const SyntheticSpec& spec);

/// Enrollment-style experiment layout: enrolled classes with train/test
/// samples plus disjoint unknown (impostor) classes. Enrolled class
/// centers use `spec.seed`; unknown centers are drawn from the same
/// stream after the enrolled ones.
struct ExperimentSpec {
  SyntheticSpec base;              // classes = enrolled class count
  int test_per_class = 10;
  int unknown_classes = 20;
  int unknown_samples_per_class = 20;

  void validate() const;
};

Dataset generate_experiment(const ExperimentSpec& spec);

/// Loads a dataset manifest: a header line "stablehash-manifest 1", then
/// one record per line: <path>\t<user_id>\t<split>. Images are converted
/// to grayscale, resized to (rows, cols) and scaled to [0,1].
Dataset ingest(const std::string& manifest_path, int rows, int cols);

}  // namespace stablehash

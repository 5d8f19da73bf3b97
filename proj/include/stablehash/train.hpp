#pragma once

#include <cstdint>
#include <vector>

#include "stablehash/model.hpp"
#include "stablehash/synthetic.hpp"
#include "stablehash/types.hpp"

namespace stablehash {

/// Which loss terms participate in training. The class-wise term is
/// always on.
struct LossCombo {
  bool regression = true;
  bool quantization = true;

  static LossCombo full() { return {true, true}; }
  static LossCombo class_wise_only() { return {false, false}; }
  static LossCombo class_wise_quant() { return {false, true}; }
  std::string name() const;
};

struct TrainConfig {
  int epochs = 150;
  int batch_size = 128;
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// One-step learning-rate decay: lr is multiplied by decay_factor after
  /// decay_at * epochs epochs. factor 1 disables the decay.
  double decay_factor = 0.2;
  double decay_at = 0.7;
  std::uint64_t seed = 1;
  LossCombo losses;
  int probe_every = 25;  // epochs between stable-code statistics probes
  /// Train-time augmentation: every epoch each sample is re-perturbed
  /// with a fresh noise draw (seeded). Disabled when augment is false.
  bool augment = true;
  NoiseModel augment_noise{0.03, 0.15, 4, 2, 0.08};
};

struct EpochStats {
  int epoch = 0;
  double class_wise = 0;
  double regression = 0;
  double quantization = 0;
  double total = 0;
};

/// Collision statistics of the current codes over a record set:
/// stability  = fraction of samples whose code equals their user's modal code;
/// distinctness = fraction of users whose modal code is unique among users.
struct CodeStats {
  double stability = 0;
  double distinctness = 0;
  int users = 0;
  int samples = 0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  std::vector<std::pair<int, CodeStats>> probes;
  CodeStats final_stats;
};

/// Joint mini-batch gradient descent (Adam) over network weights, class
/// centers and the regression matrix. Throws TrainingError with the
/// epoch index when the loss stops being finite. Zero epochs leave the
/// model untouched.
TrainLog train(DfhModel& model, const Dataset& dataset, const TrainConfig& cfg);

/// Stable-code statistics over the given records (inference mode).
CodeStats stable_code_stats(const DfhModel& model,
                            const std::vector<const DatasetRecord*>& records);

}  // namespace stablehash

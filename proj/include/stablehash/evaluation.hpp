#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stablehash/database.hpp"
#include "stablehash/matching.hpp"
#include "stablehash/model.hpp"
#include "stablehash/train.hpp"

namespace stablehash {

/// Everything needed to train + enroll + verify in one place; protocols
/// that train models take one of these.
struct PipelineConfig {
  ModelConfig model;
  TrainConfig train;
  EnrollConfig enroll;
  MatchConfig match;
};

struct EvalReport {
  double gar = 0.0;  // percent
  double far = 0.0;  // percent
  int genuine_total = 0;
  int genuine_accepted = 0;
  int impostor_total = 0;
  int impostor_accepted = 0;
  std::string label;

  std::string to_line() const;
};

/// GAR over genuine attempts (each verified with its own user's XOR
/// string) and FAR over impostor attempts (each claiming enrolled users
/// round-robin). Both sets must be non-empty.
EvalReport evaluate_gar_far(const TemplateDatabase& db, const DfhModel& model,
                            const std::vector<const DatasetRecord*>& genuine,
                            const std::vector<const DatasetRecord*>& impostors,
                            const MatchConfig& match);

/// Trains on the train split, enrolls, and evaluates test-split genuine
/// attempts against unknown-split impostor attempts.
struct PipelineRun {
  DfhModel model;
  TemplateDatabase db;
  TrainLog train_log;
  EvalReport report;
};
PipelineRun run_pipeline(const Dataset& dataset, const PipelineConfig& cfg,
                         BitSource& source);

// ---------------------------------------------------------------------------
// Open set protocol

struct OpenSetConfig {
  int enrolled_classes = 10;
  int unknown_classes = 10;
  int test_per_class = 4;
  std::uint64_t split_seed = 1;
  /// Explicit class selections (bypass the seeded draw); must be disjoint.
  std::vector<std::string> enrolled_users;
  std::vector<std::string> unknown_users;
  PipelineConfig pipeline;
};

struct OpenSetResult {
  EvalReport report;
  std::vector<std::string> enrolled_users;
  std::vector<std::string> unknown_users;
};

/// Randomly selects enrolled and disjoint unknown classes from the pool,
/// trains, enrolls and evaluates GAR/FAR. The pool must contain at least
/// twice as many classes as are enrolled.
OpenSetResult open_set_protocol(const Dataset& pool, const OpenSetConfig& cfg,
                                BitSource& source);

// ---------------------------------------------------------------------------
// Unlinkability

struct UnlinkabilityReport {
  int bins = 0;
  std::vector<double> bin_centers;
  std::vector<double> mated_hist;    // counts
  std::vector<double> unmated_hist;  // counts
  std::vector<double> d_local;       // per bin, in [0,1]
  double d_sys = 0.0;
  int mated_count = 0;
  int unmated_count = 0;
};

struct UnlinkConfig {
  int bins = 50;
  int min_pairs = 10;
};

/// Local D(s) = max(0, 2 LR / (1 + LR) - 1) with LR the add-one smoothed
/// mated/unmated density ratio (prior ratio 1); the global measure is the
/// mated-weighted average of D(s). Scores must lie in [0,1].
UnlinkabilityReport unlinkability_from_scores(const std::vector<double>& mated,
                                              const std::vector<double>& unmated,
                                              const UnlinkConfig& cfg = {});

/// Scores are normalized Hamming distances between the 512-bit digests of
/// the paired users across the two databases.
UnlinkabilityReport unlinkability(
    const TemplateDatabase& app1, const TemplateDatabase& app2,
    const std::vector<std::pair<std::string, std::string>>& mated_pairs,
    const std::vector<std::pair<std::string, std::string>>& unmated_pairs,
    const UnlinkConfig& cfg = {});

/// Repeats the two-application enrollment `repetitions` times with fresh
/// independent XOR strings, scoring same-user (mated) and cross-user
/// (unmated) digest pairs, and aggregates all scores into one estimate.
UnlinkabilityReport two_app_unlinkability(const Dataset& dataset,
                                          const DfhModel& model,
                                          const EnrollConfig& enroll,
                                          int repetitions, BitSource& source,
                                          const UnlinkConfig& cfg = {});

/// Null model: both databases replaced by independent uniform random
/// digests. Sanity oracle for the estimator itself.
UnlinkabilityReport random_digest_unlinkability(int mated, int unmated,
                                                BitSource& source,
                                                const UnlinkConfig& cfg = {});

// ---------------------------------------------------------------------------
// Ablation and parameter sweep

struct AblationCell {
  int code_bits = 0;
  std::string combo;
  EvalReport report;
  double stability = 0.0;
};

/// Trains L1 / L1+L3 / L1+L2+L3 models per code length and evaluates
/// each. Enrollment uses tolerance 1 (modal codes enrolled regardless of
/// stability) so unstable configurations still produce GAR numbers.
std::vector<AblationCell> ablation_protocol(const Dataset& dataset,
                                            const std::vector<int>& code_bits_list,
                                            const PipelineConfig& base,
                                            BitSource& source);

struct SweepCell {
  double sigma2 = 0.0;
  double eta = 0.0;
  int code_bits = 0;
  EvalReport report;
  double stability = 0.0;
};

std::vector<SweepCell> parameter_sweep(const Dataset& dataset,
                                       const std::vector<double>& sigma2_list,
                                       const std::vector<double>& eta_list,
                                       const std::vector<int>& code_bits_list,
                                       const PipelineConfig& base,
                                       BitSource& source);

}  // namespace stablehash

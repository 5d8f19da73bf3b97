#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <utility>
#include <vector>

#include "stablehash/database.hpp"
#include "stablehash/matching.hpp"
#include "stablehash/model.hpp"
#include "stablehash/pipeline.hpp"

namespace stablehash {

using BigInt = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Brute-force guess counts

enum class BfTarget { kRawImage, kStableCode, kDigest };

/// Enumeration budget for one brute-force target: a grid of elements with
/// a per-element value range. The guess count is the exact product of all
/// element ranges.
struct AttackBudget {
  BfTarget target = BfTarget::kStableCode;
  std::vector<std::size_t> dims;
  /// Either one range per element (product(dims) entries) or a single
  /// uniform range.
  std::vector<std::uint64_t> element_ranges;

  static AttackBudget raw_image(int rows, int cols, std::uint64_t levels = 256);
  static AttackBudget stable_code(int code_bits);
  static AttackBudget digest();

  std::size_t element_count() const;
  void validate() const;
};

BigInt bf_guess_count(const AttackBudget& budget);

/// Concatenating two independent budgets multiplies their guess counts.
AttackBudget concat_budgets(const AttackBudget& a, const AttackBudget& b);

// ---------------------------------------------------------------------------
// Model-inversion label guessing
//
// P = 1 - ((2^L - N) / 2^L)^k. The inverse k = ln(1-P) / ln(1 - N/2^L)
// underflows double precision once N/2^L drops below 2^-53, so both
// directions run in 50-digit floating point internally.

double mi_success_probability(int code_bits, double enrolled_users, double guesses);
double mi_required_guesses(int code_bits, double enrolled_users,
                           double target_probability);

struct MiReferenceCell {
  std::string dataset;
  int enrolled_users;
  int code_bits;
  double reference_guesses;  // published reference value
};

/// The published reference grid (4 datasets x 3 code lengths) for a
/// target success probability of 1e-4.
const std::vector<MiReferenceCell>& mi_reference_table();

struct MiComparisonRow {
  MiReferenceCell cell;
  double computed = 0.0;
  double relative_error = 0.0;
};

std::vector<MiComparisonRow> mi_reference_comparison();

// ---------------------------------------------------------------------------
// False-acceptance attack simulation

struct FaAttackReport {
  int attempts = 0;
  int successes = 0;
  double rate = 0.0;
};

/// Runs `attempts` verification attempts with impostor samples (cycling
/// the pool), each claiming enrolled users round-robin. The pool must be
/// disjoint from the enrolled users.
FaAttackReport fa_attack_sim(const TemplateDatabase& db, const DfhModel& model,
                             const std::vector<const DatasetRecord*>& impostor_pool,
                             int attempts, const MatchConfig& match);

// ---------------------------------------------------------------------------
// Distance-keeping probe

struct ProbeConfig {
  std::vector<double> psi_grid = {0.1, 0.25, 0.5, 1.0};
  int min_pairs = 100;
};

struct ProbeReport {
  int pairs = 0;
  double pearson = 0.0;  // corr(input distance, digest distance)
  /// Fraction of pairs outside (1-psi) d_in <= d_digest <= (1+psi) d_in,
  /// both distances normalized to [0,1].
  std::vector<std::pair<double, double>> band_violations;
};

/// Measures whether input-space distance survives into digest space.
/// Under an avalanche-complete pipeline the correlation is ~0 and the
/// band is violated almost everywhere.
ProbeReport distance_keeping_probe(
    const DfhModel& model, const XorString& xs,
    const std::vector<std::pair<const BiometricSample*, const BiometricSample*>>& pairs,
    const ProbeConfig& cfg = {});

// ---------------------------------------------------------------------------
// Salting

struct SaltReport {
  int strings = 0;
  double mean_normalized_distance = 0.0;
  double min_normalized_distance = 0.0;
  double max_normalized_distance = 0.0;
};

/// For one fixed stable code, draws n XOR strings and reports pairwise
/// digest-distance statistics (a rainbow table would need one table per
/// string).
SaltReport salt_effectiveness(const BitString& stable_code, int n_strings,
                              BitSource& source, int min_strings = 100);

struct BiasReport {
  int trials = 0;
  double max_abs_correlation = 0.0;
  double mean_abs_correlation = 0.0;
};

/// Resamples stable codes at a fixed XOR string and measures the phi
/// correlation between every (code bit, digest bit) pair. A leak would
/// show up as a correlation bounded away from zero.
BiasReport code_leak_bias_scan(int code_bits, const XorString& xs, int trials,
                               BitSource& source);

}  // namespace stablehash

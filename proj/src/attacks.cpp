#include "stablehash/attacks.hpp"

#include <boost/math/special_functions/expm1.hpp>
#include <boost/math/special_functions/log1p.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>

namespace stablehash {

using BigFloat = boost::multiprecision::cpp_bin_float_50;

// ---------------------------------------------------------------------------

AttackBudget AttackBudget::raw_image(int rows, int cols, std::uint64_t levels) {
  if (rows < 1 || cols < 1 || levels < 1) {
    throw InputError("image budget needs positive dimensions and range");
  }
  AttackBudget b;
  b.target = BfTarget::kRawImage;
  b.dims = {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
  b.element_ranges = {levels};
  return b;
}

AttackBudget AttackBudget::stable_code(int code_bits) {
  if (code_bits < 1) throw InputError("code budget needs positive length");
  AttackBudget b;
  b.target = BfTarget::kStableCode;
  b.dims = {static_cast<std::size_t>(code_bits)};
  b.element_ranges = {2};
  return b;
}

AttackBudget AttackBudget::digest() {
  AttackBudget b;
  b.target = BfTarget::kDigest;
  b.dims = {Digest::kBits};
  b.element_ranges = {2};
  return b;
}

std::size_t AttackBudget::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void AttackBudget::validate() const {
  if (dims.empty()) throw InputError("attack budget has no dimensions");
  for (auto d : dims) {
    if (d == 0) throw InputError("attack budget dimension of size zero");
  }
  if (element_ranges.size() != 1 && element_ranges.size() != element_count()) {
    throw InputError("element ranges must be uniform or one per element");
  }
  for (auto r : element_ranges) {
    if (r == 0) throw InputError("element ranges must be positive");
  }
}

BigInt bf_guess_count(const AttackBudget& budget) {
  budget.validate();
  const std::size_t n = budget.element_count();
  if (budget.element_ranges.size() == 1) {
    return boost::multiprecision::pow(BigInt(budget.element_ranges[0]),
                                      static_cast<unsigned>(n));
  }
  BigInt total = 1;
  for (auto r : budget.element_ranges) total *= r;
  return total;
}

AttackBudget concat_budgets(const AttackBudget& a, const AttackBudget& b) {
  a.validate();
  b.validate();
  AttackBudget out;
  out.target = a.target;
  out.dims = {a.element_count() + b.element_count()};
  out.element_ranges.reserve(a.element_count() + b.element_count());
  auto expand = [&out](const AttackBudget& src) {
    if (src.element_ranges.size() == 1) {
      out.element_ranges.insert(out.element_ranges.end(), src.element_count(),
                                src.element_ranges[0]);
    } else {
      out.element_ranges.insert(out.element_ranges.end(),
                                src.element_ranges.begin(),
                                src.element_ranges.end());
    }
  };
  expand(a);
  expand(b);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

BigFloat label_hit_rate(int code_bits, double enrolled_users) {
  if (code_bits < 1) throw InputError("code length must be positive");
  if (enrolled_users < 1) throw InputError("enrolled user count must be >= 1");
  const BigFloat space = boost::multiprecision::pow(BigFloat(2), code_bits);
  const BigFloat q = BigFloat(enrolled_users) / space;
  if (q >= 1) throw InputError("enrolled user count must be below 2^L");
  return q;
}

}  // namespace

double mi_success_probability(int code_bits, double enrolled_users,
                              double guesses) {
  if (guesses < 0) throw InputError("guess count must be non-negative");
  const BigFloat q = label_hit_rate(code_bits, enrolled_users);
  // P = 1 - (1-q)^k = -expm1(k * log1p(-q))
  const BigFloat log_miss = boost::math::log1p(-q);
  const BigFloat p = -boost::math::expm1(BigFloat(guesses) * log_miss);
  return p.convert_to<double>();
}

double mi_required_guesses(int code_bits, double enrolled_users,
                           double target_probability) {
  if (!(target_probability > 0.0) || target_probability >= 1.0) {
    throw InputError("target probability must lie in (0,1)");
  }
  const BigFloat q = label_hit_rate(code_bits, enrolled_users);
  const BigFloat k = boost::math::log1p(BigFloat(-target_probability)) /
                     boost::math::log1p(-q);
  return k.convert_to<double>();
}

const std::vector<MiReferenceCell>& mi_reference_table() {
  static const std::vector<MiReferenceCell> table = {
      {"Lamp", 804, 96, 9.85e21},      {"Lamp", 804, 120, 1.65e29},
      {"Lamp", 804, 144, 2.77e36},     {"Thousand", 2000, 96, 3.96e21},
      {"Thousand", 2000, 120, 6.65e28}, {"Thousand", 2000, 144, 1.12e36},
      {"Yale face", 38, 96, 2.09e23},  {"Yale face", 38, 120, 3.50e30},
      {"Yale face", 38, 144, 5.87e37}, {"YouTube face", 1595, 96, 4.97e21},
      {"YouTube face", 1595, 120, 8.33e28},
      {"YouTube face", 1595, 144, 1.40e36},
  };
  return table;
}

std::vector<MiComparisonRow> mi_reference_comparison() {
  std::vector<MiComparisonRow> rows;
  for (const auto& cell : mi_reference_table()) {
    MiComparisonRow row;
    row.cell = cell;
    row.computed =
        mi_required_guesses(cell.code_bits, cell.enrolled_users, 1e-4);
    row.relative_error = std::abs(row.computed - cell.reference_guesses) /
                         cell.reference_guesses;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

FaAttackReport fa_attack_sim(const TemplateDatabase& db, const DfhModel& model,
                             const std::vector<const DatasetRecord*>& impostor_pool,
                             int attempts, const MatchConfig& match) {
  if (attempts < 0) throw InputError("attempt count must be non-negative");
  for (const auto* rec : impostor_pool) {
    if (db.has_user(rec->user_id)) {
      throw InputError("impostor pool contains enrolled user '" + rec->user_id +
                       "'");
    }
  }
  FaAttackReport rep;
  if (attempts == 0) return rep;
  if (impostor_pool.empty()) throw InputError("impostor pool is empty");
  std::vector<std::string> enrolled;
  for (const auto& [user, _] : db.entries()) enrolled.push_back(user);
  if (enrolled.empty()) throw InputError("database is empty");
  for (int i = 0; i < attempts; ++i) {
    const auto* rec = impostor_pool[static_cast<std::size_t>(i) % impostor_pool.size()];
    const auto& claimed = enrolled[static_cast<std::size_t>(i) % enrolled.size()];
    const auto xs = db.xor_string(claimed);
    ++rep.attempts;
    if (verify(rec->sample, model, xs, db, match,
               match.claimed_only ? std::optional<std::string>(claimed)
                                  : std::nullopt)
            .accepted) {
      ++rep.successes;
    }
  }
  rep.rate = rep.attempts ? double(rep.successes) / rep.attempts : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------

ProbeReport distance_keeping_probe(
    const DfhModel& model, const XorString& xs,
    const std::vector<std::pair<const BiometricSample*, const BiometricSample*>>& pairs,
    const ProbeConfig& cfg) {
  if (static_cast<int>(pairs.size()) < cfg.min_pairs) {
    throw InsufficientDataError("distance probe needs at least " +
                                std::to_string(cfg.min_pairs) + " pairs");
  }
  ProbeReport rep;
  rep.pairs = static_cast<int>(pairs.size());
  std::vector<double> din, dout;
  din.reserve(pairs.size());
  dout.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    const double pixels = static_cast<double>(a->pixels.size());
    const double d_in =
        std::sqrt((a->pixels - b->pixels).squaredNorm() / pixels);
    const Digest da = protect_code(model.forward(*a).code, xs);
    const Digest dbg = protect_code(model.forward(*b).code, xs);
    din.push_back(d_in);
    dout.push_back(da.normalized_distance(dbg));
  }

  const auto n = static_cast<double>(din.size());
  double mean_in = 0, mean_out = 0;
  for (std::size_t i = 0; i < din.size(); ++i) {
    mean_in += din[i];
    mean_out += dout[i];
  }
  mean_in /= n;
  mean_out /= n;
  double cov = 0, var_in = 0, var_out = 0;
  for (std::size_t i = 0; i < din.size(); ++i) {
    cov += (din[i] - mean_in) * (dout[i] - mean_out);
    var_in += (din[i] - mean_in) * (din[i] - mean_in);
    var_out += (dout[i] - mean_out) * (dout[i] - mean_out);
  }
  rep.pearson = (var_in > 0 && var_out > 0)
                    ? cov / std::sqrt(var_in * var_out)
                    : 0.0;

  for (double psi : cfg.psi_grid) {
    int violations = 0;
    for (std::size_t i = 0; i < din.size(); ++i) {
      const double lo = (1.0 - psi) * din[i];
      const double hi = (1.0 + psi) * din[i];
      if (dout[i] < lo || dout[i] > hi) ++violations;
    }
    rep.band_violations.emplace_back(psi, double(violations) / n);
  }
  return rep;
}

// ---------------------------------------------------------------------------

SaltReport salt_effectiveness(const BitString& stable_code, int n_strings,
                              BitSource& source, int min_strings) {
  if (n_strings < 2 || n_strings < min_strings) {
    throw InputError("salt effectiveness needs at least " +
                     std::to_string(std::max(2, min_strings)) + " XOR strings");
  }
  const int code_bits = static_cast<int>(stable_code.size());
  std::vector<Digest> digests;
  digests.reserve(static_cast<std::size_t>(n_strings));
  for (int i = 0; i < n_strings; ++i) {
    const auto xs = generate_xor_string(code_bits, source);
    digests.push_back(protect_code(stable_code, xs));
  }
  SaltReport rep;
  rep.strings = n_strings;
  double total = 0;
  double lo = 1.0, hi = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < digests.size(); ++i) {
    for (std::size_t j = i + 1; j < digests.size(); ++j) {
      const double d = digests[i].normalized_distance(digests[j]);
      total += d;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      ++count;
    }
  }
  rep.mean_normalized_distance = total / static_cast<double>(count);
  rep.min_normalized_distance = lo;
  rep.max_normalized_distance = hi;
  return rep;
}

BiasReport code_leak_bias_scan(int code_bits, const XorString& xs, int trials,
                               BitSource& source) {
  if (trials < 10) throw InputError("bias scan needs at least 10 trials");
  if (xs.bits.size() != static_cast<std::size_t>(2 * code_bits)) {
    throw InputError("XOR string length does not match the code length");
  }
  const int digest_bits = static_cast<int>(Digest::kBits);
  Eigen::MatrixXd n11 = Eigen::MatrixXd::Zero(code_bits, digest_bits);
  Eigen::VectorXd ns = Eigen::VectorXd::Zero(code_bits);
  Eigen::VectorXd nd = Eigen::VectorXd::Zero(digest_bits);
  Eigen::VectorXd s_vec(code_bits), d_vec(digest_bits);
  for (int t = 0; t < trials; ++t) {
    const BitString code = source.bits(static_cast<std::size_t>(code_bits));
    const Digest digest = protect_code(code, xs);
    for (int i = 0; i < code_bits; ++i) s_vec[i] = code.bit(static_cast<std::size_t>(i));
    for (int j = 0; j < digest_bits; ++j) d_vec[j] = digest.bit(static_cast<std::size_t>(j));
    n11.noalias() += s_vec * d_vec.transpose();
    ns += s_vec;
    nd += d_vec;
  }
  BiasReport rep;
  rep.trials = trials;
  const double n = trials;
  double sum_abs = 0;
  for (int i = 0; i < code_bits; ++i) {
    for (int j = 0; j < digest_bits; ++j) {
      const double denom = std::sqrt(ns[i] * (n - ns[i]) * nd[j] * (n - nd[j]));
      const double phi =
          denom > 0 ? (n * n11(i, j) - ns[i] * nd[j]) / denom : 0.0;
      rep.max_abs_correlation = std::max(rep.max_abs_correlation, std::abs(phi));
      sum_abs += std::abs(phi);
    }
  }
  rep.mean_abs_correlation = sum_abs / (double(code_bits) * digest_bits);
  return rep;
}

}  // namespace stablehash

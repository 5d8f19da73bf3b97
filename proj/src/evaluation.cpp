#include "stablehash/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace stablehash {

std::string EvalReport::to_line() const {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;
  out << (label.empty() ? "eval" : label) << ": GAR " << gar << "% ("
      << genuine_accepted << "/" << genuine_total << "), FAR " << far << "% ("
      << impostor_accepted << "/" << impostor_total << ")";
  return out.str();
}

EvalReport evaluate_gar_far(const TemplateDatabase& db, const DfhModel& model,
                            const std::vector<const DatasetRecord*>& genuine,
                            const std::vector<const DatasetRecord*>& impostors,
                            const MatchConfig& match) {
  if (genuine.empty() || impostors.empty()) {
    throw InputError("GAR/FAR evaluation needs non-empty genuine and impostor sets");
  }
  std::vector<std::string> enrolled;
  for (const auto& [user, _] : db.entries()) enrolled.push_back(user);
  if (enrolled.empty()) throw InputError("database is empty");

  EvalReport rep;
  for (const auto* rec : genuine) {
    if (!db.has_user(rec->user_id)) {
      throw InputError("genuine attempt by un-enrolled user '" + rec->user_id + "'");
    }
    ++rep.genuine_total;
    const auto xs = db.xor_string(rec->user_id);
    if (verify(rec->sample, model, xs, db, match,
               match.claimed_only ? std::optional<std::string>(rec->user_id)
                                  : std::nullopt)
            .accepted) {
      ++rep.genuine_accepted;
    }
  }
  std::size_t target = 0;
  for (const auto* rec : impostors) {
    if (db.has_user(rec->user_id)) {
      throw InputError("impostor pool contains enrolled user '" + rec->user_id + "'");
    }
    ++rep.impostor_total;
    const auto& claimed = enrolled[target++ % enrolled.size()];
    const auto xs = db.xor_string(claimed);
    if (verify(rec->sample, model, xs, db, match,
               match.claimed_only ? std::optional<std::string>(claimed)
                                  : std::nullopt)
            .accepted) {
      ++rep.impostor_accepted;
    }
  }
  rep.gar = 100.0 * rep.genuine_accepted / rep.genuine_total;
  rep.far = 100.0 * rep.impostor_accepted / rep.impostor_total;
  return rep;
}

PipelineRun run_pipeline(const Dataset& dataset, const PipelineConfig& cfg,
                         BitSource& source) {
  PipelineRun run{DfhModel::build(cfg.model), {}, {}, {}};
  run.train_log = train(run.model, dataset, cfg.train);
  EnrollConfig enroll_cfg = cfg.enroll;
  enroll_cfg.match = cfg.match;
  run.db = enroll_all(dataset, run.model, enroll_cfg, source);
  const auto genuine = dataset.by_split(Split::kTest);
  const auto impostors = dataset.by_split(Split::kUnknown);
  if (!genuine.empty() && !impostors.empty()) {
    run.report = evaluate_gar_far(run.db, run.model, genuine, impostors, cfg.match);
  }
  return run;
}

// ---------------------------------------------------------------------------

OpenSetResult open_set_protocol(const Dataset& pool, const OpenSetConfig& cfg,
                                BitSource& source) {
  std::set<std::string> users;
  for (const auto& r : pool.records()) users.insert(r.user_id);
  const int total = static_cast<int>(users.size());

  OpenSetResult result;
  if (!cfg.enrolled_users.empty() || !cfg.unknown_users.empty()) {
    result.enrolled_users = cfg.enrolled_users;
    result.unknown_users = cfg.unknown_users;
    std::set<std::string> enrolled_set(result.enrolled_users.begin(),
                                       result.enrolled_users.end());
    for (const auto& u : result.unknown_users) {
      if (enrolled_set.count(u)) {
        throw InputError("open-set unknown user '" + u +
                         "' overlaps the enrolled set");
      }
    }
  } else {
    if (cfg.enrolled_classes < 1 || cfg.unknown_classes < 1) {
      throw InputError("open-set split needs positive class counts");
    }
    if (total < 2 * cfg.enrolled_classes ||
        total < cfg.enrolled_classes + cfg.unknown_classes) {
      throw InputError("open-set protocol needs at least 2x the enrolled class "
                       "count in the pool (" +
                       std::to_string(total) + " available)");
    }
    std::vector<std::string> shuffled(users.begin(), users.end());
    Rng rng(splitmix64(cfg.split_seed ^ 0x0053504C4954ULL));
    rng.shuffle(shuffled);
    result.enrolled_users.assign(shuffled.begin(),
                                 shuffled.begin() + cfg.enrolled_classes);
    result.unknown_users.assign(
        shuffled.begin() + cfg.enrolled_classes,
        shuffled.begin() + cfg.enrolled_classes + cfg.unknown_classes);
  }

  std::set<std::string> enrolled_set(result.enrolled_users.begin(),
                                     result.enrolled_users.end());
  std::set<std::string> unknown_set(result.unknown_users.begin(),
                                    result.unknown_users.end());

  // Rebuild the dataset: enrolled classes keep their samples with the last
  // test_per_class samples held out; unknown classes become impostors.
  Dataset ds;
  std::map<std::string, int> seen;
  std::map<std::string, int> totals;
  for (const auto& r : pool.records()) {
    if (enrolled_set.count(r.user_id)) totals[r.user_id] += 1;
  }
  for (const auto& r : pool.records()) {
    DatasetRecord rec = r;
    if (enrolled_set.count(r.user_id)) {
      const int index = seen[r.user_id]++;
      const int train_count = totals[r.user_id] - cfg.test_per_class;
      if (train_count < 1) {
        throw InputError("class '" + r.user_id +
                         "' has too few samples for the test holdout");
      }
      rec.split = index < train_count ? Split::kTrain : Split::kTest;
    } else if (unknown_set.count(r.user_id)) {
      rec.split = Split::kUnknown;
    } else {
      continue;
    }
    ds.add(std::move(rec));
  }
  ds.assign_labels();

  auto run = run_pipeline(ds, cfg.pipeline, source);
  result.report = run.report;
  result.report.label = "open-set";
  return result;
}

// ---------------------------------------------------------------------------

UnlinkabilityReport unlinkability_from_scores(const std::vector<double>& mated,
                                              const std::vector<double>& unmated,
                                              const UnlinkConfig& cfg) {
  if (cfg.bins < 2) throw InputError("unlinkability needs at least 2 bins");
  if (static_cast<int>(mated.size()) < cfg.min_pairs ||
      static_cast<int>(unmated.size()) < cfg.min_pairs) {
    throw InsufficientDataError(
        "unlinkability needs at least " + std::to_string(cfg.min_pairs) +
        " mated and unmated pairs (got " + std::to_string(mated.size()) + "/" +
        std::to_string(unmated.size()) + ")");
  }
  UnlinkabilityReport rep;
  rep.bins = cfg.bins;
  rep.mated_count = static_cast<int>(mated.size());
  rep.unmated_count = static_cast<int>(unmated.size());
  rep.bin_centers.resize(cfg.bins);
  rep.mated_hist.assign(cfg.bins, 0.0);
  rep.unmated_hist.assign(cfg.bins, 0.0);
  rep.d_local.assign(cfg.bins, 0.0);

  auto bin_of = [&](double s) {
    if (s < 0.0 || s > 1.0) throw InputError("scores must lie in [0,1]");
    return std::min(static_cast<int>(s * cfg.bins), cfg.bins - 1);
  };
  for (double s : mated) rep.mated_hist[bin_of(s)] += 1.0;
  for (double s : unmated) rep.unmated_hist[bin_of(s)] += 1.0;

  const double m_total = static_cast<double>(mated.size());
  const double u_total = static_cast<double>(unmated.size());
  for (int b = 0; b < cfg.bins; ++b) {
    rep.bin_centers[b] = (b + 0.5) / cfg.bins;
    // Add-one smoothing keeps the likelihood ratio finite on empty bins.
    const double pm = (rep.mated_hist[b] + 1.0) / (m_total + cfg.bins);
    const double pu = (rep.unmated_hist[b] + 1.0) / (u_total + cfg.bins);
    const double lr = pm / pu;
    rep.d_local[b] = std::max(0.0, 2.0 * lr / (1.0 + lr) - 1.0);
    rep.d_sys += rep.d_local[b] * (rep.mated_hist[b] / m_total);
  }
  return rep;
}

UnlinkabilityReport unlinkability(
    const TemplateDatabase& app1, const TemplateDatabase& app2,
    const std::vector<std::pair<std::string, std::string>>& mated_pairs,
    const std::vector<std::pair<std::string, std::string>>& unmated_pairs,
    const UnlinkConfig& cfg) {
  auto score = [&](const std::pair<std::string, std::string>& p) {
    return app1.entry(p.first).digest.normalized_distance(
        app2.entry(p.second).digest);
  };
  std::vector<double> mated, unmated;
  mated.reserve(mated_pairs.size());
  unmated.reserve(unmated_pairs.size());
  for (const auto& p : mated_pairs) mated.push_back(score(p));
  for (const auto& p : unmated_pairs) unmated.push_back(score(p));
  return unlinkability_from_scores(mated, unmated, cfg);
}

UnlinkabilityReport two_app_unlinkability(const Dataset& dataset,
                                          const DfhModel& model,
                                          const EnrollConfig& enroll,
                                          int repetitions, BitSource& source,
                                          const UnlinkConfig& cfg) {
  if (repetitions < 1) throw InputError("repetitions must be positive");
  std::vector<double> mated, unmated;
  for (int r = 0; r < repetitions; ++r) {
    EnrollConfig c1 = enroll, c2 = enroll;
    c1.app_id = enroll.app_id + "-a" + std::to_string(r);
    c2.app_id = enroll.app_id + "-b" + std::to_string(r);
    const auto db1 = enroll_all(dataset, model, c1, source);
    const auto db2 = enroll_all(dataset, model, c2, source);
    for (const auto& [u1, e1] : db1.entries()) {
      for (const auto& [u2, e2] : db2.entries()) {
        const double s = e1.digest.normalized_distance(e2.digest);
        (u1 == u2 ? mated : unmated).push_back(s);
      }
    }
  }
  return unlinkability_from_scores(mated, unmated, cfg);
}

UnlinkabilityReport random_digest_unlinkability(int mated, int unmated,
                                                BitSource& source,
                                                const UnlinkConfig& cfg) {
  auto random_digest = [&source]() {
    Digest d;
    source.fill(d.bytes.data(), d.bytes.size());
    return d;
  };
  std::vector<double> mated_scores, unmated_scores;
  for (int i = 0; i < mated; ++i) {
    mated_scores.push_back(random_digest().normalized_distance(random_digest()));
  }
  for (int i = 0; i < unmated; ++i) {
    unmated_scores.push_back(random_digest().normalized_distance(random_digest()));
  }
  return unlinkability_from_scores(mated_scores, unmated_scores, cfg);
}

// ---------------------------------------------------------------------------

std::vector<AblationCell> ablation_protocol(const Dataset& dataset,
                                            const std::vector<int>& code_bits_list,
                                            const PipelineConfig& base,
                                            BitSource& source) {
  if (code_bits_list.empty()) throw InputError("ablation needs code lengths");
  const std::vector<LossCombo> combos = {LossCombo::class_wise_only(),
                                         LossCombo::class_wise_quant(),
                                         LossCombo::full()};
  std::vector<AblationCell> cells;
  for (int bits : code_bits_list) {
    for (const auto& combo : combos) {
      PipelineConfig cfg = base;
      cfg.model.code_bits = bits;
      cfg.train.losses = combo;
      cfg.enroll.instability_tolerance = 1.0;  // enroll modal codes regardless
      cfg.enroll.allow_code_collisions = true;
      auto run = run_pipeline(dataset, cfg, source);
      AblationCell cell;
      cell.code_bits = bits;
      cell.combo = combo.name();
      cell.report = run.report;
      cell.report.label = combo.name() + " L=" + std::to_string(bits);
      cell.stability = run.train_log.final_stats.stability;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::vector<SweepCell> parameter_sweep(const Dataset& dataset,
                                       const std::vector<double>& sigma2_list,
                                       const std::vector<double>& eta_list,
                                       const std::vector<int>& code_bits_list,
                                       const PipelineConfig& base,
                                       BitSource& source) {
  if (sigma2_list.empty() || eta_list.empty() || code_bits_list.empty()) {
    throw InputError("parameter sweep needs non-empty parameter lists");
  }
  std::vector<SweepCell> cells;
  for (double sigma2 : sigma2_list) {
    for (double eta : eta_list) {
      for (int bits : code_bits_list) {
        PipelineConfig cfg = base;
        cfg.model.sigma2 = sigma2;
        cfg.model.eta = eta;
        cfg.model.code_bits = bits;
        cfg.enroll.instability_tolerance = 1.0;
        cfg.enroll.allow_code_collisions = true;
        auto run = run_pipeline(dataset, cfg, source);
        SweepCell cell;
        cell.sigma2 = sigma2;
        cell.eta = eta;
        cell.code_bits = bits;
        cell.report = run.report;
        {
          std::ostringstream label;
          label << "sigma2=" << sigma2 << " eta=" << eta << " L=" << bits;
          cell.report.label = label.str();
        }
        cell.stability = run.train_log.final_stats.stability;
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

}  // namespace stablehash

// Acceptance suite: runs every release criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits nonzero when any
// criterion fails.

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "stablehash/attacks.hpp"
#include "stablehash/evaluation.hpp"
#include "stablehash/loss.hpp"
#include "stablehash/synthetic.hpp"

using namespace stablehash;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  int id;
  bool ok;
  std::string text;
};
std::vector<Verdict> verdicts;

void record(int id, bool ok, const std::string& text) {
  verdicts.push_back({id, ok, text});
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// The shared desk-scale experiment: 20 classes x 30 train samples, 10
// held-out samples per class, 20 disjoint impostor classes x 20 samples.

ExperimentSpec desk_spec() {
  ExperimentSpec spec;
  spec.base.classes = 20;
  spec.base.samples_per_class = 30;
  spec.base.height = spec.base.width = 24;
  spec.base.seed = 11;
  spec.test_per_class = 10;
  spec.unknown_classes = 20;
  spec.unknown_samples_per_class = 20;
  return spec;
}

PipelineConfig desk_pipeline() {
  PipelineConfig cfg;
  cfg.model.input_rows = cfg.model.input_cols = 24;
  cfg.model.code_bits = 96;
  cfg.model.arch = ArchConfig::desk();
  cfg.model.sigma2 = 16.0;
  cfg.model.eta = 0.02;
  cfg.model.init_seed = 5;
  cfg.train.epochs = 350;
  cfg.train.batch_size = 128;
  cfg.train.learning_rate = 0.005;
  cfg.train.seed = 5;
  cfg.train.probe_every = 0;
  cfg.enroll.app_id = "acceptance";
  cfg.enroll.instability_tolerance = 0.01;
  return cfg;
}

// ---------------------------------------------------------------------------

void criterion_1_reference_table() {
  const auto t0 = Clock::now();
  const auto rows = mi_reference_comparison();
  double worst = 0;
  for (const auto& row : rows) worst = std::max(worst, row.relative_error);
  const double elapsed = seconds_since(t0);
  const bool ok = rows.size() == 12 && worst < 0.01 && elapsed < 1.0;
  record(1, ok,
         fmt("guess-count table: 12 cells, worst relative error %.4f%%, %.3fs",
             100 * worst, elapsed));
}

void criterion_2_bf_counts() {
  using boost::multiprecision::pow;
  const auto t0 = Clock::now();
  const bool img_ok = bf_guess_count(AttackBudget::raw_image(24, 24)) ==
                      pow(BigInt(256), 24 * 24);
  const bool code_ok =
      bf_guess_count(AttackBudget::stable_code(96)) == pow(BigInt(2), 96);
  const bool digest_ok = bf_guess_count(AttackBudget::digest()) == pow(BigInt(2), 512);
  const double elapsed = seconds_since(t0);
  record(2, img_ok && code_ok && digest_ok && elapsed < 1.0,
         fmt("brute-force counts exact for 256^(a*b), 2^L, 2^512, %.3fs", elapsed));
}

struct DeskArtifacts {
  Dataset dataset;
  PipelineRun run;
};

DeskArtifacts criterion_3_pipeline() {
  const auto t0 = Clock::now();
  Dataset dataset = generate_experiment(desk_spec());
  SeededBitSource source(1001);
  PipelineRun run = run_pipeline(dataset, desk_pipeline(), source);
  DeskArtifacts art{std::move(dataset), std::move(run)};
  const double elapsed = seconds_since(t0);
  const auto& rep = art.run.report;
  const double stability = art.run.train_log.final_stats.stability;
  const bool ok = stability >= 0.99 && rep.gar >= 95.0 && rep.far == 0.0 &&
                  rep.impostor_total >= 400 && elapsed < 900.0;
  record(3, ok,
         fmt("synthetic pipeline: stability %.4f, GAR %.2f%% (%d/%d), FAR "
             "%.4f%% (%d/%d), %.0fs",
             stability, rep.gar, rep.genuine_accepted, rep.genuine_total,
             rep.far, rep.impostor_accepted, rep.impostor_total, elapsed));
  return art;
}

void criterion_4_ablation(const DeskArtifacts& art) {
  auto train_combo = [&](LossCombo combo) {
    PipelineConfig cfg = desk_pipeline();
    cfg.train.losses = combo;
    cfg.enroll.instability_tolerance = 1.0;
    cfg.enroll.allow_code_collisions = true;
    SeededBitSource source(1002);
    return run_pipeline(art.dataset, cfg, source);
  };
  const auto l1 = train_combo(LossCombo::class_wise_only());
  const auto l1l3 = train_combo(LossCombo::class_wise_quant());
  const double gar_l1 = l1.report.gar;
  const double gar_l1l3 = l1l3.report.gar;
  const double gar_full = art.run.report.gar;  // same config, full losses
  const bool ok = gar_l1 < 5.0 && (gar_l1l3 - gar_l1) >= 50.0 &&
                  gar_full >= gar_l1l3;
  record(4, ok,
         fmt("ablation ordering: GAR L1 %.2f%%, L1+L3 %.2f%%, full %.2f%%",
             gar_l1, gar_l1l3, gar_full));
}

void criterion_5_unlinkability(const DeskArtifacts& art) {
  SeededBitSource source(1003);
  EnrollConfig enroll = desk_pipeline().enroll;
  const auto rep =
      two_app_unlinkability(art.dataset, art.run.model, enroll, 25, source);
  SeededBitSource null_source(1004);
  const auto null_rep = random_digest_unlinkability(500, 2000, null_source);
  const bool ok = rep.d_sys <= 0.05 && null_rep.d_sys <= 0.05;
  record(5, ok,
         fmt("unlinkability: d_sys %.4f (%d mated pairs), null model %.4f",
             rep.d_sys, rep.mated_count, null_rep.d_sys));
}

void criterion_6_avalanche() {
  // Known-answer vectors of the underlying hash primitive.
  const bool kat_ok =
      sha3_512(std::string("")).hex() ==
          "a69f73cca23a9ac5c8b567dc185a756e97c982164fe25859e0d1dcc1475c80a6"
          "15b2123af1f5f94c11e3e9402c3ac558f500199d95b6d3e301758586281dcd26" &&
      sha3_512(std::string("abc")).hex() ==
          "b751850b1a57168a5693cd924b6b096e08f621827444f70d884f5d0240d2712e"
          "10e116e9192af3c91a7ec57647e3934057340b4cf408d5a56592f8274eec53f0";

  SeededBitSource source(1005);
  Rng rng(1005);
  double total = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    auto h = source.bits(192);
    auto flipped = h;
    flipped.flip_bit(static_cast<std::size_t>(rng.uniform_int(0, 191)));
    total += protect(h).normalized_distance(protect(flipped));
  }
  const double mean = total / trials;
  record(6, kat_ok && mean >= 0.45 && mean <= 0.55,
         fmt("avalanche: mean flip fraction %.4f over %d trials, KATs %s",
             mean, trials, kat_ok ? "pass" : "FAIL"));
}

void criterion_7_salting() {
  SeededBitSource source(1006);
  const auto code = source.bits(96);
  const auto salt = salt_effectiveness(code, 500, source);
  const auto xs = generate_xor_string(96, source);
  const auto bias = code_leak_bias_scan(96, xs, 20000, source);
  const bool ok = salt.mean_normalized_distance >= 0.45 &&
                  salt.mean_normalized_distance <= 0.55 &&
                  bias.max_abs_correlation < 0.05;
  record(7, ok,
         fmt("salting: mean digest distance %.4f over 500 strings, max "
             "per-bit leak bias %.4f over %d trials",
             salt.mean_normalized_distance, bias.max_abs_correlation,
             bias.trials));
}

void criterion_8_matching(const DeskArtifacts& art) {
  // Crop counts.
  bool counts_ok = true;
  Rng rng(1007);
  Image img(24, 24);
  for (int r = 0; r < 24; ++r) {
    for (int c = 0; c < 24; ++c) img(r, c) = rng.uniform();
  }
  for (int k : {0, 1, 2, 5}) {
    counts_ok = counts_ok && crop_ensemble(img, k).size() ==
                                 static_cast<std::size_t>((k + 1) * (k + 1));
  }

  // Oracle equivalence on >= 100 randomized cases against the trained
  // model and database: held-out genuine samples accept, unknowns reject.
  MatchConfig crop0;
  crop0.strategy = MatchStrategy::kCrop;
  crop0.k = 0;
  crop0.tau = 1.0;
  int cases = 0, agreements = 0, accepts = 0;
  std::vector<const DatasetRecord*> probes = art.dataset.by_split(Split::kTest);
  const auto unknowns = art.dataset.by_split(Split::kUnknown);
  probes.insert(probes.end(), unknowns.begin(), unknowns.end());
  std::vector<std::string> users;
  for (const auto& [user, _] : art.run.db.entries()) users.push_back(user);
  for (std::size_t i = 0; i < probes.size() && cases < 120; ++i, ++cases) {
    const auto* rec = probes[i];
    const std::string& claimed =
        art.run.db.has_user(rec->user_id) ? rec->user_id : users[i % users.size()];
    const auto xs = art.run.db.xor_string(claimed);
    const auto precise = verify_precise(rec->sample, art.run.model, xs, art.run.db);
    const auto crop = verify_crop(rec->sample, art.run.model, xs, art.run.db, crop0);
    if (precise.accepted == crop.accepted && precise.score == crop.score) {
      ++agreements;
    }
    accepts += precise.accepted;
  }
  const bool ok = counts_ok && cases >= 100 && agreements == cases &&
                  accepts > 0 && accepts < cases;
  record(8, ok,
         fmt("matching oracle: %d/%d equivalent cases (%d accepts), crop "
             "counts exact for k in {0,1,2,5}",
             agreements, cases, accepts));
}

// Central-difference gradient check over random parameter slices of a
// small model, for each loss component separately.
double grad_check_worst(int which, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.input_rows = cfg.input_cols = 8;
  cfg.code_bits = 8;
  cfg.arch = ArchConfig::parse("4p,8/12");
  cfg.sigma2 = 2.0;
  cfg.eta = 0.02;
  cfg.init_seed = seed;
  auto model = DfhModel::build(cfg);
  const int m = 3, batch = 5;
  model.init_class_params(m, seed + 1);
  Rng wrng(seed + 2);
  for (Eigen::Index i = 0; i < model.regression().size(); ++i) {
    model.regression().data()[i] = wrng.normal() * 0.3;
  }
  Rng rng(seed + 3);
  Eigen::MatrixXd x(64, batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  Eigen::VectorXi y(batch);
  for (int i = 0; i < batch; ++i) y[i] = static_cast<int>(rng.uniform_int(0, m - 1));

  auto loss_of = [&]() -> double {
    nn::Tensor<double> in;
    in.channels = 1;
    in.height = 8;
    in.width = 8;
    in.data = x;
    const auto t = model.net().forward(std::move(in), nn::Mode{});
    switch (which) {
      case 0:
        return class_wise_loss<double>(t.data, y, model.centers(), cfg.sigma2).value;
      case 1:
        return regression_loss<double>(t.data, y, model.regression()).value;
      default:
        return quantization_loss<double>(t.data, cfg.eta).value;
    }
  };

  // Analytic gradients.
  model.net().zero_grads();
  nn::Tensor<double> in;
  in.channels = 1;
  in.height = 8;
  in.width = 8;
  in.data = x;
  const auto t = model.net().forward(std::move(in), nn::Mode{});
  Eigen::MatrixXd grad_t, grad_centers = Eigen::MatrixXd::Zero(m, 8),
                          grad_w = Eigen::MatrixXd::Zero(m, 8);
  if (which == 0) {
    auto res = class_wise_loss<double>(t.data, y, model.centers(), cfg.sigma2);
    grad_t = res.grad_t;
    grad_centers = res.grad_centers;
  } else if (which == 1) {
    auto res = regression_loss<double>(t.data, y, model.regression());
    grad_t = res.grad_t;
    grad_w = res.grad_w;
  } else {
    grad_t = quantization_loss<double>(t.data, cfg.eta).grad_t;
  }
  nn::Tensor<double> gt = t;
  gt.data = grad_t;
  model.net().backward(std::move(gt));

  struct Slice {
    Eigen::MatrixXd* value;
    const Eigen::MatrixXd* grad;
  };
  std::vector<Slice> slices;
  for (auto& p : model.net().params()) slices.push_back({p.value, p.grad});
  slices.push_back({&model.centers(), &grad_centers});
  slices.push_back({&model.regression(), &grad_w});

  const double h = 1e-4;
  Rng pick(seed + 4);
  double worst = 0;
  int checked = 0, guard = 0;
  while (checked < 5 && guard++ < 500) {
    auto& slice = slices[static_cast<std::size_t>(
        pick.uniform_int(0, static_cast<std::int64_t>(slices.size()) - 1))];
    const Eigen::Index idx = pick.uniform_int(0, slice.value->size() - 1);
    const double analytic = slice.grad->data()[idx];
    if (std::abs(analytic) < 1e-7) continue;
    const double keep = slice.value->data()[idx];
    slice.value->data()[idx] = keep + h;
    const double up = loss_of();
    slice.value->data()[idx] = keep - h;
    const double down = loss_of();
    slice.value->data()[idx] = keep;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic - fd) /
                                std::max({1e-8, std::abs(analytic), std::abs(fd)}));
    ++checked;
  }
  return checked == 5 ? worst : 1.0;
}

void criterion_9_gradients() {
  const double w1 = grad_check_worst(0, 2100);
  const double w2 = grad_check_worst(1, 2200);
  const double w3 = grad_check_worst(2, 2300);
  const double worst = std::max({w1, w2, w3});
  record(9, worst <= 1e-3,
         fmt("gradient checks: worst relative error %.2e (class-wise %.2e, "
             "regression %.2e, quantization %.2e)",
             worst, w1, w2, w3));
}

void criterion_10_revocation(const DeskArtifacts& art) {
  TemplateDatabase db = art.run.db;
  const auto* genuine = art.dataset.by_split(Split::kTest).front();
  const std::string user = genuine->user_id;
  SeededBitSource source(1008);

  bool ok = true;
  Digest previous = db.entry(user).digest;
  const Digest original = previous;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    revoke_and_reissue(genuine->sample, art.run.model, db, user, source);
    const Digest fresh = db.entry(user).digest;
    ok = ok && fresh != previous && fresh != original &&
         !db.contains_digest(previous);
    previous = fresh;
  }
  // Old XOR string no longer verifies; the reissued one does.
  const auto xs_new = db.xor_string(user);
  const auto xs_old = art.run.db.xor_string(user);
  ok = ok && verify_precise(genuine->sample, art.run.model, xs_new, db).accepted;
  ok = ok && !verify_precise(genuine->sample, art.run.model, xs_old, db).accepted;
  record(10, ok, "revocation: 100 reissues, old digests rejected, genuine accepted");
}

void criterion_11_distance_probe(const DeskArtifacts& art) {
  SeededBitSource source(1009);
  const auto xs = generate_xor_string(96, source);
  SyntheticSpec spec = desk_spec().base;
  spec.classes = 50;
  spec.samples_per_class = 100;  // 5000 samples -> 2500 disjoint pairs
  spec.seed = 77;
  const Dataset probes = generate(spec);
  std::vector<std::size_t> order(probes.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(1009);
  rng.shuffle(order);
  std::vector<std::pair<const BiometricSample*, const BiometricSample*>> pairs;
  for (std::size_t i = 0; i + 1 < order.size(); i += 2) {
    pairs.emplace_back(&probes.records()[order[i]].sample,
                       &probes.records()[order[i + 1]].sample);
  }
  const auto rep = distance_keeping_probe(art.run.model, xs, pairs);
  record(11, rep.pairs >= 500 && std::abs(rep.pearson) < 0.05,
         fmt("distance probe: Pearson %.4f over %d pairs", rep.pearson,
             rep.pairs));
}

void criterion_12_mi_round_trip() {
  double worst = 0;
  for (int L : {96, 120, 144, 168}) {
    for (double P : {1e-6, 1e-4, 1e-2, 0.5, 0.99}) {
      const double k = mi_required_guesses(L, 2000, P);
      const double back = mi_success_probability(L, 2000, k);
      worst = std::max(worst, std::abs(back - P) / P);
    }
  }
  record(12, worst < 1e-6,
         fmt("probability/guess round trip: worst relative error %.2e up to "
             "L=168",
             worst));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n================\n");
  criterion_1_reference_table();
  criterion_2_bf_counts();
  const auto artifacts = criterion_3_pipeline();
  criterion_4_ablation(artifacts);
  criterion_5_unlinkability(artifacts);
  criterion_6_avalanche();
  criterion_7_salting();
  criterion_8_matching(artifacts);
  criterion_9_gradients();
  criterion_10_revocation(artifacts);
  criterion_11_distance_probe(artifacts);
  criterion_12_mi_round_trip();

  std::sort(verdicts.begin(), verdicts.end(),
            [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  int failed = 0;
  for (const auto& v : verdicts) {
    std::printf("%s criterion %2d: %s\n", v.ok ? "PASS" : "FAIL", v.id,
                v.text.c_str());
    failed += v.ok ? 0 : 1;
  }
  std::printf("================\n%zu criteria, %d failed\n", verdicts.size(),
              failed);
  return failed == 0 ? 0 : 1;
}

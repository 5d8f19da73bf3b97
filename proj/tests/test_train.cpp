#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stablehash/database.hpp"
#include "stablehash/matching.hpp"
#include "stablehash/synthetic.hpp"
#include "stablehash/train.hpp"

using namespace stablehash;

namespace {

// Desk-scale smoke setup: six users, easy noise, a small net. Trains in a
// few seconds and reaches fully stable, distinct codes.

ExperimentSpec smoke_data() {
  ExperimentSpec spec;
  spec.base.classes = 6;
  spec.base.samples_per_class = 10;
  spec.base.height = spec.base.width = 16;
  spec.base.seed = 40;
  spec.base.noise = NoiseModel{0.04, 0.10, 4, 2, 0.10};
  spec.test_per_class = 4;
  spec.unknown_classes = 4;
  spec.unknown_samples_per_class = 4;
  return spec;
}

ModelConfig smoke_model(int code_bits = 16) {
  ModelConfig cfg;
  cfg.input_rows = cfg.input_cols = 16;
  cfg.code_bits = code_bits;
  cfg.arch = ArchConfig::parse("6p,12p/32");
  cfg.sigma2 = 16.0;
  cfg.eta = 0.02;
  cfg.init_seed = 77;
  return cfg;
}

TrainConfig smoke_train(int epochs = 150) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 60;
  cfg.seed = 77;
  cfg.probe_every = 0;
  return cfg;
}

}  // namespace

TEST_CASE("zero epochs leave parameters untouched") {
  auto model = DfhModel::build(smoke_model());
  const auto ds = generate_experiment(smoke_data());
  const std::string before = "/tmp/stablehash_train0_a.ckpt";
  const std::string after = "/tmp/stablehash_train0_b.ckpt";
  model.save(before);
  const auto log = train(model, ds, smoke_train(0));
  model.save(after);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(before) == slurp(after));
  CHECK(log.epochs.empty());
}

TEST_CASE("training is deterministic under a fixed seed") {
  const auto ds = generate_experiment(smoke_data());
  auto m1 = DfhModel::build(smoke_model());
  auto m2 = DfhModel::build(smoke_model());
  train(m1, ds, smoke_train(5));
  train(m2, ds, smoke_train(5));
  const auto* probe = ds.by_split(Split::kTest).front();
  CHECK(m1.forward(probe->sample).t == m2.forward(probe->sample).t);
}

TEST_CASE("training stabilizes codes; variants of one user binarize alike") {
  const auto ds = generate_experiment(smoke_data());
  auto model = DfhModel::build(smoke_model());
  const auto log = train(model, ds, smoke_train());

  // Per-epoch loss components are recorded.
  REQUIRE(log.epochs.size() == 150);
  CHECK(log.epochs.front().class_wise > log.epochs.back().class_wise);

  // Stable-code statistics on the training split.
  CHECK(log.final_stats.stability >= 0.99);
  CHECK(log.final_stats.distinctness == 1.0);

  // Every pair of training samples of one user binarizes identically.
  const auto train_records = ds.by_split(Split::kTrain);
  std::map<std::string, BitString> first_code;
  int mismatches = 0;
  for (const auto* rec : train_records) {
    const auto code = model.forward(rec->sample).code;
    auto [it, fresh] = first_code.emplace(rec->user_id, code);
    if (!fresh && !(it->second == code)) ++mismatches;
  }
  CHECK(mismatches == 0);

  SUBCASE("enrollment, verification and revocation run end to end") {
    SeededBitSource src(99);
    EnrollConfig ec;
    ec.app_id = "smoke";
    ec.instability_tolerance = 0.01;
    auto db = enroll_all(ds, model, ec, src);
    CHECK(db.size() == 6);

    // Enrolling the same users again with the same stream of XOR strings
    // yields structurally equal databases (determinism under test rng).
    SeededBitSource src2(99);
    auto db2 = enroll_all(ds, model, ec, src2);
    for (const auto& [user, e] : db.entries()) {
      CHECK(db2.entry(user).digest == e.digest);
    }

    const auto* genuine = ds.by_split(Split::kTest).front();
    const auto xs = db.xor_string(genuine->user_id);
    CHECK(verify_precise(genuine->sample, model, xs, db).accepted);

    // Revocation: fresh XOR string, old digest gone, genuine still passes.
    const Digest old_digest = db.entry(genuine->user_id).digest;
    SeededBitSource revoke_src(17);
    revoke_and_reissue(genuine->sample, model, db, genuine->user_id, revoke_src);
    const Digest new_digest = db.entry(genuine->user_id).digest;
    CHECK(new_digest != old_digest);
    CHECK_FALSE(db.contains_digest(old_digest));
    const auto xs_new = db.xor_string(genuine->user_id);
    CHECK(verify_precise(genuine->sample, model, xs_new, db).accepted);

    // A revocation probe from the wrong user is surfaced, not absorbed.
    // Another enrolled user's sample has a distinct code (distinctness is
    // 1.0 above), so it cannot reproduce the genuine user's digest.
    const DatasetRecord* other = nullptr;
    for (const auto* r : ds.by_split(Split::kTest)) {
      if (r->user_id != genuine->user_id) {
        other = r;
        break;
      }
    }
    REQUIRE(other != nullptr);
    CHECK_THROWS_AS(
        revoke_and_reissue(other->sample, model, db, genuine->user_id, revoke_src),
        RevocationError);
    CHECK_THROWS_AS(
        revoke_and_reissue(genuine->sample, model, db, "nobody", revoke_src),
        RevocationError);
  }
}

TEST_CASE("unstable users are reported as an enrollment error") {
  const auto ds = generate_experiment(smoke_data());
  auto model = DfhModel::build(smoke_model());
  train(model, ds, smoke_train(2));  // far from converged
  SeededBitSource src(1);
  EnrollConfig ec;
  ec.instability_tolerance = 0.0;
  try {
    enroll_all(ds, model, ec, src);
    // A 2-epoch model with zero tolerance across six noisy users is not
    // expected to enroll; if it somehow does, the check is vacuous.
    WARN("2-epoch model enrolled cleanly; instability path not exercised");
  } catch (const EnrollmentError& e) {
    CHECK_FALSE(e.users().empty());
  }
}

TEST_CASE("same stable code across users is surfaced unless allowed") {
  // Force the collision with a zeroed hash layer: every input maps to the
  // all-ones code.
  const auto ds = generate_experiment(smoke_data());
  auto model = DfhModel::build(smoke_model());
  for (auto& p : model.net().params()) {
    if (p.name.rfind("fchash", 0) == 0) p.value->setZero();
  }
  SeededBitSource src(2);
  EnrollConfig ec;
  ec.instability_tolerance = 1.0;
  CHECK_THROWS_AS(enroll_all(ds, model, ec, src), EnrollmentError);
  ec.allow_code_collisions = true;
  const auto db = enroll_all(ds, model, ec, src);
  CHECK(db.size() == 6);  // distinct digests thanks to per-user salts
}

TEST_CASE("training divergence raises a TrainingError with the epoch") {
  const auto ds = generate_experiment(smoke_data());
  auto model = DfhModel::build(smoke_model());
  TrainConfig cfg = smoke_train(30);
  // Batch norm re-normalizes almost any explosion; the loss only stops
  // being finite once squared norms overflow, so the rate must be huge.
  cfg.learning_rate = 1e200;
  try {
    train(model, ds, cfg);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.epoch() >= 1);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("empty training sets are rejected") {
  Dataset empty;
  auto model = DfhModel::build(smoke_model());
  CHECK_THROWS_AS(train(model, empty, smoke_train(1)), InputError);
}

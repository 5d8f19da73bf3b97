// stablehash command line: train, enroll, verify, evaluate, attack, revoke.
//
// Exit codes: 0 success/accept, 1 reject, 2 configuration error,
// 3 runtime error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "stablehash/attacks.hpp"
#include "stablehash/evaluation.hpp"
#include "stablehash/image.hpp"
#include "stablehash/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stablehash;

namespace {

constexpr int kExitAccept = 0;
constexpr int kExitReject = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunConfig {
  std::uint64_t seed = 1;
  bool test_rng = false;

  ModelConfig model;
  TrainConfig train;
  ExperimentSpec synthetic;
  std::string manifest;  // empty: use the synthetic generator
  EnrollConfig enroll;
  MatchConfig match;

  std::string checkpoint = "model.ckpt";
  std::string database = "templates.db";
  std::string report_dir = "reports";

  std::vector<std::string> protocols = {"garfar"};
  int unlink_repetitions = 25;
  UnlinkConfig unlink;
  OpenSetConfig openset;
  std::vector<int> ablation_bits = {96};
  std::vector<double> sweep_sigma2 = {2.0, 16.0};
  std::vector<double> sweep_eta = {0.0025, 0.02};
  std::vector<int> sweep_bits = {96};

  json resolved;  // the fully-resolved config, echoed into run directories
};

template <typename T>
void read_into(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

MatchConfig parse_match(const json& j, const MatchConfig& base) {
  MatchConfig m = base;
  if (j.contains("strategy")) m.strategy = strategy_from_name(j.at("strategy"));
  read_into(j, "k", m.k);
  read_into(j, "tau", m.tau);
  read_into(j, "claimed_only", m.claimed_only);
  return m;
}

NoiseModel parse_noise(const json& j, const NoiseModel& base) {
  NoiseModel n = base;
  read_into(j, "gaussian_sigma", n.gaussian_sigma);
  read_into(j, "occlusion_rate", n.occlusion_rate);
  read_into(j, "occlusion_size", n.occlusion_size);
  read_into(j, "shift_range", n.shift_range);
  read_into(j, "illumination_range", n.illumination_range);
  return n;
}

json noise_to_json(const NoiseModel& n) {
  return {{"gaussian_sigma", n.gaussian_sigma},
          {"occlusion_rate", n.occlusion_rate},
          {"occlusion_size", n.occlusion_size},
          {"shift_range", n.shift_range},
          {"illumination_range", n.illumination_range}};
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;

  // Defaults for the desk-scale synthetic experiment.
  cfg.model.input_rows = cfg.model.input_cols = 24;
  cfg.model.code_bits = 96;
  cfg.model.arch = ArchConfig::desk();
  cfg.model.sigma2 = 16.0;
  cfg.model.eta = 0.02;
  cfg.train.epochs = 350;
  cfg.train.batch_size = 128;
  cfg.synthetic.base.classes = 20;
  cfg.synthetic.base.samples_per_class = 30;
  cfg.synthetic.base.height = cfg.synthetic.base.width = 24;
  cfg.synthetic.base.seed = 11;
  cfg.synthetic.test_per_class = 10;
  cfg.synthetic.unknown_classes = 20;
  cfg.synthetic.unknown_samples_per_class = 20;
  cfg.enroll.app_id = "app-1";
  cfg.openset.enrolled_classes = 10;
  cfg.openset.unknown_classes = 10;
  cfg.openset.test_per_class = 4;

  json j;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
  }

  try {
    read_into(j, "seed", cfg.seed);
    read_into(j, "test_rng", cfg.test_rng);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      if (m.contains("input")) {
        const auto shape = m.at("input").get<std::vector<int>>();
        if (shape.size() != 2) throw ConfigError("model.input must be [rows, cols]");
        cfg.model.input_rows = shape[0];
        cfg.model.input_cols = shape[1];
      }
      read_into(m, "code_bits", cfg.model.code_bits);
      if (m.contains("arch")) cfg.model.arch = ArchConfig::parse(m.at("arch"));
      read_into(m, "sigma2", cfg.model.sigma2);
      read_into(m, "eta", cfg.model.eta);
      read_into(m, "per_class_sigma", cfg.model.per_class_sigma);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      read_into(t, "epochs", cfg.train.epochs);
      read_into(t, "batch_size", cfg.train.batch_size);
      read_into(t, "learning_rate", cfg.train.learning_rate);
      read_into(t, "decay_factor", cfg.train.decay_factor);
      read_into(t, "decay_at", cfg.train.decay_at);
      read_into(t, "probe_every", cfg.train.probe_every);
      read_into(t, "augment", cfg.train.augment);
      if (t.contains("augment_noise")) {
        cfg.train.augment_noise =
            parse_noise(t.at("augment_noise"), cfg.train.augment_noise);
      }
      if (t.contains("loss")) {
        const std::string combo = t.at("loss");
        if (combo == "L1") {
          cfg.train.losses = LossCombo::class_wise_only();
        } else if (combo == "L1+L3") {
          cfg.train.losses = LossCombo::class_wise_quant();
        } else if (combo == "L1+L2+L3") {
          cfg.train.losses = LossCombo::full();
        } else {
          throw ConfigError("train.loss must be L1, L1+L3 or L1+L2+L3");
        }
      }
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      read_into(d, "manifest", cfg.manifest);
      if (d.contains("synthetic")) {
        const auto& s = d.at("synthetic");
        read_into(s, "classes", cfg.synthetic.base.classes);
        read_into(s, "samples_per_class", cfg.synthetic.base.samples_per_class);
        if (s.contains("shape")) {
          const auto shape = s.at("shape").get<std::vector<int>>();
          if (shape.size() != 2) throw ConfigError("synthetic.shape must be [rows, cols]");
          cfg.synthetic.base.height = shape[0];
          cfg.synthetic.base.width = shape[1];
        }
        read_into(s, "seed", cfg.synthetic.base.seed);
        read_into(s, "test_per_class", cfg.synthetic.test_per_class);
        read_into(s, "unknown_classes", cfg.synthetic.unknown_classes);
        read_into(s, "unknown_samples_per_class",
                  cfg.synthetic.unknown_samples_per_class);
        if (s.contains("noise")) {
          cfg.synthetic.base.noise =
              parse_noise(s.at("noise"), cfg.synthetic.base.noise);
        }
      }
    }
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      read_into(p, "checkpoint", cfg.checkpoint);
      read_into(p, "database", cfg.database);
      read_into(p, "report_dir", cfg.report_dir);
    }
    if (j.contains("match")) cfg.match = parse_match(j.at("match"), cfg.match);
    if (j.contains("enroll")) {
      const auto& e = j.at("enroll");
      read_into(e, "app_id", cfg.enroll.app_id);
      read_into(e, "instability_tolerance", cfg.enroll.instability_tolerance);
      read_into(e, "allow_code_collisions", cfg.enroll.allow_code_collisions);
    }
    if (j.contains("evaluate")) {
      const auto& e = j.at("evaluate");
      read_into(e, "protocols", cfg.protocols);
      read_into(e, "unlink_repetitions", cfg.unlink_repetitions);
      read_into(e, "unlink_min_pairs", cfg.unlink.min_pairs);
      if (e.contains("openset")) {
        const auto& o = e.at("openset");
        read_into(o, "enrolled_classes", cfg.openset.enrolled_classes);
        read_into(o, "unknown_classes", cfg.openset.unknown_classes);
        read_into(o, "test_per_class", cfg.openset.test_per_class);
        read_into(o, "split_seed", cfg.openset.split_seed);
      }
      if (e.contains("ablation")) {
        read_into(e.at("ablation"), "code_bits", cfg.ablation_bits);
      }
      if (e.contains("sweep")) {
        const auto& s = e.at("sweep");
        read_into(s, "sigma2", cfg.sweep_sigma2);
        read_into(s, "eta", cfg.sweep_eta);
        read_into(s, "code_bits", cfg.sweep_bits);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  if (const char* env = std::getenv("STABLEHASH_REPORT_DIR")) {
    if (*env) cfg.report_dir = env;
  }

  cfg.model.init_seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  cfg.openset.split_seed = cfg.openset.split_seed ? cfg.openset.split_seed : cfg.seed;

  if (cfg.model.code_bits <= 0 || cfg.model.code_bits % 4 != 0) {
    throw ConfigError("model.code_bits must be a positive multiple of 4");
  }
  cfg.match.validate();

  cfg.resolved = {
      {"seed", cfg.seed},
      {"test_rng", cfg.test_rng},
      {"model",
       {{"input", {cfg.model.input_rows, cfg.model.input_cols}},
        {"code_bits", cfg.model.code_bits},
        {"arch", cfg.model.arch.to_string()},
        {"sigma2", cfg.model.sigma2},
        {"eta", cfg.model.eta},
        {"per_class_sigma", cfg.model.per_class_sigma}}},
      {"train",
       {{"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"learning_rate", cfg.train.learning_rate},
        {"decay_factor", cfg.train.decay_factor},
        {"decay_at", cfg.train.decay_at},
        {"loss", cfg.train.losses.name()},
        {"augment", cfg.train.augment},
        {"augment_noise", noise_to_json(cfg.train.augment_noise)}}},
      {"data",
       {{"manifest", cfg.manifest},
        {"synthetic",
         {{"classes", cfg.synthetic.base.classes},
          {"samples_per_class", cfg.synthetic.base.samples_per_class},
          {"shape", {cfg.synthetic.base.height, cfg.synthetic.base.width}},
          {"seed", cfg.synthetic.base.seed},
          {"test_per_class", cfg.synthetic.test_per_class},
          {"unknown_classes", cfg.synthetic.unknown_classes},
          {"unknown_samples_per_class", cfg.synthetic.unknown_samples_per_class},
          {"noise", noise_to_json(cfg.synthetic.base.noise)}}}}},
      {"paths",
       {{"checkpoint", cfg.checkpoint},
        {"database", cfg.database},
        {"report_dir", cfg.report_dir}}},
      {"match",
       {{"strategy", strategy_name(cfg.match.strategy)},
        {"k", cfg.match.k},
        {"tau", cfg.match.tau},
        {"claimed_only", cfg.match.claimed_only}}},
      {"enroll",
       {{"app_id", cfg.enroll.app_id},
        {"instability_tolerance", cfg.enroll.instability_tolerance},
        {"allow_code_collisions", cfg.enroll.allow_code_collisions}}},
  };
  return cfg;
}

std::unique_ptr<BitSource> make_source(const RunConfig& cfg,
                                       const std::string& command) {
  if (cfg.test_rng) {
    std::uint64_t tag = 0xB17501ULL;
    for (char c : command) tag = splitmix64(tag ^ static_cast<std::uint64_t>(c));
    return std::make_unique<SeededBitSource>(splitmix64(cfg.seed ^ tag));
  }
  return std::make_unique<SecureBitSource>();
}

Dataset load_dataset(const RunConfig& cfg) {
  if (!cfg.manifest.empty()) {
    return ingest(cfg.manifest, cfg.model.input_rows, cfg.model.input_cols);
  }
  ExperimentSpec spec = cfg.synthetic;
  spec.base.height = cfg.model.input_rows;
  spec.base.width = cfg.model.input_cols;
  return generate_experiment(spec);
}

/// Next run-NNNNN directory under the report dir (append-only).
fs::path new_run_dir(const RunConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.report_dir);
  for (int i = 1; i < 100000; ++i) {
    char name[48];
    std::snprintf(name, sizeof(name), "run-%05d-%s", i, command.c_str());
    const fs::path dir = fs::path(cfg.report_dir) / name;
    if (!fs::exists(dir)) {
      fs::create_directories(dir);
      std::ofstream out(dir / "resolved-config.json");
      out << cfg.resolved.dump(2) << "\n";
      return dir;
    }
  }
  throw Error("report directory is full");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

std::string eval_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "label,gar,far,genuine_accepted,genuine_total,impostor_accepted,"
         "impostor_total\n";
  for (const auto& r : reports) {
    out << r.label << "," << r.gar << "," << r.far << "," << r.genuine_accepted
        << "," << r.genuine_total << "," << r.impostor_accepted << ","
        << r.impostor_total << "\n";
  }
  return out.str();
}

BiometricSample load_probe(const RunConfig& cfg, const std::string& path) {
  BiometricSample probe;
  probe.pixels = resize_bilinear(read_image(path), cfg.model.input_rows,
                                 cfg.model.input_cols);
  clamp01(probe.pixels);
  return probe;
}

// ---------------------------------------------------------------------------

int cmd_train(const RunConfig& cfg, bool resume) {
  const Dataset ds = load_dataset(cfg);
  DfhModel model =
      resume ? DfhModel::load(cfg.checkpoint) : DfhModel::build(cfg.model);
  const TrainLog log = train(model, ds, cfg.train);
  model.save(cfg.checkpoint);

  const auto dir = new_run_dir(cfg, "train");
  std::ostringstream tl;
  tl << "epoch,class_wise,regression,quantization,total\n";
  for (const auto& e : log.epochs) {
    tl << e.epoch << "," << e.class_wise << "," << e.regression << ","
       << e.quantization << "," << e.total << "\n";
  }
  write_text(dir / "training-log.csv", tl.str());
  std::ostringstream probes;
  probes << "epoch,stability,distinctness\n";
  for (const auto& [epoch, st] : log.probes) {
    probes << epoch << "," << st.stability << "," << st.distinctness << "\n";
  }
  write_text(dir / "stability-probes.csv", probes.str());

  std::cout << "checkpoint written to " << cfg.checkpoint << "\n";
  if (!log.epochs.empty()) {
    std::cout << "final stability " << log.final_stats.stability
              << ", distinctness " << log.final_stats.distinctness << " ("
              << log.final_stats.users << " users)\n";
  }
  std::cout << "training log in " << dir.string() << "\n";
  return kExitAccept;
}

int cmd_enroll(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  const DfhModel model = DfhModel::load(cfg.checkpoint);
  EnrollConfig ec = cfg.enroll;
  ec.match = cfg.match;
  auto source = make_source(cfg, "enroll");
  const TemplateDatabase db = enroll_all(ds, model, ec, *source);
  db.save(cfg.database);
  std::cout << "enrolled " << db.size() << " users into " << cfg.database << "\n";
  return kExitAccept;
}

int cmd_verify(const RunConfig& cfg, const std::string& sample_path,
               const std::string& user_id) {
  const DfhModel model = DfhModel::load(cfg.checkpoint);
  const TemplateDatabase db = TemplateDatabase::load(cfg.database);
  if (cfg.match.strategy == MatchStrategy::kPrecise &&
      (cfg.match.k != 0 || cfg.match.tau != 1.0)) {
    std::cerr << "warning: k/tau are ignored by the precise strategy\n";
  }
  const BiometricSample probe = load_probe(cfg, sample_path);

  std::vector<std::string> candidates;
  if (!user_id.empty()) {
    if (!db.has_user(user_id)) throw InputError("user '" + user_id + "' is not enrolled");
    candidates.push_back(user_id);
  } else {
    for (const auto& [user, _] : db.entries()) candidates.push_back(user);
  }
  for (const auto& user : candidates) {
    const auto xs = db.xor_string(user);
    const auto res = verify(probe, model, xs, db, cfg.match,
                            cfg.match.claimed_only
                                ? std::optional<std::string>(user)
                                : std::nullopt);
    if (res.accepted) {
      std::cout << "accept user=" << user << " score=" << res.score << "\n";
      return kExitAccept;
    }
  }
  std::cout << "reject score=0\n";
  return kExitReject;
}

int cmd_revoke(const RunConfig& cfg, const std::string& sample_path,
               const std::string& user_id) {
  const DfhModel model = DfhModel::load(cfg.checkpoint);
  TemplateDatabase db = TemplateDatabase::load(cfg.database);
  const BiometricSample fresh = load_probe(cfg, sample_path);
  auto source = make_source(cfg, "revoke");
  revoke_and_reissue(fresh, model, db, user_id, *source);
  db.save(cfg.database);
  std::cout << "reissued template for " << user_id << "\n";
  return kExitAccept;
}

int cmd_evaluate(const RunConfig& cfg, std::vector<std::string> protocols) {
  if (protocols.empty()) protocols = cfg.protocols;
  for (const auto& p : protocols) {
    if (p != "garfar" && p != "openset" && p != "unlink" && p != "ablation" &&
        p != "sweep") {
      throw ConfigError("unknown protocol '" + p +
                        "' (valid: garfar, openset, unlink, ablation, sweep)");
    }
  }
  const Dataset ds = load_dataset(cfg);
  auto source = make_source(cfg, "evaluate");
  const auto dir = new_run_dir(cfg, "evaluate");

  const PipelineConfig pipeline{cfg.model, cfg.train, cfg.enroll, cfg.match};

  for (const auto& p : protocols) {
    if (p == "garfar") {
      const DfhModel model = DfhModel::load(cfg.checkpoint);
      const TemplateDatabase db = TemplateDatabase::load(cfg.database);
      auto rep = evaluate_gar_far(db, model, ds.by_split(Split::kTest),
                                  ds.by_split(Split::kUnknown), cfg.match);
      rep.label = "garfar";
      write_text(dir / "garfar.csv", eval_csv({rep}));
      std::cout << rep.to_line() << "\n";
    } else if (p == "openset") {
      OpenSetConfig oc = cfg.openset;
      oc.pipeline = pipeline;
      const auto result = open_set_protocol(ds, oc, *source);
      std::ostringstream extra;
      extra << eval_csv({result.report});
      extra << "# enrolled:";
      for (const auto& u : result.enrolled_users) extra << " " << u;
      extra << "\n# unknown:";
      for (const auto& u : result.unknown_users) extra << " " << u;
      extra << "\n";
      write_text(dir / "openset.csv", extra.str());
      std::cout << result.report.to_line() << "\n";
    } else if (p == "unlink") {
      const DfhModel model = DfhModel::load(cfg.checkpoint);
      EnrollConfig ec = cfg.enroll;
      ec.match = cfg.match;
      const auto rep = two_app_unlinkability(
          ds, model, ec, cfg.unlink_repetitions, *source, cfg.unlink);
      std::ostringstream hist;
      hist << "bin_center,mated_count,unmated_count,d_local\n";
      for (int b = 0; b < rep.bins; ++b) {
        hist << rep.bin_centers[b] << "," << rep.mated_hist[b] << ","
             << rep.unmated_hist[b] << "," << rep.d_local[b] << "\n";
      }
      write_text(dir / "unlinkability-curve.csv", hist.str());
      std::ostringstream summary;
      summary << "d_sys," << rep.d_sys << "\nmated_pairs," << rep.mated_count
              << "\nunmated_pairs," << rep.unmated_count << "\n";
      write_text(dir / "unlinkability.csv", summary.str());
      std::cout << "d_sys " << rep.d_sys << " over " << rep.mated_count
                << " mated / " << rep.unmated_count << " unmated pairs\n";
    } else if (p == "ablation") {
      const auto cells =
          ablation_protocol(ds, cfg.ablation_bits, pipeline, *source);
      std::vector<EvalReport> reports;
      for (const auto& c : cells) reports.push_back(c.report);
      write_text(dir / "ablation.csv", eval_csv(reports));
      for (const auto& c : cells) std::cout << c.report.to_line() << "\n";
    } else if (p == "sweep") {
      const auto cells = parameter_sweep(ds, cfg.sweep_sigma2, cfg.sweep_eta,
                                         cfg.sweep_bits, pipeline, *source);
      std::vector<EvalReport> reports;
      for (const auto& c : cells) reports.push_back(c.report);
      write_text(dir / "sweep.csv", eval_csv(reports));
      for (const auto& c : cells) std::cout << c.report.to_line() << "\n";
    }
  }
  std::cout << "reports in " << dir.string() << "\n";
  return kExitAccept;
}

int cmd_attack(const RunConfig& cfg, const std::string& name,
               const std::string& target, double users, double probability,
               double guesses, int attempts, int trials) {
  const auto dir = new_run_dir(cfg, "attack-" + name);
  std::ostringstream rep;
  const int code_bits = cfg.model.code_bits;

  if (name == "bf") {
    AttackBudget budget =
        target == "raw_image"
            ? AttackBudget::raw_image(cfg.model.input_rows, cfg.model.input_cols)
        : target == "digest" ? AttackBudget::digest()
                             : AttackBudget::stable_code(code_bits);
    const BigInt n = bf_guess_count(budget);
    rep << "target," << target << "\nguesses," << n.str() << "\nbits,"
        << boost::multiprecision::msb(n) << "\n";
  } else if (name == "mi-table") {
    rep << "dataset,users,code_bits,reference,computed,relative_error\n";
    for (const auto& row : mi_reference_comparison()) {
      rep << row.cell.dataset << "," << row.cell.enrolled_users << ","
          << row.cell.code_bits << "," << row.cell.reference_guesses << ","
          << row.computed << "," << row.relative_error << "\n";
    }
  } else if (name == "mi") {
    if (users <= 0) throw ConfigError("mi attack needs --users");
    if (guesses > 0) {
      rep << "success_probability,"
          << mi_success_probability(code_bits, users, guesses) << "\n";
    } else {
      rep << "required_guesses,"
          << mi_required_guesses(code_bits, users, probability) << "\n";
    }
  } else if (name == "fa") {
    const Dataset ds = load_dataset(cfg);
    const DfhModel model = DfhModel::load(cfg.checkpoint);
    const TemplateDatabase db = TemplateDatabase::load(cfg.database);
    const auto res = fa_attack_sim(db, model, ds.by_split(Split::kUnknown),
                                   attempts, cfg.match);
    rep << "attempts," << res.attempts << "\nsuccesses," << res.successes
        << "\nrate," << res.rate << "\n";
  } else if (name == "distance-probe") {
    const DfhModel model = DfhModel::load(cfg.checkpoint);
    auto source = make_source(cfg, "attack");
    const auto xs = generate_xor_string(model.code_bits(), *source);
    SyntheticSpec spec = cfg.synthetic.base;
    spec.height = cfg.model.input_rows;
    spec.width = cfg.model.input_cols;
    spec.classes = std::max(8, spec.classes);
    spec.samples_per_class =
        std::max(2, 2 * trials / spec.classes + 1);
    const Dataset probes = generate(spec);
    std::vector<std::pair<const BiometricSample*, const BiometricSample*>> pairs;
    const auto& recs = probes.records();
    for (std::size_t i = 0; i + 1 < recs.size() &&
                            static_cast<int>(pairs.size()) < trials;
         i += 2) {
      pairs.emplace_back(&recs[i].sample, &recs[i + 1].sample);
    }
    const auto res = distance_keeping_probe(model, xs, pairs);
    rep << "pairs," << res.pairs << "\npearson," << res.pearson << "\n";
    for (const auto& [psi, frac] : res.band_violations) {
      rep << "violation_fraction_psi_" << psi << "," << frac << "\n";
    }
  } else if (name == "salt") {
    auto source = make_source(cfg, "attack");
    const auto code = source->bits(static_cast<std::size_t>(code_bits));
    const auto res = salt_effectiveness(code, std::max(trials, 100), *source);
    rep << "strings," << res.strings << "\nmean_distance,"
        << res.mean_normalized_distance << "\nmin_distance,"
        << res.min_normalized_distance << "\nmax_distance,"
        << res.max_normalized_distance << "\n";
  } else if (name == "bias") {
    auto source = make_source(cfg, "attack");
    const auto xs = generate_xor_string(code_bits, *source);
    const auto res =
        code_leak_bias_scan(code_bits, xs, std::max(trials, 100), *source);
    rep << "trials," << res.trials << "\nmax_abs_correlation,"
        << res.max_abs_correlation << "\nmean_abs_correlation,"
        << res.mean_abs_correlation << "\n";
  } else {
    throw ConfigError("unknown attack '" + name +
                      "' (valid: bf, mi-table, mi, fa, distance-probe, salt, "
                      "bias)");
  }

  write_text(dir / (name + ".csv"), rep.str());
  std::cout << rep.str();
  std::cout << "report in " << dir.string() << "\n";
  return kExitAccept;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stablehash: biometric template protection via stable hash codes"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON config file")
      ->check(CLI::ExistingFile);

  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> checkpoint_override, database_override,
      report_dir_override;
  std::optional<int> epochs_override, code_bits_override;
  bool test_rng_flag = false;
  app.add_option("--seed", seed_override, "seed override");
  app.add_option("--checkpoint", checkpoint_override, "checkpoint path override");
  app.add_option("--database", database_override, "database path override");
  app.add_option("--report-dir", report_dir_override, "report directory override");
  app.add_flag("--test-rng", test_rng_flag,
               "deterministic XOR strings (test mode only)");
  app.add_option("--epochs", epochs_override, "training epoch override");
  app.add_option("--code-bits", code_bits_override, "code length override");

  auto* train_cmd = app.add_subcommand("train", "train the hashing model");
  bool resume = false;
  train_cmd->add_flag("--resume", resume, "continue from the existing checkpoint");

  auto* enroll_cmd =
      app.add_subcommand("enroll", "enroll train-split users into a database");

  auto* verify_cmd = app.add_subcommand("verify", "verify one sample");
  std::string sample_path, user_id;
  verify_cmd->add_option("sample", sample_path, "image file")->required();
  verify_cmd->add_option("-u,--user", user_id, "claimed user id");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "run evaluation protocols");
  std::vector<std::string> protocols;
  evaluate_cmd->add_option("-p,--protocol", protocols,
                           "garfar, openset, unlink, ablation, sweep");

  auto* attack_cmd = app.add_subcommand("attack", "run a security analysis");
  std::string attack_name, bf_target = "stable_code";
  double users = 0, probability = 1e-4, guesses = 0;
  int attempts = 1000, trials = 1000;
  attack_cmd
      ->add_option("name", attack_name,
                   "bf, mi-table, mi, fa, distance-probe, salt, bias")
      ->required();
  attack_cmd->add_option("--target", bf_target,
                         "bf target: raw_image, stable_code, digest");
  attack_cmd->add_option("--users", users, "enrolled user count (mi)");
  attack_cmd->add_option("--probability", probability,
                         "target success probability (mi)");
  attack_cmd->add_option("--guesses", guesses, "guess count (mi forward)");
  attack_cmd->add_option("--attempts", attempts, "verification attempts (fa)");
  attack_cmd->add_option("--trials", trials, "trials (salt, bias, distance-probe)");

  auto* revoke_cmd = app.add_subcommand("revoke", "reissue a user's template");
  std::string revoke_sample, revoke_user;
  revoke_cmd->add_option("sample", revoke_sample, "fresh image file")->required();
  revoke_cmd->add_option("-u,--user", revoke_user, "user id")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_override) {
      cfg.seed = *seed_override;
      cfg.model.init_seed = cfg.seed;
      cfg.train.seed = cfg.seed;
    }
    if (test_rng_flag) cfg.test_rng = true;
    if (checkpoint_override) cfg.checkpoint = *checkpoint_override;
    if (database_override) cfg.database = *database_override;
    if (report_dir_override) cfg.report_dir = *report_dir_override;
    if (epochs_override) cfg.train.epochs = *epochs_override;
    if (code_bits_override) {
      cfg.model.code_bits = *code_bits_override;
      if (cfg.model.code_bits <= 0 || cfg.model.code_bits % 4 != 0) {
        throw ConfigError("code length must be a positive multiple of 4");
      }
    }
    cfg.resolved["seed"] = cfg.seed;
    cfg.resolved["test_rng"] = cfg.test_rng;
    cfg.resolved["paths"] = {{"checkpoint", cfg.checkpoint},
                             {"database", cfg.database},
                             {"report_dir", cfg.report_dir}};

    if (train_cmd->parsed()) return cmd_train(cfg, resume);
    if (enroll_cmd->parsed()) return cmd_enroll(cfg);
    if (verify_cmd->parsed()) return cmd_verify(cfg, sample_path, user_id);
    if (evaluate_cmd->parsed()) return cmd_evaluate(cfg, protocols);
    if (attack_cmd->parsed()) {
      return cmd_attack(cfg, attack_name, bf_target, users, probability,
                        guesses, attempts, trials);
    }
    if (revoke_cmd->parsed()) return cmd_revoke(cfg, revoke_sample, revoke_user);
    std::cerr << "no subcommand\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

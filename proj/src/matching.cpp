#include "stablehash/matching.hpp"

#include "stablehash/image.hpp"

namespace stablehash {

std::string strategy_name(MatchStrategy s) {
  return s == MatchStrategy::kPrecise ? "precise" : "crop";
}

MatchStrategy strategy_from_name(const std::string& name) {
  if (name == "precise") return MatchStrategy::kPrecise;
  if (name == "crop") return MatchStrategy::kCrop;
  throw ConfigError("unknown matching strategy '" + name + "'");
}

void MatchConfig::validate() const {
  if (strategy == MatchStrategy::kCrop) {
    if (k < 1) throw ConfigError("crop matching requires k >= 1");
    if (tau <= 0.0 || tau > 1.0) {
      throw ConfigError("crop matching requires 0 < tau <= 1");
    }
  }
}

namespace {

void check_compatible(const DfhModel& model, const TemplateDatabase& db,
                      const XorString& xs) {
  if (model.code_bits() != db.code_bits()) {
    throw ConfigError("model produces " + std::to_string(model.code_bits()) +
                      "-bit codes but the database stores " +
                      std::to_string(db.code_bits()) + "-bit templates");
  }
  if (xs.bits.size() != static_cast<std::size_t>(2 * model.code_bits())) {
    throw InputError("XOR string length does not match the code length");
  }
}

bool digest_accepted(const Digest& d, const TemplateDatabase& db,
                     const std::optional<std::string>& claimed_user) {
  if (claimed_user) {
    return db.has_user(*claimed_user) && db.entry(*claimed_user).digest == d;
  }
  return db.contains_digest(d);
}

}  // namespace

VerifyResult verify_precise(const BiometricSample& probe, const DfhModel& model,
                            const XorString& xs, const TemplateDatabase& db,
                            const std::optional<std::string>& claimed_user) {
  check_compatible(model, db, xs);
  const Digest d = protect_code(model.forward(probe).code, xs);
  VerifyResult res;
  res.total = 1;
  res.accepted = digest_accepted(d, db, claimed_user);
  res.matched = res.accepted ? 1 : 0;
  res.score = res.accepted ? 1.0 : 0.0;
  return res;
}

std::vector<Image> crop_ensemble(const Image& image, int k) {
  const int a = static_cast<int>(image.rows());
  const int b = static_cast<int>(image.cols());
  if (k < 0) throw InputError("crop length must be non-negative");
  if (k >= std::min(a, b)) {
    throw InputError("crop length " + std::to_string(k) +
                     " must be smaller than both image dimensions (" +
                     std::to_string(a) + "x" + std::to_string(b) + ")");
  }
  std::vector<Image> crops;
  crops.reserve(static_cast<std::size_t>(k + 1) * (k + 1));
  for (int i = 0; i <= k; ++i) {
    for (int j = 0; j <= k; ++j) {
      crops.push_back(resize_bilinear(crop(image, i, j, a - k, b - k), a, b));
    }
  }
  return crops;
}

VerifyResult verify_crop(const BiometricSample& probe, const DfhModel& model,
                         const XorString& xs, const TemplateDatabase& db,
                         const MatchConfig& cfg,
                         const std::optional<std::string>& claimed_user) {
  if (cfg.strategy != MatchStrategy::kCrop) {
    throw ConfigError("verify_crop called with a non-crop strategy");
  }
  // k = 0 is allowed here (it reduces to precise matching); user-facing
  // configs go through MatchConfig::validate which demands k >= 1.
  if (cfg.k < 0) throw ConfigError("crop length must be non-negative");
  if (cfg.tau <= 0.0 || cfg.tau > 1.0) {
    throw ConfigError("crop matching requires 0 < tau <= 1");
  }
  check_compatible(model, db, xs);
  const auto crops = crop_ensemble(probe.pixels, cfg.k);
  VerifyResult res;
  res.total = static_cast<int>(crops.size());
  for (const auto& c : crops) {
    BiometricSample s;
    s.pixels = c;
    s.label = probe.label;
    if (verify_precise(s, model, xs, db, claimed_user).accepted) ++res.matched;
  }
  res.score = double(res.matched) / double(res.total);
  res.accepted = res.score >= cfg.tau;  // tie at tau accepts
  return res;
}

VerifyResult verify(const BiometricSample& probe, const DfhModel& model,
                    const XorString& xs, const TemplateDatabase& db,
                    const MatchConfig& cfg,
                    const std::optional<std::string>& claimed_user) {
  if (cfg.strategy == MatchStrategy::kPrecise) {
    return verify_precise(probe, model, xs, db, claimed_user);
  }
  return verify_crop(probe, model, xs, db, cfg, claimed_user);
}

}  // namespace stablehash

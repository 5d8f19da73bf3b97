#pragma once

#include <optional>
#include <vector>

#include "stablehash/database.hpp"
#include "stablehash/matching_config.hpp"
#include "stablehash/model.hpp"
#include "stablehash/pipeline.hpp"

namespace stablehash {

struct VerifyResult {
  bool accepted = false;
  double score = 0.0;  // fraction of accepted crops (1 or 0 for precise)
  int matched = 0;
  int total = 1;
};

/// Precise matching: accept iff the probe's protected template is a
/// member of the digest set (or equals the claimed user's digest when
/// claimed_user is given).
VerifyResult verify_precise(const BiometricSample& probe, const DfhModel& model,
                            const XorString& xs, const TemplateDatabase& db,
                            const std::optional<std::string>& claimed_user = {});

/// All (k+1)^2 crops of size (a-k) x (b-k) at every top-left offset,
/// each resized back to the input shape (a, b). k = 0 returns the input.
std::vector<Image> crop_ensemble(const Image& image, int k);

/// Crop matching: verifies every crop with the precise strategy; the
/// score is the accepted fraction and the probe is accepted iff
/// score >= tau.
VerifyResult verify_crop(const BiometricSample& probe, const DfhModel& model,
                         const XorString& xs, const TemplateDatabase& db,
                         const MatchConfig& cfg,
                         const std::optional<std::string>& claimed_user = {});

/// Dispatches on cfg.strategy. Requires model and database code lengths
/// to agree.
VerifyResult verify(const BiometricSample& probe, const DfhModel& model,
                    const XorString& xs, const TemplateDatabase& db,
                    const MatchConfig& cfg,
                    const std::optional<std::string>& claimed_user = {});

}  // namespace stablehash

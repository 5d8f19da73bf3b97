#pragma once

#include <string>

#include "stablehash/errors.hpp"

namespace stablehash {

enum class MatchStrategy { kPrecise, kCrop };

std::string strategy_name(MatchStrategy s);
MatchStrategy strategy_from_name(const std::string& name);

/// Verification strategy configuration. crop requires k >= 1 and
/// 0 < tau <= 1; precise ignores both.
struct MatchConfig {
  MatchStrategy strategy = MatchStrategy::kPrecise;
  int k = 0;
  double tau = 1.0;
  /// When true, membership is tested against the claimed user's digest
  /// only instead of the whole digest set.
  bool claimed_only = false;

  void validate() const;
};

}  // namespace stablehash

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "stablehash/digest.hpp"
#include "stablehash/matching_config.hpp"
#include "stablehash/model.hpp"
#include "stablehash/pipeline.hpp"
#include "stablehash/rng.hpp"
#include "stablehash/types.hpp"

namespace stablehash {

/// Per-user stored record: the protected template and the public XOR
/// string. Stable codes and raw samples are never stored.
struct DbEntry {
  Digest digest;
  BitString xor_bits;  // 2L
};

/// One application's template database. Digests must be unique across
/// users; inserting a colliding digest for a different user is an error.
class TemplateDatabase {
public:
  TemplateDatabase() = default;
  TemplateDatabase(std::string app_id, int code_bits, MatchConfig match = {})
      : app_id_(std::move(app_id)), code_bits_(code_bits), match_(match) {}

  const std::string& app_id() const { return app_id_; }
  int code_bits() const { return code_bits_; }
  const MatchConfig& match_config() const { return match_; }
  void set_match_config(const MatchConfig& m) { match_ = m; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Inserting the same user with the same digest is idempotent; a new
  /// digest replaces the user's old one; a digest collision with another
  /// user throws EnrollmentError.
  void insert(const std::string& user_id, DbEntry entry);
  void remove(const std::string& user_id);

  bool contains_digest(const Digest& d) const {
    return digests_.count(d.hex()) > 0;
  }
  const std::map<std::string, DbEntry>& entries() const { return entries_; }
  const DbEntry& entry(const std::string& user_id) const;
  bool has_user(const std::string& user_id) const {
    return entries_.count(user_id) > 0;
  }

  XorString xor_string(const std::string& user_id) const;

  void save(const std::string& path) const;
  static TemplateDatabase load(const std::string& path);

private:
  std::string app_id_;
  int code_bits_ = 0;
  int format_version_ = 1;
  MatchConfig match_;
  std::map<std::string, DbEntry> entries_;   // user_id -> entry, sorted
  std::set<std::string> digests_;            // digest hex set
};

struct EnrollConfig {
  std::string app_id = "app";
  /// Maximum tolerated fraction of a user's samples whose code differs
  /// from the modal code. 0 demands perfect stability; 1 accepts anything
  /// (the modal code is enrolled regardless).
  double instability_tolerance = 0.01;
  /// Two users sharing one stable code is an enrollment error unless this
  /// is set (the ablation/sweep protocols measure degenerate models too).
  bool allow_code_collisions = false;
  MatchConfig match;
};

/// Enrolls every train-split user: computes the modal stable code over
/// the user's samples, checks stability against the tolerance, draws a
/// fresh XOR string and stores only the digest and the XOR string.
TemplateDatabase enroll_all(const Dataset& dataset, const DfhModel& model,
                            const EnrollConfig& cfg, BitSource& source);

}  // namespace stablehash

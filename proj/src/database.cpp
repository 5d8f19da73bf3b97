#include "stablehash/database.hpp"

#include <fstream>
#include <sstream>

namespace stablehash {

void TemplateDatabase::insert(const std::string& user_id, DbEntry entry) {
  const std::string hex = entry.digest.hex();
  auto existing = entries_.find(user_id);
  if (existing != entries_.end()) {
    if (existing->second.digest == entry.digest &&
        existing->second.xor_bits == entry.xor_bits) {
      return;  // idempotent re-enrollment
    }
    digests_.erase(existing->second.digest.hex());
  }
  if (digests_.count(hex)) {
    if (existing != entries_.end()) {
      digests_.insert(existing->second.digest.hex());  // restore
    }
    throw EnrollmentError("digest collision inserting user '" + user_id + "'",
                          {user_id});
  }
  if (static_cast<int>(entry.xor_bits.size()) != 2 * code_bits_) {
    throw InputError("XOR string length does not match database code length");
  }
  entries_[user_id] = std::move(entry);
  digests_.insert(hex);
}

void TemplateDatabase::remove(const std::string& user_id) {
  auto it = entries_.find(user_id);
  if (it == entries_.end()) return;
  digests_.erase(it->second.digest.hex());
  entries_.erase(it);
}

const DbEntry& TemplateDatabase::entry(const std::string& user_id) const {
  auto it = entries_.find(user_id);
  if (it == entries_.end()) {
    throw InputError("user '" + user_id + "' is not enrolled");
  }
  return it->second;
}

XorString TemplateDatabase::xor_string(const std::string& user_id) const {
  XorString xs;
  xs.bits = entry(user_id).xor_bits;
  xs.app_id = app_id_;
  xs.user_id = user_id;
  return xs;
}

// ---------------------------------------------------------------------------
// File format, line oriented and diff friendly:
//   stablehash-db 1
//   app <app_id>
//   bits <L>
//   match <precise|crop> <k> <tau>
//   user <user_id> <digest hex, 128 chars> <xor hex, 2L/4 chars>

void TemplateDatabase::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write database '" + path + "'");
  out << "stablehash-db " << format_version_ << "\n";
  out << "app " << app_id_ << "\n";
  out << "bits " << code_bits_ << "\n";
  out << "match " << strategy_name(match_.strategy) << " " << match_.k << " "
      << match_.tau << "\n";
  for (const auto& [user, entry] : entries_) {
    out << "user " << user << " " << entry.digest.hex() << " "
        << entry.xor_bits.hex() << "\n";
  }
  if (!out) throw IoError("short write to database '" + path + "'");
}

TemplateDatabase TemplateDatabase::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open database '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("database '" + path + "' is empty");
  {
    std::istringstream head(line);
    std::string magic;
    int version = -1;
    head >> magic >> version;
    if (magic != "stablehash-db") {
      throw IoError("'" + path + "' is not a template database");
    }
    if (version != 1) {
      throw IoError("unsupported database format version " +
                    std::to_string(version));
    }
  }
  TemplateDatabase db;
  bool have_app = false, have_bits = false;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    const std::string at = " at line " + std::to_string(line_no);
    if (tag == "app") {
      fields >> db.app_id_;
      have_app = true;
    } else if (tag == "bits") {
      fields >> db.code_bits_;
      if (db.code_bits_ <= 0 || db.code_bits_ % 4 != 0) {
        throw IoError("invalid code length" + at);
      }
      have_bits = true;
    } else if (tag == "match") {
      std::string strategy;
      fields >> strategy >> db.match_.k >> db.match_.tau;
      db.match_.strategy = strategy_from_name(strategy);
    } else if (tag == "user") {
      if (!have_bits) throw IoError("user record before bits header" + at);
      std::string user, digest_hex, xor_hex;
      fields >> user >> digest_hex >> xor_hex;
      if (user.empty() || digest_hex.size() != 128) {
        throw IoError("malformed user record (digest must be 128 hex chars)" + at);
      }
      DbEntry entry;
      try {
        entry.digest = Digest::from_hex(digest_hex);
        entry.xor_bits = BitString::from_hex(
            xor_hex, static_cast<std::size_t>(2 * db.code_bits_));
      } catch (const Error& e) {
        throw IoError(std::string(e.what()) + at);
      }
      db.insert(user, std::move(entry));
    } else {
      throw IoError("unknown record tag '" + tag + "'" + at);
    }
  }
  if (!have_app || !have_bits) {
    throw IoError("database '" + path + "' is missing app/bits headers");
  }
  return db;
}

TemplateDatabase enroll_all(const Dataset& dataset, const DfhModel& model,
                            const EnrollConfig& cfg, BitSource& source) {
  if (cfg.instability_tolerance < 0 || cfg.instability_tolerance > 1) {
    throw InputError("instability tolerance must be in [0,1]");
  }
  cfg.match.validate();
  TemplateDatabase db(cfg.app_id, model.code_bits(), cfg.match);

  // Collect per-user code histograms over train samples (sorted user order
  // so XOR-string draws are reproducible under a seeded source).
  std::map<std::string, std::map<BitString, int>> histograms;
  for (const auto* rec : dataset.by_split(Split::kTrain)) {
    histograms[rec->user_id][model.forward(rec->sample).code] += 1;
  }

  std::vector<std::string> unstable;
  std::map<BitString, std::string> code_owner;
  for (const auto& [user, hist] : histograms) {
    int total = 0, modal_n = 0;
    const BitString* modal = nullptr;
    for (const auto& [code, n] : hist) {
      total += n;
      if (n > modal_n) {
        modal_n = n;
        modal = &code;
      }
    }
    const double instability = 1.0 - double(modal_n) / double(total);
    if (instability > cfg.instability_tolerance) {
      unstable.push_back(user);
      continue;
    }
    if (!cfg.allow_code_collisions) {
      auto [it, inserted] = code_owner.emplace(*modal, user);
      if (!inserted) {
        throw EnrollmentError("users '" + it->second + "' and '" + user +
                                  "' share one stable code",
                              {it->second, user});
      }
    }
    const XorString xs =
        generate_xor_string(model.code_bits(), source, cfg.app_id, user);
    DbEntry entry;
    entry.digest = protect_code(*modal, xs);
    entry.xor_bits = xs.bits;
    db.insert(user, std::move(entry));
  }
  if (!unstable.empty()) {
    std::string msg = "stable-code instability above tolerance for users:";
    for (const auto& u : unstable) msg += " " + u;
    throw EnrollmentError(msg, unstable);
  }
  return db;
}

}  // namespace stablehash

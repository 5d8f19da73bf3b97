#include "stablehash/pipeline.hpp"

#include "stablehash/database.hpp"

namespace stablehash {

XorString generate_xor_string(int code_bits, BitSource& source,
                              std::string app_id, std::string user_id) {
  if (code_bits <= 0) throw InputError("code length must be positive");
  if (code_bits % 4 != 0) {
    throw InputError("code length must be a multiple of 4 bits so the 2L-bit "
                     "XOR string packs into whole bytes");
  }
  XorString xs;
  xs.bits = source.bits(static_cast<std::size_t>(2 * code_bits));
  xs.app_id = std::move(app_id);
  xs.user_id = std::move(user_id);
  return xs;
}

BitString make_cancelable(const BitString& stable_code, const XorString& xs) {
  if (xs.bits.size() != 2 * stable_code.size()) {
    throw InputError("XOR string length " + std::to_string(xs.bits.size()) +
                     " is not twice the code length " +
                     std::to_string(stable_code.size()));
  }
  return BitString::concat(stable_code ^ xs.mask(), xs.salt());
}

Digest protect(const BitString& cancelable_template) {
  const auto bytes = cancelable_template.packed();
  return sha3_512(std::span<const std::uint8_t>(bytes.data(), bytes.size()));
}

Digest protect_code(const BitString& stable_code, const XorString& xs) {
  return protect(make_cancelable(stable_code, xs));
}

void revoke_and_reissue(const BiometricSample& fresh_sample, const DfhModel& model,
                        TemplateDatabase& db, const std::string& user_id,
                        BitSource& source) {
  if (!db.has_user(user_id)) {
    throw RevocationError("user '" + user_id + "' is not enrolled");
  }
  if (model.code_bits() != db.code_bits()) {
    throw ConfigError("model code length does not match database");
  }
  const auto& old_entry = db.entry(user_id);
  const BitString code = model.forward(fresh_sample).code;
  XorString old_xs = db.xor_string(user_id);
  if (protect_code(code, old_xs) != old_entry.digest) {
    throw RevocationError("fresh sample for '" + user_id +
                          "' does not reproduce the enrolled stable code");
  }
  const XorString fresh = generate_xor_string(db.code_bits(), source,
                                              db.app_id(), user_id);
  DbEntry entry;
  entry.digest = protect_code(code, fresh);
  entry.xor_bits = fresh.bits;
  db.remove(user_id);
  db.insert(user_id, std::move(entry));
}

}  // namespace stablehash

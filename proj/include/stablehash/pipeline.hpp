#pragma once

#include <string>

#include "stablehash/bits.hpp"
#include "stablehash/digest.hpp"
#include "stablehash/model.hpp"
#include "stablehash/rng.hpp"

namespace stablehash {

/// Public application/user-specific 2L-bit string. The first L bits mask
/// the stable code, the last L bits are the salt. Never a secret.
struct XorString {
  BitString bits;  // length 2L
  std::string app_id;
  std::string user_id;

  std::size_t code_bits() const { return bits.size() / 2; }
  BitString mask() const { return bits.slice(0, code_bits()); }
  BitString salt() const { return bits.slice(code_bits(), code_bits()); }
};

/// Uniformly random 2L-bit XOR string. L must be a positive multiple of 4
/// so that 2L packs into whole bytes.
XorString generate_xor_string(int code_bits, BitSource& source,
                              std::string app_id = {}, std::string user_id = {});

/// H = (S xor I_1) || I_2. Lengths are checked: |S| = L, |I| = 2L.
BitString make_cancelable(const BitString& stable_code, const XorString& xs);

/// SHA3-512 over the canonical serialization of the cancelable template
/// (MSB-first packing, zero-padded to whole bytes).
Digest protect(const BitString& cancelable_template);

/// Convenience: stable code + XOR string -> protected digest.
Digest protect_code(const BitString& stable_code, const XorString& xs);

class TemplateDatabase;

/// Replaces a user's XOR string and protected template. The fresh sample
/// must reproduce the currently enrolled stable code (checked against the
/// stored digest); otherwise RevocationError is thrown and the database
/// is left untouched.
void revoke_and_reissue(const BiometricSample& fresh_sample, const DfhModel& model,
                        TemplateDatabase& db, const std::string& user_id,
                        BitSource& source);

}  // namespace stablehash

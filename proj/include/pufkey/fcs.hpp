// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pufkey/block_code.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pufkey::fcs {

// Public artifact of a fuzzy-commitment enrollment: W = Enc(S) xor X plus
// bookkeeping. Never contains the secret.
struct EnrollmentRecord {
  std::vector<std::uint8_t> helper;  // n_c bits
  std::string code_name;
  std::string quantizer_hash;

  std::string to_json() const;
  static EnrollmentRecord from_json(const std::string& text);
};

EnrollmentRecord enroll(const code::BlockCode& code, std::span<const std::uint8_t> x,
                        std::span<const std::uint8_t> secret, const std::string& quantizer_hash = "");

// Decode(W xor Y); recovers the secret whenever wt(x xor y) <= t. A nullopt
// is a decode-failure verdict, not an error.
std::optional<std::vector<std::uint8_t>> reconstruct(const code::BlockCode& code, const EnrollmentRecord& record,
                                                     std::span<const std::uint8_t> y);

enum class Grouping { OneBitPerCoefficient, AllBitsPerCoefficient };

// Per-symbol correctness probabilities. With OneBitPerCoefficient each code
// symbol is one coefficient bit; with AllBitsPerCoefficient a "symbol error"
// means every bit of that coefficient flips (the conservative design model).
struct ErrorProfile {
  std::vector<double> correctness;
  Grouping grouping = Grouping::OneBitPerCoefficient;
};

// Exact Pr[#symbol errors > t] for independent non-identical symbols
// (Poisson-binomial tail via the DFT characteristic-function method).
double block_error_exact(const ErrorProfile& profile, int t);

// Exhaustive I(S; W) in bits for uniform S and i.i.d. Bernoulli(x_bias) X.
// Zero (to numerical precision) for unbiased X: the helper is a one-time pad.
double secrecy_audit(const code::BlockCode& code, double x_bias = 0.5);

}  // namespace pufkey::fcs

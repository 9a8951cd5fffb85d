// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/fcs.hpp"

#include "pufkey/common.hpp"
#include "pufkey/poisson_binomial.hpp"

#include "json.hpp"

#include <cmath>
#include <stdexcept>

namespace pufkey::fcs {

std::string EnrollmentRecord::to_json() const {
  nlohmann::json j{{"scheme", "FCS"},
                   {"code", code_name},
                   {"helper_bits", helper.size()},
                   {"helper_hex", bits_to_hex(helper)},
                   {"quantizer_hash", quantizer_hash}};
  return j.dump();
}

EnrollmentRecord EnrollmentRecord::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("scheme", "") != "FCS") throw std::invalid_argument("EnrollmentRecord: scheme is not FCS");
  EnrollmentRecord rec;
  rec.code_name = j.at("code").get<std::string>();
  rec.quantizer_hash = j.value("quantizer_hash", "");
  std::size_t n_bits = j.at("helper_bits").get<std::size_t>();
  rec.helper = hex_to_bits(j.at("helper_hex").get<std::string>(), n_bits);
  return rec;
}

EnrollmentRecord enroll(const code::BlockCode& code, std::span<const std::uint8_t> x,
                        std::span<const std::uint8_t> secret, const std::string& quantizer_hash) {
  if (static_cast<int>(x.size()) != code.length()) throw std::invalid_argument("fcs::enroll: x length != n_c");
  if (static_cast<int>(secret.size()) != code.dimension()) {
    throw std::invalid_argument("fcs::enroll: secret length != k_c");
  }
  auto cw = code.encode(secret);
  EnrollmentRecord rec;
  rec.code_name = code.name();
  rec.quantizer_hash = quantizer_hash;
  rec.helper.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) rec.helper[i] = (cw[i] ^ x[i]) & 1u;
  return rec;
}

std::optional<std::vector<std::uint8_t>> reconstruct(const code::BlockCode& code, const EnrollmentRecord& record,
                                                     std::span<const std::uint8_t> y) {
  if (static_cast<int>(y.size()) != code.length()) throw std::invalid_argument("fcs::reconstruct: y length != n_c");
  if (record.helper.size() != y.size()) throw std::invalid_argument("fcs::reconstruct: helper length mismatch");
  std::vector<std::uint8_t> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = (record.helper[i] ^ y[i]) & 1u;
  return code.decode(r);
}

double block_error_exact(const ErrorProfile& profile, int t) {
  if (t < 0) throw std::invalid_argument("block_error_exact: negative t");
  std::vector<double> err(profile.correctness.size());
  for (std::size_t i = 0; i < err.size(); ++i) {
    double p = profile.correctness[i];
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("block_error_exact: correctness outside [0,1]");
    err[i] = 1.0 - p;
  }
  return pb::tail(err, t);
}

double secrecy_audit(const code::BlockCode& code, double x_bias) {
  int n = code.length();
  int k = code.dimension();
  if (n + k > 24) throw std::invalid_argument("secrecy_audit: instance too large for exhaustive enumeration");
  if (x_bias <= 0.0 || x_bias >= 1.0) throw std::invalid_argument("secrecy_audit: bias outside (0,1)");

  std::size_t n_states = std::size_t{1} << n;
  std::size_t s_states = std::size_t{1} << k;

  // Codewords of all messages.
  std::vector<std::uint32_t> codewords(s_states);
  for (std::size_t s = 0; s < s_states; ++s) {
    std::vector<std::uint8_t> msg(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) msg[static_cast<std::size_t>(i)] = (s >> i) & 1u;
    auto cw = code.encode(msg);
    std::uint32_t packed = 0;
    for (int i = 0; i < n; ++i) packed |= static_cast<std::uint32_t>(cw[static_cast<std::size_t>(i)] & 1u) << i;
    codewords[s] = packed;
  }

  // P_X over all n-bit outputs.
  std::vector<double> px(n_states);
  for (std::size_t x = 0; x < n_states; ++x) {
    double p = 1.0;
    for (int i = 0; i < n; ++i) p *= ((x >> i) & 1u) ? x_bias : (1.0 - x_bias);
    px[x] = p;
  }

  // Joint p(s, w) = 2^{-k} P_X(cw(s) xor w); marginal over s gives P_W.
  double ps = 1.0 / static_cast<double>(s_states);
  std::vector<double> pw(n_states, 0.0);
  for (std::size_t s = 0; s < s_states; ++s) {
    for (std::size_t w = 0; w < n_states; ++w) {
      pw[w] += ps * px[codewords[s] ^ w];
    }
  }
  double mi = 0.0;
  for (std::size_t s = 0; s < s_states; ++s) {
    for (std::size_t w = 0; w < n_states; ++w) {
      double joint = ps * px[codewords[s] ^ w];
      if (joint <= 0.0 || pw[w] <= 0.0) continue;
      mi += joint * std::log2(joint / (ps * pw[w]));
    }
  }
  return mi < 0.0 ? 0.0 : mi;
}

}  // namespace pufkey::fcs

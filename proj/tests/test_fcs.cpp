// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/fcs.hpp"

#include "pufkey/common.hpp"

#include "doctest.h"

#include <cmath>

using namespace pufkey;
using namespace pufkey::fcs;

namespace {

std::vector<std::uint8_t> random_bits(int n, Rng& rng) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(n));
  for (auto& b : v) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
  return v;
}

// Closed-form binomial tail oracle for the end-to-end comparison.
double binomial_tail(int n, double p, int t) {
  long double tail = 0.0L;
  for (int j = t + 1; j <= n; ++j) {
    long double lt = std::lgamma(static_cast<long double>(n + 1)) - std::lgamma(static_cast<long double>(j + 1)) -
                     std::lgamma(static_cast<long double>(n - j + 1)) + j * std::log(static_cast<long double>(p)) +
                     (n - j) * std::log(1.0L - static_cast<long double>(p));
    tail += std::exp(lt);
  }
  return static_cast<double>(tail);
}

}  // namespace

TEST_CASE("enrollment self-cancellation and zero-secret cases") {
  auto code = code::make_code("bch_15_7");
  Rng rng(5);
  auto s = random_bits(7, rng);
  auto cw = code->encode(s);

  auto rec = enroll(*code, cw, s);
  CHECK(hamming_weight(rec.helper) == 0);

  std::vector<std::uint8_t> zero(7, 0);
  auto x = random_bits(15, rng);
  auto rec2 = enroll(*code, x, zero);
  CHECK(rec2.helper == x);
}

TEST_CASE("noiseless roundtrip recovers the secret") {
  auto code = code::make_code("bch_255_131");
  Rng rng(6);
  auto x = random_bits(255, rng);
  auto s = random_bits(131, rng);
  auto rec = enroll(*code, x, s);
  auto got = reconstruct(*code, rec, x);
  REQUIRE(got.has_value());
  CHECK(*got == s);
}

TEST_CASE("reconstruction succeeds within the correction radius") {
  auto code = code::make_code("bch_255_131");
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    auto x = random_bits(255, rng);
    auto s = random_bits(131, rng);
    auto rec = enroll(*code, x, s);
    auto y = x;
    int nerr = static_cast<int>(rng.next_u64() % 19);
    for (int e = 0; e < nerr; ++e) y[rng.next_u64() % 255] ^= 1u;  // may repeat; weight <= 18
    auto got = reconstruct(*code, rec, y);
    REQUIRE(got.has_value());
    CHECK(*got == s);
  }
}

TEST_CASE("complement measurement fails or mismatches, never crashes") {
  auto code = code::make_code("bch_15_7");
  Rng rng(8);
  auto x = random_bits(15, rng);
  auto s = random_bits(7, rng);
  auto rec = enroll(*code, x, s);
  auto y = x;
  for (auto& b : y) b ^= 1u;
  auto got = reconstruct(*code, rec, y);
  if (got) CHECK(*got != s);
}

TEST_CASE("an unrelated measurement almost never recovers the key") {
  auto code = code::make_code("bch_255_131");
  Rng rng(9);
  auto x = random_bits(255, rng);
  auto s = random_bits(131, rng);
  auto rec = enroll(*code, x, s);
  int hits = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto y = random_bits(255, rng);
    auto got = reconstruct(*code, rec, y);
    if (got && *got == s) ++hits;
  }
  // Success needs wt(x xor y) <= 18 out of 255 fair coins; tail ~ 1e-45.
  CHECK(hits == 0);
}

TEST_CASE("block_error_exact matches a binomial tail for equal profiles") {
  ErrorProfile prof;
  prof.correctness.assign(255, 1.0 - 0.0097);
  double got = block_error_exact(prof, 18);
  CHECK(std::abs(got - binomial_tail(255, 0.0097, 18)) < 1e-12);
  CHECK(block_error_exact(prof, 255) == 0.0);
  prof.correctness[3] = 1.5;
  CHECK_THROWS_AS(block_error_exact(prof, 18), std::invalid_argument);
}

TEST_CASE("end-to-end key-error rate matches the exact block error") {
  // BSC(p) with p giving a measurable block error around 1e-2.
  auto code = code::make_code("bch_15_7");
  const double p = 0.08;
  ErrorProfile prof;
  prof.correctness.assign(15, 1.0 - p);
  double predicted = block_error_exact(prof, code->correction_radius());

  Rng rng(10);
  const int trials = 20000;
  int errors = 0;
  for (int trial = 0; trial < trials; ++trial) {
    auto x = random_bits(15, rng);
    auto s = random_bits(7, rng);
    auto rec = enroll(*code, x, s);
    auto y = x;
    for (auto& b : y) {
      if (rng.bernoulli(p)) b ^= 1u;
    }
    auto got = reconstruct(*code, rec, y);
    // Both failures and miscorrections count as key errors.
    if (!got || *got != s) ++errors;
  }
  double empirical = static_cast<double>(errors) / trials;
  double se = std::sqrt(predicted * (1.0 - predicted) / trials);
  // Miscorrections beyond the radius can only help, so the empirical rate
  // sits at or slightly below the bounded-distance prediction.
  CHECK(empirical <= predicted + 3.0 * se);
  CHECK(empirical >= predicted - 3.0 * se - 0.2 * predicted);
}

TEST_CASE("secrecy audit: uniform source leaks nothing") {
  auto rep = code::make_code("rep_3_1");
  CHECK(secrecy_audit(*rep) <= 1e-12);

  code::GeneratorMatrixCode toy("toy_3_2", {{1, 0, 1}, {0, 1, 1}});
  CHECK(secrecy_audit(toy) <= 1e-12);
}

TEST_CASE("secrecy audit: biased source leaks") {
  auto rep = code::make_code("rep_3_1");
  double mi = secrecy_audit(*rep, 0.9);
  CHECK(mi > 0.01);
}

TEST_CASE("enrollment record json round trip") {
  auto code = code::make_code("bch_255_131");
  Rng rng(11);
  auto x = random_bits(255, rng);
  auto s = random_bits(131, rng);
  auto rec = enroll(*code, x, s, "deadbeef00000000");
  auto text = rec.to_json();
  // 255 bits pack into 32 bytes = 64 hex characters.
  CHECK(text.find("\"scheme\":\"FCS\"") != std::string::npos);
  auto back = EnrollmentRecord::from_json(text);
  CHECK(back.helper == rec.helper);
  CHECK(back.code_name == "bch_255_131");
  CHECK(back.quantizer_hash == "deadbeef00000000");
  CHECK(bits_to_hex(rec.helper).size() == 64);
}

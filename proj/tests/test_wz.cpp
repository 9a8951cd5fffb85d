// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/wz.hpp"

#include "pufkey/common.hpp"
#include "pufkey/polar.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <set>

using namespace pufkey;
using namespace pufkey::wz;

namespace {

std::vector<std::uint8_t> random_bits(int n, Rng& rng) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(n));
  for (auto& b : v) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
  return v;
}

// Small, fast design used by most cases.
DesignReport small_design() {
  DesignOptions opt;
  opt.construction_trials = 20000;
  opt.sweep_trials = 800;
  opt.distortion_trials = 200;
  opt.final_distortion_trials = 500;
  return design_nested(256, 64, 0.02, 0.02, 4242, opt);
}

}  // namespace

TEST_CASE("distortion formula reference points") {
  CHECK(distortion_from_pc(0.1819, 0.15) == doctest::Approx(0.0456).epsilon(1e-4 / 0.0456));
  CHECK(distortion_from_pc(0.2682, 0.15) == doctest::Approx(0.1689).epsilon(1e-4 / 0.1689));
  CHECK(distortion_from_pc(0.15, 0.15) == 0.0);
  CHECK_THROWS_AS(distortion_from_pc(0.10, 0.15), std::invalid_argument);
}

TEST_CASE("spec bookkeeping and validation") {
  NestedPolarSpec spec;
  spec.n = 8;
  spec.frozen_f1 = {0, 1};
  spec.frozen_fw = {2, 4};
  spec.validate();
  CHECK(spec.key_length() == 4);
  CHECK(spec.key_positions() == std::vector<int>{3, 5, 6, 7});
  CHECK(spec.m1() + spec.m2() + spec.key_length() == 8);

  NestedPolarSpec bad = spec;
  bad.frozen_fw = {1, 4};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("spec json round trip uses 1-based indices") {
  NestedPolarSpec spec;
  spec.n = 16;
  spec.frozen_f1 = {0, 1, 2};
  spec.frozen_fw = {3, 5};
  spec.p_a = 0.15;
  spec.p_c = 0.18;
  spec.e_q = 0.04;
  spec.target_pb = 1e-3;
  auto text = spec.to_json();
  CHECK(text.find("\"frozen_f1\":[1,2,3]") != std::string::npos);
  CHECK(text.find("\"frozen_fw\":[4,6]") != std::string::npos);
  auto back = NestedPolarSpec::from_json(text);
  CHECK(back.frozen_f1 == spec.frozen_f1);
  CHECK(back.frozen_fw == spec.frozen_fw);
  CHECK(back.p_c == doctest::Approx(spec.p_c));
  CHECK(back.spec_hash() == spec.spec_hash());
}

TEST_CASE("in-code source quantizes to itself at q -> 0") {
  Rng rng(3);
  NestedPolarSpec spec;
  spec.n = 64;
  auto rank = polar::construct_reliability(64, 0.1, 10000, 5);
  spec.frozen_f1 = rank.least_reliable(20);
  auto fw_candidates = rank.least_reliable(30);
  std::set<int> f1(spec.frozen_f1.begin(), spec.frozen_f1.end());
  for (int i : fw_candidates) {
    if (!f1.count(i)) spec.frozen_fw.push_back(i);
  }
  std::sort(spec.frozen_fw.begin(), spec.frozen_fw.end());
  spec.validate();

  // x = transform(u) with u zero on F1 is a C1 codeword.
  std::vector<std::uint8_t> u(64, 0);
  for (int i = 0; i < 64; ++i) {
    if (!f1.count(i)) u[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(rng.next_u64() & 1u);
  }
  auto x = polar::transform(u);
  auto enr = enroll(spec, x, 0.0);
  CHECK(enr.distortion == 0.0);
  CHECK(enr.quantized == x);
}

TEST_CASE("noiseless reconstruction recovers the secret") {
  auto report = small_design();
  REQUIRE(report.feasible);
  const auto& spec = report.spec;
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = random_bits(spec.n, rng);
    auto enr = enroll(spec, x, spec.e_q);
    auto key = reconstruct(spec, x, enr.helper, spec.e_q);  // y = x, residual is pure distortion
    CHECK(key == enr.secret);
  }
}

TEST_CASE("designed spec: nesting, bookkeeping, rates") {
  auto report = small_design();
  REQUIRE(report.feasible);
  const auto& spec = report.spec;

  // F1 and Fw partition F; every index of F1 is in F.
  std::set<int> fw(spec.frozen_fw.begin(), spec.frozen_fw.end());
  for (int i : spec.frozen_f1) CHECK_FALSE(fw.count(i));
  CHECK(spec.m1() + spec.m2() == spec.n - spec.key_length());
  CHECK(spec.key_length() == 64);

  // Nesting: every codeword of C is a codeword of C1. A codeword of C has
  // u zero on all of F; it is in C1 iff u is zero on F1, which holds since
  // F1 is a subset of F.
  CHECK(spec.m2() > 0);

  // Storage plus key rate strictly inside the Slepian-Wolf line.
  double rs = static_cast<double>(spec.key_length()) / spec.n;
  double rw = static_cast<double>(spec.m2()) / spec.n;
  CHECK(rs + rw < 1.0);

  // Measured distortion close to the design target.
  CHECK(report.measured_distortion <= report.target_distortion * 1.15);
  CHECK(report.measured_distortion >= report.target_distortion * 0.5);
}

TEST_CASE("distortion decreases monotonically along the shrink path") {
  auto report = small_design();
  REQUIRE(report.feasible);
  // The recorded path is sorted by decreasing m1; distortion must not grow
  // beyond Monte-Carlo noise as freedom increases.
  REQUIRE(report.shrink_path.size() >= 3);
  for (std::size_t i = 0; i + 1 < report.shrink_path.size(); ++i) {
    CHECK(report.shrink_path[i].m1 > report.shrink_path[i + 1].m1);
    CHECK(report.shrink_path[i + 1].distortion <= report.shrink_path[i].distortion + 0.01);
  }
}

TEST_CASE("full freedom drives distortion to zero") {
  CHECK(mean_distortion(64, {}, 4, 0.1, 50, 33) == 0.0);
}

TEST_CASE("system key-error rate is tiny at the design point and grows with a flipped helper bit") {
  auto report = small_design();
  REQUIRE(report.feasible);
  const auto& spec = report.spec;

  // Stressed channel: somewhat above the design point so errors are visible.
  double p_stress = std::min(0.49, spec.p_c + 0.06);
  Rng rng(21);
  int errors_clean = 0, errors_tampered = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    Rng trial_rng(derive_seed(777, static_cast<std::uint64_t>(t)));
    auto x = random_bits(spec.n, trial_rng);
    auto enr = enroll(spec, x, spec.e_q);
    auto y = x;
    for (auto& b : y) {
      if (trial_rng.bernoulli(p_stress)) b ^= 1u;
    }
    double p_total = spec.e_q * (1 - p_stress) + (1 - spec.e_q) * p_stress;
    if (reconstruct(spec, y, enr.helper, p_total) != enr.secret) ++errors_clean;
    auto tampered = enr.helper;
    tampered[rng.next_u64() % tampered.size()] ^= 1u;
    if (reconstruct(spec, y, tampered, p_total) != enr.secret) ++errors_tampered;
  }
  CHECK(errors_tampered > errors_clean);
}

TEST_CASE("design reports infeasibility when even p_A misses the target") {
  // Rate 1/2 at a crossover far beyond what n=64 can handle.
  DesignOptions opt;
  opt.construction_trials = 5000;
  opt.sweep_trials = 400;
  auto report = design_nested(64, 32, 0.2, 1e-3, 77, opt);
  CHECK_FALSE(report.feasible);
  CHECK(!report.infeasible_reason.empty());
}

TEST_CASE("enrollment and reconstruction are deterministic given inputs") {
  auto report = small_design();
  REQUIRE(report.feasible);
  const auto& spec = report.spec;
  Rng rng(51);
  auto x = random_bits(spec.n, rng);
  auto a = enroll(spec, x, spec.e_q);
  auto b = enroll(spec, x, spec.e_q);
  CHECK(a.helper == b.helper);
  CHECK(a.secret == b.secret);
  CHECK(a.quantized == b.quantized);
  auto k1 = reconstruct(spec, x, a.helper, spec.e_q);
  auto k2 = reconstruct(spec, x, a.helper, spec.e_q);
  CHECK(k1 == k2);
}

TEST_CASE("helper padding: median needs nothing, higher quantiles cost more") {
  auto report = small_design();
  REQUIRE(report.feasible);
  const auto& spec = report.spec;

  auto median = helper_quantile_padding(spec, 0.5, 400, 99);
  CHECK(median.extra_bits == 0);

  auto q90 = helper_quantile_padding(spec, 0.9, 400, 99);
  auto q99 = helper_quantile_padding(spec, 0.99, 400, 99);
  CHECK(q90.extra_bits <= q99.extra_bits);
  CHECK_FALSE(q90.low_trials_warning);

  auto extreme = helper_quantile_padding(spec, 0.9999, 400, 99);
  CHECK(extreme.low_trials_warning);
}

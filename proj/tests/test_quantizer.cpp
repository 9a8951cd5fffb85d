// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/quantizer.hpp"

#include "pufkey/common.hpp"
#include "pufkey/normal.hpp"

#include "doctest.h"

#include <cmath>
#include <vector>

using namespace pufkey;
using namespace pufkey::quantizer;

TEST_CASE("fit_gaussian rejects degenerate samples") {
  std::vector<double> flat(10, 5.0);
  CHECK_THROWS_AS(fit_gaussian(flat), std::invalid_argument);
  std::vector<double> two{1.0, 2.0};
  CHECK_THROWS_AS(fit_gaussian(two), std::invalid_argument);
}

TEST_CASE("fit_gaussian concentrates at 1e5 draws from N(2,9)") {
  Rng rng(21);
  std::vector<double> samples(100000);
  for (auto& s : samples) s = 2.0 + 3.0 * rng.gaussian();
  auto fit = fit_gaussian(samples);
  CHECK(std::abs(fit.mean - 2.0) < 0.05);
  CHECK(fit.stddev == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("aicc exceeds aic by the finite-sample correction") {
  Rng rng(22);
  std::vector<double> samples(50);
  for (auto& s : samples) s = rng.gaussian();
  auto fit = fit_gaussian(samples);
  double aic = -2.0 * fit.loglik + 4.0;
  CHECK(fit.aicc > aic);
  CHECK(fit.aicc == doctest::Approx(aic + 12.0 / 47.0));
  CHECK(fit.bic == doctest::Approx(-2.0 * fit.loglik + 2.0 * std::log(50.0)));
}

TEST_CASE("equalize") {
  CHECK(equalize(3.0, 3.0, 2.0) == 0.0);
  CHECK(equalize(5.0, 3.0, 2.0) == 1.0);
  CHECK(equalize(7.0, 3.0, 2.0) == 2.0);
  CHECK_THROWS_AS(equalize(1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("boundaries: median split, quartiles, symmetry") {
  auto b1 = boundaries(1);
  REQUIRE(b1.size() == 3);
  CHECK(std::isinf(b1[0]));
  CHECK(b1[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::isinf(b1[2]));

  auto b2 = boundaries(2);
  REQUIRE(b2.size() == 5);
  // Phi^{-1}(0.25), frozen from a high-precision evaluation.
  CHECK(b2[1] == doctest::Approx(-0.6744897501960817).epsilon(1e-12));
  CHECK(b2[2] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(b2[3] == doctest::Approx(0.6744897501960817).epsilon(1e-12));

  auto b3 = boundaries(3);
  for (int k = 1; k < 8; ++k) {
    CHECK(b3[static_cast<std::size_t>(k)] == doctest::Approx(-b3[static_cast<std::size_t>(8 - k)]).epsilon(1e-12));
  }
  for (std::size_t k = 1; k + 1 < b3.size(); ++k) CHECK(b3[k] < b3[k + 1]);

  CHECK_THROWS_AS(boundaries(0), std::invalid_argument);
  CHECK_THROWS_AS(boundaries(9), std::invalid_argument);
}

TEST_CASE("quantize: sign rule and boundary tie") {
  auto r = quantize(-1.0, 1);
  CHECK(r.interval == 1);
  REQUIRE(r.bits.size() == 1);
  CHECK(r.bits[0] == 0);
  // A value exactly on a boundary belongs to the lower interval.
  CHECK(quantize(0.0, 1).interval == 1);
  CHECK(quantize(1e-12, 1).interval == 2);
}

TEST_CASE("quantize K=2 runs through the Gray sequence 00,01,11,10") {
  std::vector<std::vector<std::uint8_t>> expected{{0, 0}, {0, 1}, {1, 1}, {1, 0}};
  std::vector<double> probes{-1.5, -0.3, 0.3, 1.5};
  for (int k = 0; k < 4; ++k) {
    auto r = quantize(probes[static_cast<std::size_t>(k)], 2);
    CHECK(r.interval == k + 1);
    CHECK(r.bits == expected[static_cast<std::size_t>(k)]);
  }
}

TEST_CASE("adjacent intervals differ in exactly one bit for K <= 4") {
  for (int k = 1; k <= 4; ++k) {
    for (std::uint32_t j = 0; j + 1 < (1u << k); ++j) {
      std::uint32_t a = gray_code(j), b = gray_code(j + 1);
      std::uint32_t diff = a ^ b;
      CHECK(diff != 0);
      CHECK((diff & (diff - 1)) == 0);
    }
  }
}

TEST_CASE("correctness probability: zero noise and Monte-Carlo oracle") {
  CHECK(correctness_probability(1, 0.0) == 1.0);
  CHECK(correctness_probability(4, 0.0) == 1.0);

  // Oracle: draw t ~ N(0,1) and noise ~ N(0, 0.1^2); the sign quantizer keeps
  // its interval iff sign(t + noise) == sign(t).
  const double sigma = 0.1;
  const int trials = 10000000;
  Rng rng(404);
  long long stay = 0;
  for (int i = 0; i < trials; ++i) {
    double t = rng.gaussian();
    double noisy = t + sigma * rng.gaussian();
    if ((t <= 0.0) == (noisy <= 0.0)) ++stay;
  }
  double mc = static_cast<double>(stay) / trials;
  double se = std::sqrt(mc * (1.0 - mc) / trials);
  double pc = correctness_probability(1, sigma);
  CHECK(std::abs(pc - mc) < 3.0 * se);
  // Same quantity from an independent high-precision evaluation.
  CHECK(pc == doctest::Approx(0.968274482569).epsilon(1e-9));
}

TEST_CASE("correctness probability decreases in K and in noise") {
  for (double sigma : {0.01, 0.05, 0.1, 0.2, 0.5}) {
    double prev = 2.0;
    for (int k = 1; k <= 4; ++k) {
      double pc = correctness_probability(k, sigma);
      CHECK(pc > 0.0);
      CHECK(pc < prev);
      prev = pc;
    }
  }
  for (int k = 1; k <= 4; ++k) {
    double prev = 2.0;
    for (double sigma : {0.01, 0.05, 0.1, 0.2, 0.5}) {
      double pc = correctness_probability(k, sigma);
      CHECK(pc < prev);
      prev = pc;
    }
  }
}

TEST_CASE("correctness thresholds reproduce the published design table") {
  // l = 256, target 1e-9, C_max 16..20.
  const double expected[] = {0.9902, 0.9889, 0.9875, 0.9860, 0.9844};
  for (int i = 0; i < 5; ++i) {
    double got = correctness_threshold(256, 16 + i);
    CHECK(std::abs(got - expected[i]) < 1e-4);
  }
}

TEST_CASE("threshold is minimal and self-consistent") {
  auto tail_oracle = [](int l, int c_max, double p) {
    // Independent oracle: straight summation at long-double precision.
    long double tail = 0.0L;
    for (int c = c_max + 1; c <= l; ++c) {
      long double t = std::lgamma(static_cast<long double>(l + 1)) - std::lgamma(static_cast<long double>(c + 1)) -
                      std::lgamma(static_cast<long double>(l - c + 1)) +
                      c * std::log(1.0L - static_cast<long double>(p)) + (l - c) * std::log(static_cast<long double>(p));
      tail += std::exp(t);
    }
    return static_cast<double>(tail);
  };
  double pbar = correctness_threshold(256, 18);
  CHECK(tail_oracle(256, 18, pbar) <= 1e-9);
  CHECK(tail_oracle(256, 18, pbar - 1e-4) > 1e-9);
}

TEST_CASE("threshold with C_max = l-1 reduces to the single-term tail") {
  int l = 64;
  double pbar = correctness_threshold(l, l - 1);
  // The root sits exactly on the target; allow for the oracle's own roundoff.
  CHECK(std::pow(1.0 - pbar, l) <= 1e-9 * (1.0 + 1e-6));
  CHECK(std::pow(1.0 - (pbar - 1e-4), l) > 1e-9);
  CHECK_THROWS_AS(correctness_threshold(64, 64), std::invalid_argument);
}

namespace {

// Largest equalized noise std for which P_c(k) still clears the threshold.
double sigma_for_k(int k, double threshold) {
  double lo = 0.0, hi = 2.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (correctness_probability(k, mid) >= threshold) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace

TEST_CASE("allocate_bits: e sums the C_max largest allocations") {
  std::vector<CoefficientModel> models;
  models.push_back({0.0, 1.0, 0.0});  // DC, never used
  int l = 16, c_max = 2;
  double threshold = correctness_threshold(l, c_max);
  models.push_back({0.0, 1.0, sigma_for_k(3, threshold) * 0.999});
  models.push_back({0.0, 1.0, sigma_for_k(3, threshold) * 0.999});
  models.push_back({0.0, 1.0, sigma_for_k(2, threshold) * 0.999});
  while (static_cast<int>(models.size()) < l) models.push_back({0.0, 1.0, sigma_for_k(1, threshold) * 0.999});

  auto design = allocate_bits(models, c_max);
  CHECK(design.bits[0] == 0);
  CHECK(design.bits[1] == 3);
  CHECK(design.bits[2] == 3);
  CHECK(design.bits[3] == 2);
  CHECK(design.required_correction == 6);
  CHECK(design.min_distance() == 13);
  int total = 0;
  for (int k : design.bits) total += k;
  CHECK(design.total_bits == total);
}

TEST_CASE("allocate_bits: one bit everywhere gives e = C_max") {
  std::vector<CoefficientModel> models(256, CoefficientModel{0.0, 1.0, 0.0});
  double threshold = correctness_threshold(256, 20);
  double sigma1 = sigma_for_k(1, threshold) * 0.999;
  REQUIRE(correctness_probability(1, sigma1) >= threshold);
  REQUIRE(correctness_probability(2, sigma1) < threshold);
  for (auto& m : models) m.noise_std_eq = sigma1;
  auto design = allocate_bits(models, 20);
  CHECK(design.total_bits == 255);
  CHECK(design.required_correction == 20);
}

TEST_CASE("allocate_bits: hopeless noise allocates nothing") {
  std::vector<CoefficientModel> models(32, CoefficientModel{0.0, 1.0, 5.0});
  auto design = allocate_bits(models, 4);
  CHECK(design.total_bits == 0);
  CHECK(design.required_correction == 0);
}

TEST_CASE("allocate_bits is monotone in C_max") {
  Rng rng(77);
  std::vector<CoefficientModel> models;
  models.push_back({0.0, 1.0, 0.0});
  for (int i = 1; i < 64; ++i) models.push_back({0.0, 1.0, 0.02 + 0.2 * rng.uniform()});
  auto prev = allocate_bits(models, 4);
  for (int c_max : {6, 8, 12, 16}) {
    auto next = allocate_bits(models, c_max);
    CHECK(next.threshold <= prev.threshold + 1e-12);
    for (std::size_t i = 0; i < models.size(); ++i) {
      CHECK(next.bits[i] >= prev.bits[i]);
    }
    prev = next;
  }
}

TEST_CASE("extract_bits basics") {
  std::vector<CoefficientModel> models{{0.0, 1.0, 0.0}, {1.0, 2.0, 0.0}};
  Design d;
  d.bits = {0, 1};
  d.total_bits = 1;

  Eigen::VectorXd coeffs(2);
  coeffs << 99.0, 0.4;  // equalized second coefficient: (0.4-1)/2 = -0.3
  auto seq = extract_bits(d, models, coeffs);
  REQUIRE(seq.bits.size() == 1);
  CHECK(seq.bits[0] == 0);
  CHECK(seq.offsets == std::vector<int>{0, 0, 1});

  auto seq2 = extract_bits(d, models, coeffs);
  CHECK(seq.bits == seq2.bits);

  Design empty;
  empty.bits = {0, 0};
  empty.total_bits = 0;
  CHECK(extract_bits(empty, models, coeffs).bits.empty());
}

TEST_CASE("extracted bits are marginally unbiased on equalized Gaussians") {
  Rng rng(88);
  const int samples = 100000;
  for (int k : {1, 2, 3}) {
    std::vector<long long> ones(static_cast<std::size_t>(k), 0);
    for (int s = 0; s < samples; ++s) {
      auto r = quantize(rng.gaussian(), k);
      for (int b = 0; b < k; ++b) ones[static_cast<std::size_t>(b)] += r.bits[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < k; ++b) {
      double bias = std::abs(static_cast<double>(ones[static_cast<std::size_t>(b)]) / samples - 0.5);
      CHECK(bias <= 0.01);
    }
  }
}

TEST_CASE("design json and hash are stable") {
  Design d;
  d.c_max = 2;
  d.threshold = 0.5;
  d.target_pb = 1e-9;
  d.bits = {0, 1, 2};
  d.total_bits = 3;
  d.required_correction = 3;
  auto j = d.to_json();
  CHECK(j.find("\"dc_excluded\":true") != std::string::npos);
  CHECK(d.content_hash() == d.content_hash());
  Design d2 = d;
  d2.bits[2] = 1;
  d2.total_bits = 2;
  CHECK(d.content_hash() != d2.content_hash());
}

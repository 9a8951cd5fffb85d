// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/poisson_binomial.hpp"

#include "pufkey/common.hpp"

#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace pufkey;

namespace {

// Oracle: exact dynamic-programming convolution at long-double precision,
// independent of the DFT characteristic-function path under test.
std::vector<long double> convolution_pmf(const std::vector<double>& probs) {
  std::vector<long double> pmf{1.0L};
  for (double p : probs) {
    std::vector<long double> next(pmf.size() + 1, 0.0L);
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      next[k] += pmf[k] * (1.0L - static_cast<long double>(p));
      next[k + 1] += pmf[k] * static_cast<long double>(p);
    }
    pmf = std::move(next);
  }
  return pmf;
}

long double convolution_tail(const std::vector<double>& probs, int t) {
  auto pmf = convolution_pmf(probs);
  long double s = 0.0L;
  for (std::size_t m = pmf.size(); m-- > 0;) {
    if (static_cast<int>(m) > t) s += pmf[m];
  }
  return s;
}

// Oracle: closed-form binomial tail in log space for equal probabilities.
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

TEST_CASE("trivial tails") {
  std::vector<double> probs{0.1, 0.2, 0.3};
  CHECK(pb::tail(probs, 3) == 0.0);
  CHECK(pb::tail(probs, 7) == 0.0);
  CHECK(pb::tail(probs, -1) == 1.0);
}

TEST_CASE("probability validation") {
  std::vector<double> bad{0.1, 1.2};
  CHECK_THROWS_AS(pb::pmf(bad), std::invalid_argument);
  std::vector<double> neg{-0.1};
  CHECK_THROWS_AS(pb::pmf(neg), std::invalid_argument);
}

TEST_CASE("equal probabilities match the closed-form binomial tail") {
  // The operating regime of the (255,131,37) evaluation: per-bit error around
  // 1e-2 and tails near 1e-11.
  std::vector<double> probs(255, 0.0097);
  double got = pb::tail(probs, 18);
  double want = binomial_tail(255, 0.0097, 18);
  CHECK(std::abs(got - want) <= 1e-12);
  // Frozen from an independent high-precision evaluation.
  CHECK(want == doctest::Approx(1.3906497e-11).epsilon(1e-4));

  for (int t : {0, 5, 60, 254}) {
    CHECK(std::abs(pb::tail(probs, t) - binomial_tail(255, 0.0097, t)) <= 1e-12);
  }
}

TEST_CASE("random profiles match exact convolution within 1e-15") {
  Rng rng(515);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng.next_u64() % 64);
    std::vector<double> probs(static_cast<std::size_t>(n));
    for (auto& p : probs) p = rng.uniform();
    auto pmf = pb::pmf(probs);
    auto oracle = convolution_pmf(probs);
    REQUIRE(pmf.size() == oracle.size());
    for (std::size_t m = 0; m < pmf.size(); ++m) {
      CHECK(std::abs(pmf[m] - static_cast<double>(oracle[m])) <= 1e-15);
    }
    for (int t = -1; t <= n; ++t) {
      CHECK(std::abs(pb::tail(probs, t) - static_cast<double>(convolution_tail(probs, t))) <= 1e-15);
    }
  }
}

TEST_CASE("extreme probabilities are exact") {
  std::vector<double> probs{1.0, 0.0, 1.0, 0.5};
  auto pmf = pb::pmf(probs);
  // Two deterministic successes plus one fair coin: mass 1/2 at 2 and 3.
  CHECK(pmf[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(pmf[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pmf[3] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pb::tail(probs, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/polar.hpp"

#include "pufkey/common.hpp"

#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace pufkey;
using namespace pufkey::polar;

namespace {

std::vector<std::uint8_t> random_bits(int n, Rng& rng) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(n));
  for (auto& b : v) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
  return v;
}

}  // namespace

TEST_CASE("transform of zero is zero; 2-point kernel values") {
  std::vector<std::uint8_t> zero(8, 0);
  CHECK(transform(zero) == zero);

  // u * G_2 with G_2 = [[1,0],[1,1]].
  CHECK(transform(std::vector<std::uint8_t>{1, 0}) == std::vector<std::uint8_t>{1, 0});
  CHECK(transform(std::vector<std::uint8_t>{0, 1}) == std::vector<std::uint8_t>{1, 1});
  CHECK(transform(std::vector<std::uint8_t>{1, 1}) == std::vector<std::uint8_t>{0, 1});
}

TEST_CASE("transform is an involution up to n = 1024") {
  Rng rng(31);
  for (int n : {2, 8, 64, 256, 1024}) {
    auto u = random_bits(n, rng);
    CHECK(transform(transform(u)) == u);
  }
  CHECK_THROWS_AS(transform(std::vector<std::uint8_t>{1, 0, 1}), std::invalid_argument);
}

TEST_CASE("bsc_llrs signs and clipping") {
  std::vector<std::uint8_t> word{0, 1};
  auto l = bsc_llrs(word, 0.1);
  CHECK(l[0] == doctest::Approx(std::log(9.0)));
  CHECK(l[1] == doctest::Approx(-std::log(9.0)));
  auto hard = bsc_llrs(word, 0.0);
  CHECK(hard[0] == 30.0);
  CHECK(hard[1] == -30.0);
  auto tiny = bsc_llrs(word, 1e-20);
  CHECK(tiny[0] == 30.0);
}

TEST_CASE("n=2 construction freezes the degraded first channel") {
  for (double p : {0.05, 0.11, 0.3}) {
    auto rank = construct_reliability(2, p, 20000, 99);
    CHECK(rank.error_weight[0] > rank.error_weight[1]);
    CHECK(rank.least_reliable(1) == std::vector<int>{0});
  }
}

TEST_CASE("construction is reproducible and parallel equals serial") {
  auto a = construct_reliability(64, 0.1, 5000, 7, RunPolicy::Parallel);
  auto b = construct_reliability(64, 0.1, 5000, 7, RunPolicy::Serial);
  auto c = construct_reliability(64, 0.1, 5000, 8, RunPolicy::Serial);
  CHECK(a.error_weight == b.error_weight);
  CHECK(a.order == b.order);
  CHECK(a.error_weight != c.error_weight);
}

TEST_CASE("noiseless codeword decodes exactly under any frozen pattern") {
  Rng rng(41);
  for (int n : {8, 64, 256}) {
    for (int trial = 0; trial < 20; ++trial) {
      // Random frozen set with random frozen values.
      FrozenMap frozen(static_cast<std::size_t>(n), -1);
      std::vector<std::uint8_t> u(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        bool is_frozen = rng.bernoulli(0.5);
        std::uint8_t bit = static_cast<std::uint8_t>(rng.next_u64() & 1u);
        u[static_cast<std::size_t>(i)] = bit;
        if (is_frozen) frozen[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(bit);
      }
      auto x = transform(u);
      auto llrs = bsc_llrs(x, 0.0);
      auto got = scl_decode(llrs, frozen, 4);
      CHECK(got == u);
    }
  }
}

TEST_CASE("decoding with every position frozen returns the frozen word") {
  Rng rng(43);
  int n = 64;
  FrozenMap frozen(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> u(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    u[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    frozen[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(u[static_cast<std::size_t>(i)]);
  }
  // Arbitrary noisy observation; the answer is fully determined.
  std::vector<double> llrs(static_cast<std::size_t>(n));
  for (auto& l : llrs) l = 4.0 * (rng.uniform() - 0.5);
  CHECK(scl_decode(llrs, frozen, 8) == u);
}

TEST_CASE("full-list decoding equals brute-force maximum likelihood") {
  // With the exact box-plus updates and a list covering every information
  // pattern, the best path must carry the ML codeword.
  Rng rng(47);
  const int n = 8;
  for (int trial = 0; trial < 60; ++trial) {
    FrozenMap frozen(n, -1);
    int n_frozen = 3;
    std::vector<std::uint8_t> frozen_vals;
    for (int i = 0; i < n_frozen; ++i) {
      frozen[static_cast<std::size_t>(i * 2)] = static_cast<std::int8_t>(rng.next_u64() & 1u);
    }
    std::vector<double> llrs(n);
    for (auto& l : llrs) l = 6.0 * (rng.uniform() - 0.5);

    auto got = scl_decode(llrs, frozen, 32);  // 2^5 information patterns

    // Brute force over all u consistent with the frozen bits.
    double best = -1e300;
    std::vector<std::uint8_t> best_u;
    for (std::uint32_t m = 0; m < 256; ++m) {
      std::vector<std::uint8_t> u(n);
      bool ok = true;
      for (int i = 0; i < n; ++i) {
        u[static_cast<std::size_t>(i)] = (m >> i) & 1u;
        if (frozen[static_cast<std::size_t>(i)] >= 0 &&
            u[static_cast<std::size_t>(i)] != static_cast<std::uint8_t>(frozen[static_cast<std::size_t>(i)])) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      auto x = transform(u);
      double score = 0.0;
      for (int i = 0; i < n; ++i) score += (x[static_cast<std::size_t>(i)] ? -llrs[static_cast<std::size_t>(i)] : llrs[static_cast<std::size_t>(i)]);
      if (score > best) {
        best = score;
        best_u = u;
      }
    }
    CHECK(got == best_u);
  }
}

TEST_CASE("list size 8 does not lose to plain successive cancellation") {
  const int n = 256;
  const double p = 0.05;
  auto rank = construct_reliability(n, p, 20000, 17);
  auto frozen_idx = rank.least_reliable(n / 2);
  std::vector<std::uint8_t> zeros(frozen_idx.size(), 0);
  auto frozen = frozen_map(n, frozen_idx, zeros);

  Rng rng(59);
  int err1 = 0, err8 = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::uint8_t> u(n, 0);
    for (int i = 0; i < n; ++i) {
      if (frozen[static_cast<std::size_t>(i)] < 0) u[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    }
    auto x = transform(u);
    auto y = x;
    for (auto& b : y) {
      if (rng.bernoulli(p)) b ^= 1u;
    }
    auto llrs = bsc_llrs(y, p);
    if (scl_decode(llrs, frozen, 1) != u) ++err1;
    if (scl_decode(llrs, frozen, 8) != u) ++err8;
  }
  CHECK(err8 <= err1);
}

TEST_CASE("scl rejects malformed input") {
  std::vector<double> llrs(6, 1.0);
  FrozenMap frozen(6, -1);
  CHECK_THROWS_AS(scl_decode(llrs, frozen, 8), std::invalid_argument);
  std::vector<double> ok(8, 1.0);
  FrozenMap wrong(4, -1);
  CHECK_THROWS_AS(scl_decode(ok, wrong, 8), std::invalid_argument);
  FrozenMap good(8, -1);
  CHECK_THROWS_AS(scl_decode(ok, good, 0), std::invalid_argument);
}

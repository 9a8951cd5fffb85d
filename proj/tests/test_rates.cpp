// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/rates.hpp"

#include "doctest.h"

#include <cmath>

using namespace pufkey::rates;

TEST_CASE("binary entropy endpoints and reference values") {
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0));
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  // Near the half-bit point; value frozen from a high-precision evaluation.
  CHECK(binary_entropy(0.11) == doctest::Approx(0.4999159582).epsilon(1e-9));
  CHECK(binary_entropy(0.15) == doctest::Approx(0.6098403047).epsilon(1e-9));
}

TEST_CASE("star operation") {
  CHECK(star(0.0, 0.15) == doctest::Approx(0.15));
  CHECK(star(0.5, 0.3) == doctest::Approx(0.5));
  CHECK(star(0.0456, 0.15) == doctest::Approx(0.1819).epsilon(1e-3));
  CHECK(star(0.2, 0.1) == doctest::Approx(star(0.1, 0.2)));
}

TEST_CASE("fcs region optimal point") {
  auto [rs, rl] = fcs_region_point(0.0097);
  CHECK(rs == doctest::Approx(0.922).epsilon(1.1e-3));
  CHECK(rl == doctest::Approx(0.079).epsilon(1.5e-2));
  auto clean = fcs_region_point(0.0);
  CHECK(clean.first == 1.0);
  CHECK(clean.second == 0.0);
  auto useless = fcs_region_point(0.5);
  CHECK(useless.first == doctest::Approx(0.0));
  CHECK(useless.second == doctest::Approx(1.0));
}

TEST_CASE("gs boundary endpoints and invariants") {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(i * 0.01);
  auto gs = gs_region_boundary(0.15, grid);

  CHECK(gs.tuples.front().key_rate == doctest::Approx(0.390).epsilon(1e-3));
  CHECK(gs.tuples.front().storage_rate == doctest::Approx(0.610).epsilon(1e-3));
  CHECK(gs.tuples.back().key_rate == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(gs.tuples.back().storage_rate == doctest::Approx(0.0).epsilon(1e-12));

  // FCS optimal point sits on the q=0 end of the GS boundary.
  auto pt = fcs_region_point(0.15);
  CHECK(gs.tuples.front().key_rate == doctest::Approx(pt.first));
  CHECK(gs.tuples.front().leakage_rate == doctest::Approx(pt.second));

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& t = gs.tuples[i];
    CHECK(t.key_rate >= -1e-12);
    CHECK(t.leakage_rate >= -1e-12);
    CHECK(t.key_rate <= 1.0 + 1e-12);
    CHECK(t.storage_rate <= 1.0 + 1e-12);
    // R_s + R_w = 1 - H_b(q), with equality to 1 only at q = 0.
    CHECK(t.key_rate + t.storage_rate == doctest::Approx(1.0 - binary_entropy(grid[i])).epsilon(1e-12));
  }
}

TEST_CASE("cs boundary dominates gs storage") {
  std::vector<double> grid;
  for (int i = 0; i <= 25; ++i) grid.push_back(i * 0.02);
  auto gs = gs_region_boundary(0.15, grid);
  auto cs = cs_region_boundary(0.15, grid);
  CHECK(cs.tuples.front().storage_rate == doctest::Approx(1.0));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(cs.tuples[i].storage_rate >= gs.tuples[i].storage_rate - 1e-12);
    CHECK(cs.tuples[i].key_rate == doctest::Approx(gs.tuples[i].key_rate));
  }
  // Spot value from the closed forms.
  auto one = cs_region_boundary(0.15, {0.1});
  CHECK(one.tuples[0].key_rate == doctest::Approx(0.240).epsilon(2e-3));
  CHECK(one.tuples[0].storage_rate == doctest::Approx(0.531).epsilon(1e-3));
}

TEST_CASE("fcs code operating points") {
  auto bch = code_point_fcs(255, 131);
  CHECK(bch.first == doctest::Approx(0.514).epsilon(1e-3));
  CHECK(bch.second == doctest::Approx(0.486).epsilon(1e-3));
  auto full = code_point_fcs(64, 64);
  CHECK(full.first == 1.0);
  CHECK(full.second == 0.0);
  auto polar = code_point_fcs(1024, 128);
  CHECK(polar.first == doctest::Approx(0.125));
  CHECK(polar.second == doctest::Approx(0.875));
}

TEST_CASE("sphere packing ratio reproduces the reference operating points") {
  auto a = sphere_packing_ratio(1024, 0.15, 1e-6);
  REQUIRE(a.feasible);
  CHECK(a.rate_max == doctest::Approx(0.273).epsilon(0.01 / 0.273));
  CHECK(a.ratio_bound == doctest::Approx(0.375).epsilon(0.01 / 0.375));

  auto b = sphere_packing_ratio(2048, 0.15, 1e-6);
  REQUIRE(b.feasible);
  CHECK(b.ratio_bound == doctest::Approx(0.437).epsilon(0.01 / 0.437));
}

TEST_CASE("sphere packing grows toward capacity with n") {
  double prev = 0.0;
  for (int n : {256, 1024, 4096, 16384, 65536}) {
    auto r = sphere_packing_ratio(n, 0.15, 1e-6);
    REQUIRE(r.feasible);
    CHECK(r.rate_max >= prev);
    prev = r.rate_max;
    CHECK(r.rate_max < 1.0 - binary_entropy(0.15));
  }
  CHECK(prev > 0.36);  // capacity is ~0.390
}

TEST_CASE("sphere packing reports infeasibility") {
  // Even radius n-1 leaves Pr[every bit flips] = 0.45^64 ~ 6e-23 above the
  // target, so the ball must cover the whole space and no rate is left.
  auto r = sphere_packing_ratio(64, 0.45, 1e-30);
  CHECK_FALSE(r.feasible);
}

TEST_CASE("finite-length normal approximation") {
  CHECK(finite_length_normal_approx(255, 0.0097, 1e-9) == doctest::Approx(0.691).epsilon(0.01 / 0.691));
  CHECK(finite_length_normal_approx(255, 1e-5, 1e-9) > 0.95);
  double r1 = finite_length_normal_approx(256, 0.05, 1e-6);
  double r2 = finite_length_normal_approx(1024, 0.05, 1e-6);
  double r3 = finite_length_normal_approx(8192, 0.05, 1e-6);
  CHECK(r1 < r2);
  CHECK(r2 < r3);
}

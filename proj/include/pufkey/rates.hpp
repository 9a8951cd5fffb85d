// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pufkey::rates {

// Binary entropy in bits; H(0) = H(1) = 0.
double binary_entropy(double p);

// Crossover probability of two cascaded BSCs: q*(1-p) + (1-q)*p.
double star(double q, double p);

struct RateTuple {
  double key_rate = 0.0;      // R_s
  double leakage_rate = 0.0;  // R_ell
  double storage_rate = 0.0;  // R_w
};

enum class RegionModel { Fcs, Gs, Cs };

struct RegionBoundary {
  RegionModel model;
  double channel_p;
  std::vector<double> q_grid;
  std::vector<RateTuple> tuples;
};

// Optimal point of the fuzzy-commitment key-leakage region for a BSC(p):
// (R_s, R_ell) = (1 - H_b(p), H_b(p)).
std::pair<double, double> fcs_region_point(double p);

// Boundary of the generated-secret region for a BSC(p_A), parametrized by the
// test-channel crossover q: R_s = 1 - H_b(q*p_A), R_ell = R_w = H_b(q*p_A) - H_b(q).
RegionBoundary gs_region_boundary(double p_a, const std::vector<double>& q_grid);

// Chosen-secret region: same key and leakage rates, storage R_w = 1 - H_b(q).
RegionBoundary cs_region_boundary(double p_a, const std::vector<double>& q_grid);

// Operating point of an (n_c, k_c) code used in the fuzzy commitment scheme.
std::pair<double, double> code_point_fcs(int n_c, int k_c);

struct SpherePackingResult {
  bool feasible = false;
  int radius = 0;        // decoding radius forced by the reliability target
  double rate_max = 0;   // largest code rate the packing volume admits
  double ratio_bound = 0;  // rate_max / (1 - rate_max)
};

// Sphere-packing limit on the key vs. storage ratio of Slepian-Wolf style
// constructions: the radius e is the smallest with Pr[Bin(n, p_A) > e] <= target_PB,
// and the rate bound is 1 - log2(V(n, e))/n with V the Hamming-ball volume.
SpherePackingResult sphere_packing_ratio(int n, double p_a, double target_pb);

// Normal approximation to the best finite-length rate at block-error target_PB:
// R = C - sqrt(V/n) Q^{-1}(target_PB) + log2(n)/(2n). Flagged as an
// approximation wherever it is reported.
double finite_length_normal_approx(int n, double p, double target_pb);

std::string region_model_name(RegionModel m);

}  // namespace pufkey::rates

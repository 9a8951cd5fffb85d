// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/rates.hpp"

#include "pufkey/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace pufkey::rates {

namespace {

// log of Pr[Bin(n, p) > e], summed in log space.
double log_binomial_tail(int n, double p, int e) {
  if (e >= n) return -std::numeric_limits<double>::infinity();
  if (e < 0) return 0.0;
  double lp = std::log(p);
  double lq = std::log1p(-p);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(n - e));
  for (int j = e + 1; j <= n; ++j) {
    double t = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) + j * lp + (n - j) * lq;
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - max_term);
  return max_term + std::log(s);
}

}  // namespace

double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("binary_entropy: p outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

double star(double q, double p) {
  if (q < 0.0 || q > 1.0 || p < 0.0 || p > 1.0) throw std::invalid_argument("star: arguments outside [0,1]");
  return q * (1.0 - p) + (1.0 - q) * p;
}

std::pair<double, double> fcs_region_point(double p) {
  double h = binary_entropy(p);
  return {1.0 - h, h};
}

RegionBoundary gs_region_boundary(double p_a, const std::vector<double>& q_grid) {
  RegionBoundary b{RegionModel::Gs, p_a, q_grid, {}};
  b.tuples.reserve(q_grid.size());
  for (double q : q_grid) {
    if (q < 0.0 || q > 0.5) throw std::invalid_argument("gs_region_boundary: q outside [0,0.5]");
    double hs = binary_entropy(star(q, p_a));
    double hq = binary_entropy(q);
    b.tuples.push_back({1.0 - hs, hs - hq, hs - hq});
  }
  return b;
}

RegionBoundary cs_region_boundary(double p_a, const std::vector<double>& q_grid) {
  RegionBoundary b = gs_region_boundary(p_a, q_grid);
  b.model = RegionModel::Cs;
  for (std::size_t i = 0; i < b.tuples.size(); ++i) {
    b.tuples[i].storage_rate = 1.0 - binary_entropy(q_grid[i]);
  }
  return b;
}

std::pair<double, double> code_point_fcs(int n_c, int k_c) {
  if (k_c <= 0 || k_c > n_c) throw std::invalid_argument("code_point_fcs: need 0 < k_c <= n_c");
  double rs = static_cast<double>(k_c) / n_c;
  return {rs, 1.0 - rs};
}

SpherePackingResult sphere_packing_ratio(int n, double p_a, double target_pb) {
  if (n < 64) throw std::invalid_argument("sphere_packing_ratio: n too small");
  if (p_a <= 0.0 || p_a >= 0.5) throw std::invalid_argument("sphere_packing_ratio: p_A outside (0,0.5)");
  if (target_pb <= 0.0 || target_pb >= 1.0) throw std::invalid_argument("sphere_packing_ratio: bad target_PB");

  double log_target = std::log(target_pb);
  int lo = 0, hi = n;
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (log_binomial_tail(n, p_a, mid) <= log_target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  int radius = lo;

  // log2 of the Hamming-ball volume V(n, radius), accumulated in log space.
  double log2_vol = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= radius; ++i) {
    double l2c = (std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0)) / std::numbers::ln2;
    double hi_term = std::max(log2_vol, l2c);
    log2_vol = hi_term + std::log2(std::exp2(log2_vol - hi_term) + std::exp2(l2c - hi_term));
  }

  SpherePackingResult r;
  r.radius = radius;
  r.rate_max = 1.0 - log2_vol / n;
  if (radius >= n || r.rate_max <= 0.0) {
    r.feasible = false;
    r.rate_max = 0.0;
    r.ratio_bound = 0.0;
    return r;
  }
  r.feasible = true;
  r.ratio_bound = r.rate_max / (1.0 - r.rate_max);
  return r;
}

double finite_length_normal_approx(int n, double p, double target_pb) {
  if (n < 100) throw std::invalid_argument("finite_length_normal_approx: n too small");
  if (p <= 0.0 || p >= 0.5) throw std::invalid_argument("finite_length_normal_approx: p outside (0,0.5)");
  double cap = 1.0 - binary_entropy(p);
  double disp = p * (1.0 - p) * std::pow(std::log2((1.0 - p) / p), 2);
  return cap - std::sqrt(disp / n) * normal::q_inv(target_pb) + std::log2(static_cast<double>(n)) / (2.0 * n);
}

std::string region_model_name(RegionModel m) {
  switch (m) {
    case RegionModel::Fcs: return "FCS";
    case RegionModel::Gs: return "GS";
    case RegionModel::Cs: return "CS";
  }
  return "?";
}

}  // namespace pufkey::rates

// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/quantizer.hpp"

#include "pufkey/common.hpp"
#include "pufkey/normal.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pufkey::quantizer {

namespace {
constexpr int kMaxBits = 8;
}

GaussianFit fit_gaussian(std::span<const double> samples) {
  std::size_t m = samples.size();
  if (m < 3) throw std::invalid_argument("fit_gaussian: need at least 3 samples");
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  if (ss <= 0.0) throw std::invalid_argument("fit_gaussian: degenerate samples (zero variance)");

  GaussianFit fit;
  fit.mean = mean;
  fit.stddev = std::sqrt(ss / static_cast<double>(m - 1));
  double var_ml = ss / static_cast<double>(m);
  fit.loglik = -0.5 * static_cast<double>(m) * (std::log(2.0 * std::numbers::pi * var_ml) + 1.0);
  constexpr double k = 2.0;
  double aic = -2.0 * fit.loglik + 2.0 * k;
  fit.aicc = aic + 2.0 * k * (k + 1.0) / (static_cast<double>(m) - k - 1.0);
  fit.bic = -2.0 * fit.loglik + k * std::log(static_cast<double>(m));
  return fit;
}

double equalize(double t, double mean, double stddev) {
  if (stddev <= 0.0) throw std::invalid_argument("equalize: stddev must be positive");
  return (t - mean) / stddev;
}

std::vector<double> boundaries(int k_bits) {
  if (k_bits < 1 || k_bits > kMaxBits) throw std::invalid_argument("boundaries: K outside [1,8]");
  int levels = 1 << k_bits;
  std::vector<double> b(static_cast<std::size_t>(levels) + 1);
  b[0] = -std::numeric_limits<double>::infinity();
  b[static_cast<std::size_t>(levels)] = std::numeric_limits<double>::infinity();
  for (int k = 1; k < levels; ++k) {
    b[static_cast<std::size_t>(k)] = normal::quantile(static_cast<double>(k) / levels);
  }
  return b;
}

QuantizeResult quantize(double t_equalized, int k_bits) {
  auto b = boundaries(k_bits);
  // First boundary >= t gives the interval; b_{k-1} < t <= b_k.
  auto it = std::lower_bound(b.begin() + 1, b.end() - 1, t_equalized);
  int interval = static_cast<int>(it - b.begin());
  std::uint32_t g = gray_code(static_cast<std::uint32_t>(interval - 1));
  QuantizeResult res;
  res.interval = interval;
  res.bits.resize(static_cast<std::size_t>(k_bits));
  for (int i = 0; i < k_bits; ++i) {
    res.bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((g >> (k_bits - 1 - i)) & 1u);
  }
  return res;
}

double correctness_probability(int k_bits, double sigma_n) {
  if (k_bits < 1 || k_bits > kMaxBits) throw std::invalid_argument("correctness_probability: K outside [1,8]");
  if (sigma_n < 0.0) throw std::invalid_argument("correctness_probability: negative noise std");
  if (sigma_n == 0.0) return 1.0;

  // The stay probability integrand equals phi(t) except near the boundaries,
  // so integrate the leak across each boundary instead:
  //   P_c = 1 - sum_k [ int Q((t - b_k)/s) phi(t) dt + int Q((b_{k+1} - t)/s) phi(t) dt ]
  // over interval k. Both leak integrands die off within a few noise widths
  // of their boundary, which keeps the quadrature cheap even when the noise
  // is orders of magnitude narrower than the quantization intervals.
  auto b = boundaries(k_bits);
  int levels = 1 << k_bits;
  using quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double reach = 40.0 * sigma_n;  // Q(40) is below any double

  double leak = 0.0;
  for (int k = 0; k < levels; ++k) {
    double lo = b[static_cast<std::size_t>(k)];
    double hi = b[static_cast<std::size_t>(k) + 1];
    if (k > 0) {
      double cap = std::isinf(hi) ? lo + reach : std::min(hi, lo + reach);
      leak += quad::integrate([&](double t) { return normal::q((t - lo) / sigma_n) * normal::pdf(t); }, lo, cap, 10,
                              1e-13);
    }
    if (k < levels - 1) {
      double cap = std::isinf(lo) ? hi - reach : std::max(lo, hi - reach);
      leak += quad::integrate([&](double t) { return normal::q((hi - t) / sigma_n) * normal::pdf(t); }, cap, hi, 10,
                              1e-13);
    }
  }
  double pc = 1.0 - leak;
  return pc < 0.0 ? 0.0 : (pc > 1.0 ? 1.0 : pc);
}

namespace {

// log Pr[Bin(l, 1-p) > c_max]
double log_tail(int l, int c_max, double p) {
  double lq = std::log1p(-p);  // log(1-p)
  double lp = std::log(p);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(l - c_max));
  for (int c = c_max + 1; c <= l; ++c) {
    double t = std::lgamma(l + 1.0) - std::lgamma(c + 1.0) - std::lgamma(l - c + 1.0) + c * lq + (l - c) * lp;
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - max_term);
  return max_term + std::log(s);
}

}  // namespace

double correctness_threshold(int l, int c_max, double target_pb) {
  if (c_max < 1 || c_max >= l) throw std::invalid_argument("correctness_threshold: need 1 <= C_max < l");
  if (target_pb <= 0.0 || target_pb >= 1.0) throw std::invalid_argument("correctness_threshold: bad target");
  double log_target = std::log(target_pb);
  double lo = 1e-12, hi = 1.0 - 1e-15;
  if (log_tail(l, c_max, hi) > log_target) {
    throw std::domain_error("correctness_threshold: target unreachable for these parameters");
  }
  for (int iter = 0; iter < 100; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (log_tail(l, c_max, mid) <= log_target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

int Design::k_max() const {
  int m = 0;
  for (int k : bits) m = std::max(m, k);
  return m;
}

std::string Design::to_json() const {
  std::ostringstream out;
  out << "{\"c_max\":" << c_max << ",\"threshold\":";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", threshold);
  out << buf << ",\"bits_per_coeff\":[";
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (i) out << ',';
    out << bits[i];
  }
  out << "],\"n\":" << total_bits << ",\"e\":" << required_correction << ",\"dc_excluded\":true}";
  return out.str();
}

std::string Design::content_hash() const { return to_hex_u64(fnv1a64(to_json())); }

Design allocate_bits(std::span<const CoefficientModel> models, int c_max, double target_pb) {
  if (models.empty()) throw std::invalid_argument("allocate_bits: empty model list");
  int l = static_cast<int>(models.size());

  Design d;
  d.c_max = c_max;
  d.target_pb = target_pb;
  d.threshold = correctness_threshold(l, c_max, target_pb);
  d.bits.assign(static_cast<std::size_t>(l), 0);

  for (int i = 1; i < l; ++i) {
    const auto& m = models[static_cast<std::size_t>(i)];
    int k = 0;
    while (k < kMaxBits && correctness_probability(k + 1, m.noise_std_eq) >= d.threshold) ++k;
    d.bits[static_cast<std::size_t>(i)] = k;
  }

  d.total_bits = 0;
  for (int i = 1; i < l; ++i) d.total_bits += d.bits[static_cast<std::size_t>(i)];

  std::vector<int> sorted(d.bits.begin(), d.bits.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  d.required_correction = 0;
  for (int i = 0; i < c_max && i < l; ++i) d.required_correction += sorted[static_cast<std::size_t>(i)];
  return d;
}

BitSequence extract_bits(const Design& design, std::span<const CoefficientModel> models,
                         const Eigen::VectorXd& coeffs) {
  int l = static_cast<int>(models.size());
  if (static_cast<int>(design.bits.size()) != l) throw std::invalid_argument("extract_bits: design/model mismatch");
  if (coeffs.size() != l) throw std::invalid_argument("extract_bits: coefficient length mismatch");

  BitSequence seq;
  seq.bits.reserve(static_cast<std::size_t>(design.total_bits));
  seq.offsets.resize(static_cast<std::size_t>(l) + 1);
  for (int i = 0; i < l; ++i) {
    seq.offsets[static_cast<std::size_t>(i)] = static_cast<int>(seq.bits.size());
    int k = design.bits[static_cast<std::size_t>(i)];
    if (k == 0) continue;
    const auto& m = models[static_cast<std::size_t>(i)];
    double t = equalize(coeffs(i), m.mean, m.stddev);
    auto q = quantize(t, k);
    seq.bits.insert(seq.bits.end(), q.bits.begin(), q.bits.end());
  }
  seq.offsets[static_cast<std::size_t>(l)] = static_cast<int>(seq.bits.size());
  return seq;
}

}  // namespace pufkey::quantizer

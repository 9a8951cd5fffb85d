// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pufkey::quantizer {

// Per-coefficient Gaussian model after transform: T_i ~ N(mean, stddev^2),
// with noise_std_eq the measurement-noise standard deviation in equalized
// units (source noise std divided by stddev).
struct CoefficientModel {
  double mean = 0.0;
  double stddev = 0.0;
  double noise_std_eq = 0.0;
};

struct GaussianFit {
  double mean = 0.0;
  double stddev = 0.0;  // unbiased (m-1) estimate
  double loglik = 0.0;  // at the ML estimates
  double aicc = 0.0;
  double bic = 0.0;
};

// ML Gaussian fit with information criteria (k = 2 parameters).
GaussianFit fit_gaussian(std::span<const double> samples);

// (t - mean) / stddev; throws if stddev <= 0.
double equalize(double t, double mean, double stddev);

// Equiprobable quantization boundaries b_k = Phi^{-1}(k / 2^K), k = 0..2^K,
// with b_0 = -inf and b_{2^K} = +inf. 1 <= K <= 8.
std::vector<double> boundaries(int k_bits);

// Binary-reflected Gray code of v.
inline std::uint32_t gray_code(std::uint32_t v) { return v ^ (v >> 1); }

struct QuantizeResult {
  int interval = 0;                // 1-based, the unique k with b_{k-1} < t <= b_k
  std::vector<std::uint8_t> bits;  // Gray code of (interval - 1), MSB first
};

// Values exactly on a boundary fall to the lower interval.
QuantizeResult quantize(double t_equalized, int k_bits);

// Probability that additive N(0, sigma_n^2) noise leaves the quantization
// interval of a standard-normal coefficient unchanged. Exact 1 at sigma_n = 0;
// evaluated by adaptive quadrature to ~1e-12 absolute otherwise.
double correctness_probability(int k_bits, double sigma_n);

// Smallest per-coefficient correctness threshold such that
// Pr[#bad coefficients > c_max] <= target_pb when each of the l coefficients
// fails independently with probability 1 - threshold.
double correctness_threshold(int l, int c_max, double target_pb = 1e-9);

struct Design {
  int c_max = 0;
  double threshold = 0.0;           // correctness threshold used
  double target_pb = 0.0;
  std::vector<int> bits;            // K_i per coefficient; bits[0] (DC) is 0
  int total_bits = 0;               // n = sum K_i
  int required_correction = 0;      // e = sum of the c_max largest K_i

  int min_distance() const { return 2 * required_correction + 1; }
  int k_max() const;
  std::string to_json() const;      // stable field order
  std::string content_hash() const; // fnv1a64 of to_json(), hex
};

// K_i = max{K <= 8 : P_c(K) >= threshold} per coefficient (0 when even K=1
// fails); the DC coefficient (index 0) is never used.
Design allocate_bits(std::span<const CoefficientModel> models, int c_max, double target_pb = 1e-9);

struct BitSequence {
  std::vector<std::uint8_t> bits;
  std::vector<int> offsets;  // offsets[i] = first bit of coefficient i; length l+1
};

// Equalize each used coefficient, quantize with K_i bits, concatenate the
// Gray codes in coefficient order.
BitSequence extract_bits(const Design& design, std::span<const CoefficientModel> models,
                         const Eigen::VectorXd& coeffs);

}  // namespace pufkey::quantizer

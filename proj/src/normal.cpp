// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/normal.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pufkey::normal {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double q(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double quantile(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("normal::quantile: p outside [0,1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  // Phi^{-1}(p) = -sqrt(2) erfc^{-1}(2p)
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double q_inv(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("normal::q_inv: p outside [0,1]");
  if (p == 0.0) return std::numeric_limits<double>::infinity();
  if (p == 1.0) return -std::numeric_limits<double>::infinity();
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace pufkey::normal

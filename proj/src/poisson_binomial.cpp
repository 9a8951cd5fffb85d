// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/poisson_binomial.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pufkey::pb {

std::vector<double> pmf(std::span<const double> probs) {
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("poisson_binomial: probability outside [0,1]");
  }
  const std::size_t n = probs.size();
  const std::size_t N = n + 1;
  const long double w = 2.0L * std::numbers::pi_v<long double> / static_cast<long double>(N);

  // cf[k] = prod_j (1 - p_j + p_j e^{i w k}), stored as (log magnitude, phase).
  std::vector<long double> re(N), im(N);
  for (std::size_t k = 0; k < N; ++k) {
    long double c = std::cos(w * static_cast<long double>(k));
    long double s = std::sin(w * static_cast<long double>(k));
    long double log_mag = 0.0L;
    long double phase = 0.0L;
    for (double pd : probs) {
      long double p = pd;
      long double fr = 1.0L - p + p * c;
      long double fi = p * s;
      log_mag += 0.5L * std::log(fr * fr + fi * fi);
      phase += std::atan2(fi, fr);
    }
    long double mag = std::exp(log_mag);
    re[k] = mag * std::cos(phase);
    im[k] = mag * std::sin(phase);
  }

  std::vector<double> out(N);
  for (std::size_t m = 0; m < N; ++m) {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < N; ++k) {
      long double ang = w * static_cast<long double>(k * m % N);
      acc += re[k] * std::cos(ang) + im[k] * std::sin(ang);
    }
    long double v = acc / static_cast<long double>(N);
    out[m] = static_cast<double>(v < 0.0L ? 0.0L : v);
  }
  return out;
}

double tail(std::span<const double> probs, int t) {
  const int n = static_cast<int>(probs.size());
  if (t < 0) return 1.0;
  if (t >= n) return 0.0;
  auto p = pmf(probs);
  // Direct sum of the upper side; avoids the 1-x cancellation for tiny tails.
  long double s = 0.0L;
  for (int m = n; m > t; --m) s += p[static_cast<std::size_t>(m)];
  double v = static_cast<double>(s);
  return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

}  // namespace pufkey::pb

// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace pufkey::pb {

// Exact pmf of a sum of independent Bernoulli(p_i), computed with the DFT
// characteristic-function method. The per-frequency product of factors is
// accumulated in log-magnitude/phase form and the inverse DFT runs in
// extended precision, so tail values near 1e-11 keep absolute accuracy well
// below 1e-12.
std::vector<double> pmf(std::span<const double> probs);

// Pr[sum > t]; t < 0 gives 1, t >= n gives 0.
double tail(std::span<const double> probs, int t);

}  // namespace pufkey::pb

// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace pufkey::normal {

// Standard-normal density, CDF, tail (Q) and quantile. The quantile is exact
// to machine precision; boundaries and thresholds downstream depend on it.
double pdf(double x);
double cdf(double x);
double q(double x);
double quantile(double p);  // Phi^{-1}, p in (0,1); +-inf at the endpoints
double q_inv(double p);     // Q^{-1}(p) = quantile(1-p)

}  // namespace pufkey::normal

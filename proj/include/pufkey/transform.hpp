// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <string>

namespace pufkey::transform {

enum class Kind { Dct, Dwht, Dht, Klt };

Kind kind_from_name(const std::string& name);  // "dct" | "dwht" | "dht" | "klt"
std::string kind_name(Kind k);

// A fixed orthogonal transform over r x c arrays stored row-major as length-l
// vectors. DCT/DWHT/DHT are separable 2D transforms; the KLT projects the
// flattened vector onto a fitted eigenbasis.
struct Plan {
  Kind kind;
  int rows = 0;
  int cols = 0;
  Eigen::MatrixXd klt_basis;  // l x l, columns are basis vectors; KLT only

  int length() const { return rows * cols; }
};

Plan make_plan(Kind kind, int rows, int cols);
Plan make_klt_plan(int rows, int cols, const Eigen::MatrixXd& autocovariance);

// Orthonormal 1D transform matrices (coefficients = M * signal).
Eigen::MatrixXd dct_matrix(int n);
Eigen::MatrixXd dwht_matrix(int n);  // Sylvester (natural) ordering, n a power of two
Eigen::MatrixXd dht_matrix(int n);   // orthonormal Haar, n a power of two

// Full l x l matrix with coefficients = matrix * flattened_array.
// Row 0 is the DC basis vector for all separable kinds.
Eigen::MatrixXd transform_matrix(const Plan& plan);

Eigen::VectorXd forward(const Plan& plan, const Eigen::VectorXd& array);
Eigen::VectorXd inverse(const Plan& plan, const Eigen::VectorXd& coeffs);

// Eigenbasis of a symmetric PSD autocovariance, columns sorted by descending
// eigenvalue. Sign convention: the largest-magnitude entry of each column is
// positive (first such entry on ties), so the basis is reproducible.
Eigen::MatrixXd fit_klt(const Eigen::MatrixXd& autocovariance);

// Coefficient autocovariance M C M^T implied by a plan, without sampling.
Eigen::MatrixXd coefficient_autocovariance(const Plan& plan, const Eigen::MatrixXd& source_autocov);

// eta_c = 1 - sum_offdiag|C_TT| / sum_offdiag|C_XX|. Throws if the source has
// no off-diagonal mass (the metric is undefined there).
double decorrelation_efficiency(const Eigen::MatrixXd& coeff_autocov, const Eigen::MatrixXd& source_autocov);

// 1-based reporting index of a row-major coefficient: the first row holds
// indices 1..c, the second row c+1..2c, and so on.
inline int report_index(int storage_index) { return storage_index + 1; }

}  // namespace pufkey::transform

// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/transform.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pufkey::transform {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_plan(const Plan& plan) {
  if (plan.rows <= 0 || plan.cols <= 0) throw std::invalid_argument("transform: non-positive dimensions");
  if (plan.kind == Kind::Dwht || plan.kind == Kind::Dht) {
    if (!is_pow2(plan.rows) || !is_pow2(plan.cols)) {
      throw std::invalid_argument("transform: " + kind_name(plan.kind) + " needs power-of-two dimensions");
    }
  }
  if (plan.kind == Kind::Klt) {
    int l = plan.length();
    if (plan.klt_basis.rows() != l || plan.klt_basis.cols() != l) {
      throw std::invalid_argument("transform: KLT plan is missing its basis");
    }
    double err = (plan.klt_basis.transpose() * plan.klt_basis - Eigen::MatrixXd::Identity(l, l)).cwiseAbs().maxCoeff();
    if (err > 1e-8) throw std::invalid_argument("transform: KLT basis is not orthogonal");
  }
}

Eigen::MatrixXd matrix_1d(Kind kind, int n) {
  switch (kind) {
    case Kind::Dct: return dct_matrix(n);
    case Kind::Dwht: return dwht_matrix(n);
    case Kind::Dht: return dht_matrix(n);
    case Kind::Klt: break;
  }
  throw std::logic_error("matrix_1d: KLT is not separable");
}

}  // namespace

Kind kind_from_name(const std::string& name) {
  if (name == "dct") return Kind::Dct;
  if (name == "dwht") return Kind::Dwht;
  if (name == "dht") return Kind::Dht;
  if (name == "klt") return Kind::Klt;
  throw std::invalid_argument("unknown transform: " + name);
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Dct: return "dct";
    case Kind::Dwht: return "dwht";
    case Kind::Dht: return "dht";
    case Kind::Klt: return "klt";
  }
  return "?";
}

Plan make_plan(Kind kind, int rows, int cols) {
  if (kind == Kind::Klt) throw std::invalid_argument("make_plan: KLT requires a fitted basis");
  Plan p{kind, rows, cols, {}};
  check_plan(p);
  return p;
}

Plan make_klt_plan(int rows, int cols, const Eigen::MatrixXd& autocovariance) {
  Plan p{Kind::Klt, rows, cols, fit_klt(autocovariance)};
  if (p.klt_basis.rows() != p.length()) throw std::invalid_argument("make_klt_plan: covariance size mismatch");
  check_plan(p);
  return p;
}

Eigen::MatrixXd dct_matrix(int n) {
  if (n <= 0) throw std::invalid_argument("dct_matrix: n must be positive");
  Eigen::MatrixXd m(n, n);
  double scale = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k) {
    double s = (k == 0) ? scale / std::numbers::sqrt2 : scale;
    for (int j = 0; j < n; ++j) {
      m(k, j) = s * std::cos(std::numbers::pi * (2.0 * j + 1.0) * k / (2.0 * n));
    }
  }
  return m;
}

Eigen::MatrixXd dwht_matrix(int n) {
  if (!is_pow2(n)) throw std::invalid_argument("dwht_matrix: n must be a power of two");
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(1, 1);
  for (int size = 1; size < n; size *= 2) {
    Eigen::MatrixXd next(2 * size, 2 * size);
    next.topLeftCorner(size, size) = m;
    next.topRightCorner(size, size) = m;
    next.bottomLeftCorner(size, size) = m;
    next.bottomRightCorner(size, size) = -m;
    m = next / std::numbers::sqrt2;
  }
  return m;
}

Eigen::MatrixXd dht_matrix(int n) {
  if (!is_pow2(n)) throw std::invalid_argument("dht_matrix: n must be a power of two");
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(1, 1);
  for (int size = 1; size < n; size *= 2) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(2 * size, 2 * size);
    // Averaging rows refine the coarse basis; difference rows add detail.
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        next(i, 2 * j) = m(i, j) / std::numbers::sqrt2;
        next(i, 2 * j + 1) = m(i, j) / std::numbers::sqrt2;
      }
      next(size + i, 2 * i) = 1.0 / std::numbers::sqrt2;
      next(size + i, 2 * i + 1) = -1.0 / std::numbers::sqrt2;
    }
    m = next;
  }
  return m;
}

Eigen::MatrixXd transform_matrix(const Plan& plan) {
  check_plan(plan);
  if (plan.kind == Kind::Klt) return plan.klt_basis.transpose();
  Eigen::MatrixXd mr = matrix_1d(plan.kind, plan.rows);
  Eigen::MatrixXd mc = matrix_1d(plan.kind, plan.cols);
  // Row-major flattening: vec(Mr A Mc^T) = (Mr kron Mc) vec(A).
  int l = plan.length();
  Eigen::MatrixXd full(l, l);
  for (int a = 0; a < plan.rows; ++a) {
    for (int b = 0; b < plan.cols; ++b) {
      for (int i = 0; i < plan.rows; ++i) {
        for (int j = 0; j < plan.cols; ++j) {
          full(a * plan.cols + b, i * plan.cols + j) = mr(a, i) * mc(b, j);
        }
      }
    }
  }
  return full;
}

Eigen::VectorXd forward(const Plan& plan, const Eigen::VectorXd& array) {
  check_plan(plan);
  if (array.size() != plan.length()) throw std::invalid_argument("forward: array length mismatch");
  if (plan.kind == Kind::Klt) return plan.klt_basis.transpose() * array;
  Eigen::MatrixXd a = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      array.data(), plan.rows, plan.cols);
  Eigen::MatrixXd mr = matrix_1d(plan.kind, plan.rows);
  Eigen::MatrixXd mc = matrix_1d(plan.kind, plan.cols);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t = mr * a * mc.transpose();
  return Eigen::Map<const Eigen::VectorXd>(t.data(), plan.length());
}

Eigen::VectorXd inverse(const Plan& plan, const Eigen::VectorXd& coeffs) {
  check_plan(plan);
  if (coeffs.size() != plan.length()) throw std::invalid_argument("inverse: coefficient length mismatch");
  if (plan.kind == Kind::Klt) return plan.klt_basis * coeffs;
  Eigen::MatrixXd t = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      coeffs.data(), plan.rows, plan.cols);
  Eigen::MatrixXd mr = matrix_1d(plan.kind, plan.rows);
  Eigen::MatrixXd mc = matrix_1d(plan.kind, plan.cols);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a = mr.transpose() * t * mc;
  return Eigen::Map<const Eigen::VectorXd>(a.data(), plan.length());
}

Eigen::MatrixXd fit_klt(const Eigen::MatrixXd& autocovariance) {
  if (autocovariance.rows() != autocovariance.cols()) throw std::invalid_argument("fit_klt: matrix not square");
  double asym = (autocovariance - autocovariance.transpose()).cwiseAbs().maxCoeff();
  double scale = std::max(1.0, autocovariance.cwiseAbs().maxCoeff());
  if (asym > 1e-9 * scale) throw std::invalid_argument("fit_klt: matrix not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(autocovariance);
  if (solver.info() != Eigen::Success) throw std::runtime_error("fit_klt: eigendecomposition failed");

  int l = static_cast<int>(autocovariance.rows());
  Eigen::MatrixXd basis(l, l);
  // Eigen sorts ascending; re-order to descending eigenvalue.
  for (int c = 0; c < l; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(l - 1 - c);
    int arg = 0;
    double best = -1.0;
    for (int i = 0; i < l; ++i) {
      if (std::abs(v(i)) > best + 1e-15) {
        best = std::abs(v(i));
        arg = i;
      }
    }
    if (v(arg) < 0.0) v = -v;
    basis.col(c) = v;
  }
  return basis;
}

Eigen::MatrixXd coefficient_autocovariance(const Plan& plan, const Eigen::MatrixXd& source_autocov) {
  Eigen::MatrixXd m = transform_matrix(plan);
  if (source_autocov.rows() != m.cols()) throw std::invalid_argument("coefficient_autocovariance: size mismatch");
  return m * source_autocov * m.transpose();
}

double decorrelation_efficiency(const Eigen::MatrixXd& coeff_autocov, const Eigen::MatrixXd& source_autocov) {
  if (coeff_autocov.rows() != source_autocov.rows() || coeff_autocov.cols() != source_autocov.cols()) {
    throw std::invalid_argument("decorrelation_efficiency: size mismatch");
  }
  auto offdiag_mass = [](const Eigen::MatrixXd& m) {
    double s = m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
    return s;
  };
  double denom = offdiag_mass(source_autocov);
  if (denom <= 0.0) {
    throw std::domain_error("decorrelation_efficiency: source has no off-diagonal covariance mass");
  }
  return 1.0 - offdiag_mass(coeff_autocov) / denom;
}

}  // namespace pufkey::transform

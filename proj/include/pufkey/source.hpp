// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pufkey/common.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace pufkey::source {

// Correlated Gaussian model of an r x c ring-oscillator array: device outputs
// are N(mean, autocovariance) draws, measurements add i.i.d. N(0, noise_variance)
// per oscillator.
struct SourceParams {
  int rows = 0;
  int cols = 0;
  Eigen::VectorXd mean;            // length l = rows*cols, Hz
  Eigen::MatrixXd autocovariance;  // l x l, Hz^2
  double noise_variance = 0.0;     // Hz^2

  int length() const { return rows * cols; }
  void validate() const;  // throws std::invalid_argument on bad dimensions
};

struct DeviceRecord {
  Eigen::VectorXd noiseless;                  // enrollment output x_hat
  std::vector<Eigen::VectorXd> measurements;  // noisy outputs y_hat
};

struct RODataset {
  SourceParams params;
  std::vector<DeviceRecord> devices;
};

struct SourceStats {
  Eigen::VectorXd sample_mean;
  Eigen::MatrixXd sample_autocovariance;
  double estimated_noise_variance = 0.0;
  // Number of (measurement - per-device mean) residual vectors pooled.
  int pooled_residuals = 0;
};

// Spatially decaying default covariance C(a,b) = sigma2 * rho^dist(a,b) over
// Euclidean 2D grid distance, the stand-in fixture for real RO data. The
// default rho models the strong correlation from surrounding logic; weaker
// decay makes separable transforms decorrelate about as well as on real
// arrays.
SourceParams default_synthetic_params(int rows, int cols, double sigma2 = 1.0, double rho = 0.9,
                                      double noise_variance = 1e-4, double mean_hz = 0.0);

// i.i.d. devices from N(mean, autocovariance); each of the n_measurements adds
// fresh noise. Deterministic given the seed: device d uses substream
// derive_seed(seed, d), so the parallel and serial paths agree bitwise.
RODataset generate_synthetic(const SourceParams& params, int n_devices, int n_measurements,
                             std::uint64_t seed, RunPolicy policy = RunPolicy::Parallel);

// One fresh noisy measurement of a noiseless array.
Eigen::VectorXd measure(const Eigen::VectorXd& noiseless, const SourceParams& params, std::uint64_t seed);

// Unbiased mean/covariance across devices plus the pooled within-device
// variance of repeated measurements, averaged over oscillators.
SourceStats estimate_statistics(const RODataset& dataset);

// CSV schema: header `device_id,measurement_id,ro_index,frequency_hz`;
// measurement_id 0 is the noiseless enrollment output. An optional JSON
// sidecar at <path>.json carries {"r":..,"c":..,"noise_variance":..}.
RODataset ingest_csv(const std::string& path);
void write_csv(const RODataset& dataset, const std::string& path);

// Factor of the autocovariance used for sampling. Eigenvalues slightly below
// zero (>= -1e-10 * trace) are clamped to zero; anything lower is rejected.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& autocovariance);

}  // namespace pufkey::source

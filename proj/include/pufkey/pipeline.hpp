// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pufkey/quantizer.hpp"
#include "pufkey/source.hpp"
#include "pufkey/transform.hpp"
#include "pufkey/wz.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pufkey::pipeline {

// Exit codes shared by the CLI and the in-process command API.
inline constexpr int kOk = 0;
inline constexpr int kValidationError = 2;
inline constexpr int kInfeasible = 3;
inline constexpr int kDecodeFailure = 4;

struct SourceConfig {
  std::string dataset_path;  // non-empty: ingest this CSV instead of synthesizing
  int rows = 16;
  int cols = 16;
  double sigma2 = 1.0;
  double rho = 0.9;
  double noise_variance = 1e-4;
  double mean_hz = 0.0;
  int devices = 100;
  int measurements = 2;
};

struct QuantizerConfig {
  int c_max = 20;
  double target_pb = 1e-9;
  int key_length = 128;
};

struct WzConfig {
  int n = 1024;
  int key_length = 128;
  double p_a = 0.15;
  double target_pb = 1e-3;
  int list_size = 8;
  int construction_trials = 100000;
  int sweep_trials = 6000;
  int distortion_trials = 400;
};

struct ExperimentConfig {
  SourceConfig source;
  std::string transform = "dwht";
  QuantizerConfig quantizer;
  std::string scheme = "FCS-BCH";  // or "WZ-polar"
  std::string fcs_code = "bch_255_131";
  WzConfig wz;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string format = "csv";  // csv | json
  bool test_mode = false;      // store a salted key digest for verification

  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);
  std::string to_json() const;
  std::string config_hash() const;
  void validate() const;
};

// Per-transform analysis artifact: fitted coefficient models plus the
// decorrelation-efficiency table.
struct Analysis {
  std::string config_hash;
  int rows = 0;
  int cols = 0;
  double noise_variance = 0.0;
  struct PerTransform {
    double eta_sample = 0.0;                 // from the dataset sample covariance
    std::optional<double> eta_analytic;      // from the synthetic model covariance
    std::vector<quantizer::CoefficientModel> models;
  };
  std::vector<std::pair<std::string, PerTransform>> transforms;
  Eigen::MatrixXd klt_basis;

  const PerTransform& get(const std::string& name) const;
  std::string to_json() const;
  static Analysis from_json(const std::string& text);
};

int cmd_gen(const ExperimentConfig& config);
int cmd_ingest(const ExperimentConfig& config, const std::string& csv_path);
int cmd_analyze(const ExperimentConfig& config);
int cmd_design(const ExperimentConfig& config);
int cmd_enroll(const ExperimentConfig& config, int device, bool unsafe_dump_key = false);
int cmd_reconstruct(const ExperimentConfig& config, int device, int measurement);
int cmd_evaluate(const ExperimentConfig& config, int trials, const std::string& dump_bits_path = "");
int cmd_rates(const std::string& model, double p_a, int grid_points, const std::vector<std::string>& bch_points,
              const std::vector<std::string>& wz_spec_paths, const std::string& out_dir,
              const std::string& format = "csv");

// Helpers shared by commands and tests.
source::RODataset load_dataset(const ExperimentConfig& config);
transform::Plan plan_for(const ExperimentConfig& config, const Analysis& analysis);
std::vector<std::uint8_t> device_bits_fcs(const ExperimentConfig& config, const Analysis& analysis,
                                          const Eigen::VectorXd& array);
std::vector<std::uint8_t> device_bits_wz(const ExperimentConfig& config, int device);

struct UniquenessResult {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t pairs = 0;
};
UniquenessResult uniqueness(const std::vector<std::vector<std::uint8_t>>& sequences,
                            RunPolicy policy = RunPolicy::Parallel);

}  // namespace pufkey::pipeline

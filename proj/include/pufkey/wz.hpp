// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pufkey/common.hpp"
#include "pufkey/polar.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pufkey::wz {

// Nested pair C(n, F1 u Fw) within C1(n, F1): C1 quantizes the enrollment
// output, C corrects the effective channel during reconstruction. Frozen
// values over F1 are all-zero; the bits at Fw become the public helper data.
struct NestedPolarSpec {
  int n = 0;
  std::vector<int> frozen_f1;  // 0-based, sorted ascending
  std::vector<int> frozen_fw;  // 0-based, sorted ascending, disjoint from f1
  int list_size = 8;

  // Design operating point.
  double p_a = 0.0;       // measurement channel crossover
  double p_c = 0.0;       // code C design crossover (= E[q] * p_a)
  double e_q = 0.0;       // target average VQ distortion
  double target_pb = 0.0;
  bool surrogate = false;  // target_pb reached by extrapolation, not direct MC

  int m1() const { return static_cast<int>(frozen_f1.size()); }
  int m2() const { return static_cast<int>(frozen_fw.size()); }
  int key_length() const { return n - m1() - m2(); }
  void validate() const;

  std::vector<int> key_positions() const;
  polar::FrozenMap vq_frozen() const;  // F1 -> 0
  polar::FrozenMap channel_frozen(std::span<const std::uint8_t> helper) const;

  // Indices are serialized 1-based.
  std::string to_json() const;
  static NestedPolarSpec from_json(const std::string& text);
  std::string spec_hash() const;
};

struct Enrollment {
  std::vector<std::uint8_t> helper;     // u at Fw
  std::vector<std::uint8_t> secret;     // u at unfrozen positions
  std::vector<std::uint8_t> quantized;  // x_q = transform(u)
  double distortion = 0.0;              // wt(x xor x_q) / n
};

// Quantize x with C1 (LLRs for a BSC(q) observation), split u into
// helper/secret, and record the empirical distortion.
Enrollment enroll(const NestedPolarSpec& spec, std::span<const std::uint8_t> x, double q);

// Decode C from y with frozen [F1 -> 0, Fw -> helper] at the effective
// crossover p_total (= q * p_a), returning the key estimate.
std::vector<std::uint8_t> reconstruct(const NestedPolarSpec& spec, std::span<const std::uint8_t> y,
                                      std::span<const std::uint8_t> helper, double p_total);

// E[q] = (p_c - p_a) / (1 - 2 p_a); throws if p_c < p_a.
double distortion_from_pc(double p_c, double p_a);

// Monte-Carlo block-error rate of the code C alone (all frozen bits zero)
// over a BSC(p). Early-aborts once `abort_errors` errors accumulate.
struct KerEstimate {
  int trials = 0;
  int errors = 0;
  double ker() const { return trials ? static_cast<double>(errors) / trials : 0.0; }
  WilsonInterval wilson() const { return wilson_interval(static_cast<std::uint64_t>(errors), static_cast<std::uint64_t>(trials)); }
};

KerEstimate channel_ker(int n, const std::vector<int>& frozen_indices, int list_size, double crossover,
                        int max_trials, std::uint64_t seed, int abort_errors = 0,
                        RunPolicy policy = RunPolicy::Parallel);

// Full-system key-error rate: enroll, pass through BSC(p_channel), reconstruct.
KerEstimate system_ker(const NestedPolarSpec& spec, double p_channel, int trials, std::uint64_t seed,
                       RunPolicy policy = RunPolicy::Parallel);

// Mean VQ distortion over `trials` random enrollments of a candidate F1.
double mean_distortion(int n, const std::vector<int>& f1, int list_size, double q, int trials,
                       std::uint64_t seed, RunPolicy policy = RunPolicy::Parallel);

struct SweepPoint {
  double crossover;
  int trials;
  int errors;
};

struct ShrinkPoint {
  int m1;
  double distortion;
};

struct DesignOptions {
  int list_size = 8;
  int construction_trials = 100000;
  int sweep_trials = 6000;
  double sweep_step = 0.01;
  double surrogate_pb = 1e-3;  // direct-MC floor; smaller targets extrapolate
  int distortion_trials = 400;
  int final_distortion_trials = 1000;
};

struct DesignReport {
  bool feasible = false;
  std::string infeasible_reason;
  std::vector<SweepPoint> sweep;
  double p_c = 0.0;
  double target_distortion = 0.0;
  bool surrogate_extrapolation = false;
  std::vector<ShrinkPoint> shrink_path;
  double measured_distortion = 0.0;
  NestedPolarSpec spec;

  std::string to_json() const;
};

// The three-step nested design: (1) construct C at rate key_length/n,
// (2) sweep the BSC crossover for the largest p_c meeting target_pb,
// (3) shrink F1 from F along the reliability order until the mean VQ
// distortion reaches E[q] with the least helper data.
DesignReport design_nested(int n, int key_length, double p_a, double target_pb, std::uint64_t seed,
                           const DesignOptions& options = {});

struct PaddingReport {
  int extra_bits = 0;
  double measured_quantile = 0.0;  // distortion quantile after padding
  double quantile = 0.0;
  int trials = 0;
  bool low_trials_warning = false;
};

// Extra helper bits (moved out of F1 along the reliability order) needed so
// the given distortion quantile over devices still meets the design target.
PaddingReport helper_quantile_padding(const NestedPolarSpec& spec, double quantile, int trials,
                                      std::uint64_t seed, RunPolicy policy = RunPolicy::Parallel);

}  // namespace pufkey::wz

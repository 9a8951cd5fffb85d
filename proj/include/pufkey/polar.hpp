// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pufkey/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pufkey::polar {

// x = u * G_n over GF(2), G_n the n-fold Kronecker power of [[1,0],[1,1]]
// in natural (non-bit-reversed) order. The map is an involution.
std::vector<std::uint8_t> transform(std::span<const std::uint8_t> u);

// BSC hard-decision LLRs: (1-2*bit) * min(ln((1-p)/p), clip).
std::vector<double> bsc_llrs(std::span<const std::uint8_t> word, double crossover, double clip = 30.0);

// frozen[i] = -1 for information positions, else the frozen bit value (0/1).
using FrozenMap = std::vector<std::int8_t>;

FrozenMap frozen_map(int n, std::span<const int> frozen_indices, std::span<const std::uint8_t> values);

// Successive-cancellation list decoding with exact box-plus updates and
// path-metric penalties log(1+exp(-(1-2u)L)). Returns the full u-estimate of
// the best surviving path. list_size 1 is plain SC. Scratch state is local to
// the call, so concurrent decodes are safe.
std::vector<std::uint8_t> scl_decode(std::span<const double> llrs, const FrozenMap& frozen, int list_size);

struct ReliabilityRanking {
  int n = 0;
  double design_p = 0.0;
  int trials = 0;
  // error_weight[i]: twice the genie-aided SC error count of bit channel i
  // (ties at LLR exactly 0 count once).
  std::vector<std::uint64_t> error_weight;
  // Channel indices from least to most reliable; deterministic tie-break by
  // ascending index.
  std::vector<int> order;

  std::vector<int> least_reliable(int count) const;  // sorted ascending indices
};

// Monte-Carlo genie-aided SC construction on BSC(design_p). Per-trial seeds
// are derived from the base seed, so the parallel path reproduces the serial
// one exactly.
ReliabilityRanking construct_reliability(int n, double design_p, int mc_trials, std::uint64_t seed,
                                         RunPolicy policy = RunPolicy::Parallel);

}  // namespace pufkey::polar

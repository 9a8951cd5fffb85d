// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

// Timing comparison of the OpenMP kernels against their serial reference
// implementations, with an equality check on the outputs.

#include "pufkey/pipeline.hpp"
#include "pufkey/polar.hpp"
#include "pufkey/source.hpp"
#include "pufkey/wz.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <omp.h>

using namespace pufkey;

namespace {

template <typename F>
double time_ms(F&& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-28s serial %9.1f ms   openmp %9.1f ms   speedup %5.2fx   outputs %s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, equal ? "identical" : "DIFFER");
}

}  // namespace

int main() {
  std::printf("threads: %d\n\n", omp_get_max_threads());

  {
    auto params = source::default_synthetic_params(16, 16);
    source::RODataset a, b;
    double ts = time_ms([&] { a = source::generate_synthetic(params, 2000, 2, 7, RunPolicy::Serial); });
    double tp = time_ms([&] { b = source::generate_synthetic(params, 2000, 2, 7, RunPolicy::Parallel); });
    bool equal = a.devices.size() == b.devices.size();
    for (std::size_t i = 0; equal && i < a.devices.size(); ++i) {
      equal = a.devices[i].noiseless == b.devices[i].noiseless && a.devices[i].measurements == b.devices[i].measurements;
    }
    report("generate_synthetic 16x16", ts, tp, equal);
  }

  {
    polar::ReliabilityRanking a, b;
    double ts = time_ms([&] { a = polar::construct_reliability(1024, 0.15, 20000, 11, RunPolicy::Serial); });
    double tp = time_ms([&] { b = polar::construct_reliability(1024, 0.15, 20000, 11, RunPolicy::Parallel); });
    report("polar genie construction", ts, tp, a.error_weight == b.error_weight && a.order == b.order);
  }

  {
    auto rank = polar::construct_reliability(512, 0.1, 20000, 13);
    auto frozen = rank.least_reliable(384);
    wz::KerEstimate a, b;
    double ts = time_ms([&] { a = wz::channel_ker(512, frozen, 8, 0.1, 1500, 17, 0, RunPolicy::Serial); });
    double tp = time_ms([&] { b = wz::channel_ker(512, frozen, 8, 0.1, 1500, 17, 0, RunPolicy::Parallel); });
    report("polar scl channel trials", ts, tp, a.trials == b.trials && a.errors == b.errors);
  }

  {
    auto rank = polar::construct_reliability(512, 0.1, 20000, 13);
    std::vector<int> f1 = rank.least_reliable(160);
    double da = 0, db = 0;
    double ts = time_ms([&] { da = wz::mean_distortion(512, f1, 8, 0.08, 600, 23, RunPolicy::Serial); });
    double tp = time_ms([&] { db = wz::mean_distortion(512, f1, 8, 0.08, 600, 23, RunPolicy::Parallel); });
    report("wz vq distortion trials", ts, tp, da == db);
  }

  {
    Rng rng(29);
    std::vector<std::vector<std::uint8_t>> seqs(200, std::vector<std::uint8_t>(1024));
    for (auto& s : seqs) {
      for (auto& bit : s) bit = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    }
    pipeline::UniquenessResult a{}, b{};
    double ts = time_ms([&] { a = pipeline::uniqueness(seqs, RunPolicy::Serial); });
    double tp = time_ms([&] { b = pipeline::uniqueness(seqs, RunPolicy::Parallel); });
    report("pairwise uniqueness", ts, tp, a.mean == b.mean && a.variance == b.variance);
  }

  return 0;
}

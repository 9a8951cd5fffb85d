// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/wz.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace pufkey::wz {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::vector<std::uint8_t> random_bits(int n, Rng& rng) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
  return bits;
}

std::vector<std::uint8_t> bsc_corrupt(std::span<const std::uint8_t> x, double p, Rng& rng) {
  std::vector<std::uint8_t> y(x.begin(), x.end());
  for (auto& b : y) {
    if (rng.bernoulli(p)) b ^= 1u;
  }
  return y;
}

}  // namespace

void NestedPolarSpec::validate() const {
  if (!is_pow2(n)) throw std::invalid_argument("NestedPolarSpec: n is not a power of two");
  if (list_size < 1) throw std::invalid_argument("NestedPolarSpec: bad list size");
  std::set<int> f1(frozen_f1.begin(), frozen_f1.end());
  std::set<int> fw(frozen_fw.begin(), frozen_fw.end());
  if (f1.size() != frozen_f1.size() || fw.size() != frozen_fw.size()) {
    throw std::invalid_argument("NestedPolarSpec: duplicate frozen indices");
  }
  for (int i : frozen_f1) {
    if (i < 0 || i >= n) throw std::invalid_argument("NestedPolarSpec: F1 index out of range");
    if (fw.count(i)) throw std::invalid_argument("NestedPolarSpec: F1 and Fw overlap");
  }
  for (int i : frozen_fw) {
    if (i < 0 || i >= n) throw std::invalid_argument("NestedPolarSpec: Fw index out of range");
  }
  if (key_length() < 1) throw std::invalid_argument("NestedPolarSpec: no key positions left");
}

std::vector<int> NestedPolarSpec::key_positions() const {
  std::vector<std::uint8_t> taken(static_cast<std::size_t>(n), 0);
  for (int i : frozen_f1) taken[static_cast<std::size_t>(i)] = 1;
  for (int i : frozen_fw) taken[static_cast<std::size_t>(i)] = 1;
  std::vector<int> pos;
  pos.reserve(static_cast<std::size_t>(key_length()));
  for (int i = 0; i < n; ++i) {
    if (!taken[static_cast<std::size_t>(i)]) pos.push_back(i);
  }
  return pos;
}

polar::FrozenMap NestedPolarSpec::vq_frozen() const {
  std::vector<std::uint8_t> zeros(frozen_f1.size(), 0);
  return polar::frozen_map(n, frozen_f1, zeros);
}

polar::FrozenMap NestedPolarSpec::channel_frozen(std::span<const std::uint8_t> helper) const {
  if (static_cast<int>(helper.size()) != m2()) throw std::invalid_argument("channel_frozen: helper length != m2");
  polar::FrozenMap map(static_cast<std::size_t>(n), -1);
  for (int i : frozen_f1) map[static_cast<std::size_t>(i)] = 0;
  for (std::size_t j = 0; j < helper.size(); ++j) {
    map[static_cast<std::size_t>(frozen_fw[j])] = static_cast<std::int8_t>(helper[j] & 1u);
  }
  return map;
}

std::string NestedPolarSpec::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  auto one_based = [](const std::vector<int>& v) {
    std::vector<int> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] + 1;
    return out;
  };
  j["frozen_f1"] = one_based(frozen_f1);
  j["frozen_fw"] = one_based(frozen_fw);
  j["list_size"] = list_size;
  j["key_length"] = key_length();
  j["design"] = {{"p_A", p_a}, {"p_c", p_c}, {"e_q", e_q}, {"target_pb", target_pb}, {"surrogate", surrogate}};
  return j.dump();
}

NestedPolarSpec NestedPolarSpec::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  NestedPolarSpec spec;
  spec.n = j.at("n").get<int>();
  auto zero_based = [](std::vector<int> v) {
    for (auto& i : v) --i;
    std::sort(v.begin(), v.end());
    return v;
  };
  spec.frozen_f1 = zero_based(j.at("frozen_f1").get<std::vector<int>>());
  spec.frozen_fw = zero_based(j.at("frozen_fw").get<std::vector<int>>());
  spec.list_size = j.value("list_size", 8);
  if (j.contains("design")) {
    const auto& d = j["design"];
    spec.p_a = d.value("p_A", 0.0);
    spec.p_c = d.value("p_c", 0.0);
    spec.e_q = d.value("e_q", 0.0);
    spec.target_pb = d.value("target_pb", 0.0);
    spec.surrogate = d.value("surrogate", false);
  }
  spec.validate();
  return spec;
}

std::string NestedPolarSpec::spec_hash() const { return to_hex_u64(fnv1a64(to_json())); }

Enrollment enroll(const NestedPolarSpec& spec, std::span<const std::uint8_t> x, double q) {
  if (static_cast<int>(x.size()) != spec.n) throw std::invalid_argument("wz::enroll: x length != n");
  auto llrs = polar::bsc_llrs(x, q);
  auto u = polar::scl_decode(llrs, spec.vq_frozen(), spec.list_size);

  Enrollment out;
  out.helper.reserve(spec.frozen_fw.size());
  for (int i : spec.frozen_fw) out.helper.push_back(u[static_cast<std::size_t>(i)]);
  for (int i : spec.key_positions()) out.secret.push_back(u[static_cast<std::size_t>(i)]);
  out.quantized = polar::transform(u);
  std::size_t dist = 0;
  for (int i = 0; i < spec.n; ++i) dist += (out.quantized[static_cast<std::size_t>(i)] ^ x[static_cast<std::size_t>(i)]) & 1u;
  out.distortion = static_cast<double>(dist) / spec.n;
  return out;
}

std::vector<std::uint8_t> reconstruct(const NestedPolarSpec& spec, std::span<const std::uint8_t> y,
                                      std::span<const std::uint8_t> helper, double p_total) {
  if (static_cast<int>(y.size()) != spec.n) throw std::invalid_argument("wz::reconstruct: y length != n");
  auto llrs = polar::bsc_llrs(y, p_total);
  auto u = polar::scl_decode(llrs, spec.channel_frozen(helper), spec.list_size);
  std::vector<std::uint8_t> key;
  key.reserve(static_cast<std::size_t>(spec.key_length()));
  for (int i : spec.key_positions()) key.push_back(u[static_cast<std::size_t>(i)]);
  return key;
}

double distortion_from_pc(double p_c, double p_a) {
  if (p_a < 0.0 || p_a >= 0.5) throw std::invalid_argument("distortion_from_pc: p_A outside [0,0.5)");
  if (p_c >= 0.5) throw std::invalid_argument("distortion_from_pc: p_c outside [p_A,0.5)");
  if (p_c < p_a) throw std::invalid_argument("distortion_from_pc: p_c < p_A gives negative distortion");
  return (p_c - p_a) / (1.0 - 2.0 * p_a);
}

KerEstimate channel_ker(int n, const std::vector<int>& frozen_indices, int list_size, double crossover,
                        int max_trials, std::uint64_t seed, int abort_errors, RunPolicy policy) {
  std::vector<std::uint8_t> zeros(frozen_indices.size(), 0);
  auto frozen = polar::frozen_map(n, frozen_indices, zeros);
  std::vector<int> info;
  for (int i = 0; i < n; ++i) {
    if (frozen[static_cast<std::size_t>(i)] < 0) info.push_back(i);
  }

  auto run_trial = [&](std::uint64_t trial_seed) -> int {
    Rng rng(trial_seed);
    std::vector<std::uint8_t> u(static_cast<std::size_t>(n), 0);
    for (int i : info) u[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    auto x = polar::transform(u);
    auto y = bsc_corrupt(x, crossover, rng);
    auto llrs = polar::bsc_llrs(y, crossover);
    auto uhat = polar::scl_decode(llrs, frozen, list_size);
    for (int i : info) {
      if (uhat[static_cast<std::size_t>(i)] != u[static_cast<std::size_t>(i)]) return 1;
    }
    return 0;
  };

  KerEstimate est;
  if (policy == RunPolicy::Parallel) {
    // Chunked so the early abort stays deterministic: all trials of a chunk
    // run before the abort check, independent of thread interleaving.
    const int chunk = 256;
    int done = 0;
    while (done < max_trials) {
      int batch = std::min(chunk, max_trials - done);
      int batch_errors = 0;
#pragma omp parallel for schedule(static) reduction(+ : batch_errors)
      for (int t = 0; t < batch; ++t) {
        batch_errors += run_trial(derive_seed(seed, static_cast<std::uint64_t>(done + t)));
      }
      est.errors += batch_errors;
      done += batch;
      est.trials = done;
      if (abort_errors > 0 && est.errors >= abort_errors) break;
    }
  } else {
    for (int t = 0; t < max_trials; ++t) {
      est.errors += run_trial(derive_seed(seed, static_cast<std::uint64_t>(t)));
      est.trials = t + 1;
      if (abort_errors > 0 && est.errors >= abort_errors && (est.trials % 256) == 0) break;
    }
  }
  return est;
}

KerEstimate system_ker(const NestedPolarSpec& spec, double p_channel, int trials, std::uint64_t seed,
                       RunPolicy policy) {
  // Residual between y and x_q is the cascade of the VQ distortion and the
  // measurement channel.
  double p_total = spec.e_q * (1.0 - p_channel) + (1.0 - spec.e_q) * p_channel;

  auto run_trial = [&](std::uint64_t trial_seed) -> int {
    Rng rng(trial_seed);
    auto x = random_bits(spec.n, rng);
    auto enr = enroll(spec, x, spec.e_q);
    auto y = bsc_corrupt(x, p_channel, rng);
    auto key = reconstruct(spec, y, enr.helper, p_total);
    return key == enr.secret ? 0 : 1;
  };

  KerEstimate est;
  est.trials = trials;
  if (policy == RunPolicy::Parallel) {
    int errors = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : errors)
    for (int t = 0; t < trials; ++t) {
      errors += run_trial(derive_seed(seed, static_cast<std::uint64_t>(t)));
    }
    est.errors = errors;
  } else {
    for (int t = 0; t < trials; ++t) {
      est.errors += run_trial(derive_seed(seed, static_cast<std::uint64_t>(t)));
    }
  }
  return est;
}

namespace {

// Distortion weights (bit counts) per trial for a candidate F1; integer
// outputs keep parallel and serial runs identical.
std::vector<int> distortion_weights(int n, const std::vector<int>& f1, int list_size, double q, int trials,
                                    std::uint64_t seed, RunPolicy policy) {
  NestedPolarSpec probe;
  probe.n = n;
  probe.frozen_f1 = f1;
  probe.list_size = list_size;

  std::vector<int> weights(static_cast<std::size_t>(trials), 0);
  auto run_trial = [&](int t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    auto x = random_bits(n, rng);
    auto llrs = polar::bsc_llrs(x, q);
    auto u = polar::scl_decode(llrs, probe.vq_frozen(), list_size);
    auto xq = polar::transform(u);
    int w = 0;
    for (int i = 0; i < n; ++i) w += (xq[static_cast<std::size_t>(i)] ^ x[static_cast<std::size_t>(i)]) & 1u;
    weights[static_cast<std::size_t>(t)] = w;
  };

  if (policy == RunPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (int t = 0; t < trials; ++t) run_trial(t);
  } else {
    for (int t = 0; t < trials; ++t) run_trial(t);
  }
  return weights;
}

}  // namespace

double mean_distortion(int n, const std::vector<int>& f1, int list_size, double q, int trials,
                       std::uint64_t seed, RunPolicy policy) {
  auto w = distortion_weights(n, f1, list_size, q, trials, seed, policy);
  long long total = 0;
  for (int v : w) total += v;
  return static_cast<double>(total) / (static_cast<double>(trials) * n);
}

std::string DesignReport::to_json() const {
  nlohmann::json j;
  j["feasible"] = feasible;
  if (!feasible) j["infeasible_reason"] = infeasible_reason;
  nlohmann::json sweep_json = nlohmann::json::array();
  for (const auto& s : sweep) {
    sweep_json.push_back({{"crossover", s.crossover}, {"trials", s.trials}, {"errors", s.errors}});
  }
  j["sweep"] = sweep_json;
  j["p_c"] = p_c;
  j["target_distortion"] = target_distortion;
  j["surrogate_extrapolation"] = surrogate_extrapolation;
  nlohmann::json shrink_json = nlohmann::json::array();
  for (const auto& s : shrink_path) {
    shrink_json.push_back({{"m1", s.m1}, {"distortion", s.distortion}});
  }
  j["shrink_path"] = shrink_json;
  j["measured_distortion"] = measured_distortion;
  if (feasible) j["spec"] = nlohmann::json::parse(spec.to_json());
  return j.dump(2);
}

DesignReport design_nested(int n, int key_length, double p_a, double target_pb, std::uint64_t seed,
                           const DesignOptions& options) {
  if (!is_pow2(n)) throw std::invalid_argument("design_nested: n is not a power of two");
  if (key_length < 1 || key_length >= n) throw std::invalid_argument("design_nested: bad key length");
  if (p_a <= 0.0 || p_a >= 0.5) throw std::invalid_argument("design_nested: p_A outside (0,0.5)");

  DesignReport report;

  // Step 1: code C of rate key_length/n from the reliability ranking at the
  // smallest admissible operating point p_A.
  int frozen_count = n - key_length;
  auto ranking = polar::construct_reliability(n, p_a, options.construction_trials, derive_seed(seed, 1));
  std::vector<int> frozen_f = ranking.least_reliable(frozen_count);

  // Step 2: largest crossover p_c where C still meets the block-error target.
  // Targets below the direct-MC floor are swept at the floor and the final
  // verdict extrapolates; the report flags that.
  double mc_target = std::max(target_pb, options.surrogate_pb);
  bool surrogate = target_pb < options.surrogate_pb;
  int trials = options.sweep_trials;
  int abort_errors = std::max(20, static_cast<int>(3.0 * mc_target * trials));

  auto measure = [&](double p, std::uint64_t stream) {
    auto est = channel_ker(n, frozen_f, options.list_size, p, trials, derive_seed(seed, stream), abort_errors);
    report.sweep.push_back({p, est.trials, est.errors});
    return est;
  };

  auto meets = [&](const KerEstimate& est) { return est.ker() <= mc_target; };

  std::uint64_t stream = 100;
  auto base = measure(p_a, stream++);
  if (!meets(base)) {
    report.feasible = false;
    report.surrogate_extrapolation = surrogate;
    report.infeasible_reason =
        "code C of rate " + std::to_string(key_length) + "/" + std::to_string(n) +
        " misses the block-error target already at p_c = p_A (measured " + std::to_string(base.ker()) + ")";
    return report;
  }

  double good = p_a;
  double bad = -1.0;
  for (double p = p_a + options.sweep_step; p < 0.5; p += options.sweep_step) {
    auto est = measure(p, stream++);
    if (meets(est)) {
      good = p;
    } else {
      bad = p;
      break;
    }
  }
  if (bad > 0.0) {
    for (int i = 0; i < 3; ++i) {
      double mid = 0.5 * (good + bad);
      auto est = measure(mid, stream++);
      if (meets(est)) {
        good = mid;
      } else {
        bad = mid;
      }
    }
  }
  report.p_c = good;
  report.surrogate_extrapolation = surrogate;

  if (surrogate) {
    // The real target sits below the direct-MC floor. Fit log10(KER) against
    // the crossover on the measurable sweep points and slide the surrogate
    // operating point down the fitted slope.
    for (int extra = 1; extra <= 2; ++extra) {
      measure(std::min(0.49, good + extra * options.sweep_step), stream++);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (const auto& pt : report.sweep) {
      if (pt.errors < 8) continue;
      double x = pt.crossover;
      double y = std::log10(static_cast<double>(pt.errors) / pt.trials);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++cnt;
    }
    double slope = 0.0;
    if (cnt >= 2) slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    if (slope <= 0.0) {
      report.feasible = false;
      report.infeasible_reason = "cannot extrapolate below the Monte-Carlo floor: no usable slope";
      return report;
    }
    double decades = std::log10(mc_target) - std::log10(target_pb);
    report.p_c = good - decades / slope;
    if (report.p_c <= p_a) {
      report.feasible = false;
      report.infeasible_reason = "extrapolated crossover for the requested block-error target falls at or below p_A";
      return report;
    }
  }

  report.target_distortion = distortion_from_pc(report.p_c, p_a);
  if (report.target_distortion <= 0.0) {
    report.feasible = false;
    report.infeasible_reason = "no crossover above p_A meets the target; helper data cannot be reduced";
    return report;
  }

  // Step 3: shrink F1 from F along the reliability order (most reliable
  // first) until the mean VQ distortion is within the target; monotonicity
  // of distortion in |F1| admits a bisection over the removal count.
  std::set<int> f_set(frozen_f.begin(), frozen_f.end());
  std::vector<int> f_by_reliability;  // least reliable first
  for (int idx : ranking.order) {
    if (f_set.count(idx)) f_by_reliability.push_back(idx);
  }
  auto f1_of = [&](int m1_count) {
    std::vector<int> f1(f_by_reliability.begin(), f_by_reliability.begin() + m1_count);
    std::sort(f1.begin(), f1.end());
    return f1;
  };
  auto eval_distortion = [&](int m1_count) {
    double d = mean_distortion(n, f1_of(m1_count), options.list_size, report.target_distortion,
                               options.distortion_trials, derive_seed(seed, 1000 + static_cast<std::uint64_t>(m1_count)));
    report.shrink_path.push_back({m1_count, d});
    return d;
  };

  int lo = 0;                  // distortion(0) = 0: VQ with full freedom reproduces x
  int hi = frozen_count;       // F1 = F
  if (eval_distortion(hi) > report.target_distortion) {
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      if (eval_distortion(mid) <= report.target_distortion) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  } else {
    lo = hi;  // even F1 = F already meets the distortion target
  }
  int m1_final = lo;

  NestedPolarSpec spec;
  spec.n = n;
  spec.frozen_f1 = f1_of(m1_final);
  std::set<int> f1_set(spec.frozen_f1.begin(), spec.frozen_f1.end());
  for (int idx : frozen_f) {
    if (!f1_set.count(idx)) spec.frozen_fw.push_back(idx);
  }
  std::sort(spec.frozen_fw.begin(), spec.frozen_fw.end());
  spec.list_size = options.list_size;
  spec.p_a = p_a;
  spec.p_c = report.p_c;
  spec.e_q = report.target_distortion;
  spec.target_pb = target_pb;
  spec.surrogate = surrogate;
  spec.validate();

  report.measured_distortion = mean_distortion(n, spec.frozen_f1, options.list_size, spec.e_q,
                                               options.final_distortion_trials, derive_seed(seed, 2000));
  std::sort(report.shrink_path.begin(), report.shrink_path.end(),
            [](const ShrinkPoint& a, const ShrinkPoint& b) { return a.m1 > b.m1; });
  report.spec = std::move(spec);
  report.feasible = true;
  return report;
}

PaddingReport helper_quantile_padding(const NestedPolarSpec& spec, double quantile, int trials,
                                      std::uint64_t seed, RunPolicy policy) {
  if (quantile <= 0.0 || quantile >= 1.0) throw std::invalid_argument("helper_quantile_padding: bad quantile");
  if (trials < 1) throw std::invalid_argument("helper_quantile_padding: need trials");

  PaddingReport rep;
  rep.quantile = quantile;
  rep.trials = trials;
  rep.low_trials_warning = static_cast<double>(trials) * (1.0 - quantile) < 10.0;

  // F1 sorted least reliable first is not stored in the spec; the removal
  // order here re-ranks at the design point.
  auto ranking = polar::construct_reliability(spec.n, spec.p_c > 0 ? spec.p_c : spec.p_a, 20000,
                                              derive_seed(seed, 7), policy);
  std::set<int> f1_set(spec.frozen_f1.begin(), spec.frozen_f1.end());
  std::vector<int> f1_by_reliability;
  for (int idx : ranking.order) {
    if (f1_set.count(idx)) f1_by_reliability.push_back(idx);
  }

  auto quantile_of = [&](int extra) {
    std::vector<int> f1(f1_by_reliability.begin(), f1_by_reliability.end() - extra);
    std::sort(f1.begin(), f1.end());
    auto weights = distortion_weights(spec.n, f1, spec.list_size, spec.e_q, trials, derive_seed(seed, 3000),
                                      policy);
    std::sort(weights.begin(), weights.end());
    std::size_t k = static_cast<std::size_t>(std::ceil(quantile * trials));
    if (k == 0) k = 1;
    return static_cast<double>(weights[k - 1]) / spec.n;
  };

  double target = spec.e_q;
  double q0 = quantile_of(0);
  if (q0 <= target) {
    rep.extra_bits = 0;
    rep.measured_quantile = q0;
    return rep;
  }
  int lo = 0;                    // quantile(lo) > target
  int hi = spec.m1();            // full freedom: distortion 0
  double q_hi = quantile_of(hi);
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    double q_mid = quantile_of(mid);
    if (q_mid <= target) {
      hi = mid;
      q_hi = q_mid;
    } else {
      lo = mid;
    }
  }
  rep.extra_bits = hi;
  rep.measured_quantile = q_hi;
  return rep;
}

}  // namespace pufkey::wz

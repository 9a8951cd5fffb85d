// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/polar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pufkey::polar {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int log2_int(int n) {
  int m = 0;
  while ((1 << m) < n) ++m;
  return m;
}

// log(1 + e^{-s}) for s >= 0.
inline double log1p_exp_neg(double s) {
  if (s > 37.0) return 0.0;
  return std::log1p(std::exp(-s));
}

// Exact box-plus: 2 atanh(tanh(a/2) tanh(b/2)), in the min-sum-plus-correction
// form log((1+e^{a+b})/(e^a+e^b)).
inline double boxplus(double a, double b) {
  double sa = std::abs(a), sb = std::abs(b);
  double sign = ((a < 0.0) != (b < 0.0)) ? -1.0 : 1.0;
  return sign * std::min(sa, sb) + log1p_exp_neg(std::abs(a + b)) - log1p_exp_neg(std::abs(a - b));
}

// Path-metric penalty of deciding bit u under LLR l.
inline double metric_penalty(double l, std::uint8_t u) {
  double x = (u ? -l : l);
  if (x >= 0.0) return log1p_exp_neg(x);
  return -x + log1p_exp_neg(-x);
}

}  // namespace

std::vector<std::uint8_t> transform(std::span<const std::uint8_t> u) {
  int n = static_cast<int>(u.size());
  if (!is_pow2(n)) throw std::invalid_argument("polar::transform: length is not a power of two");
  std::vector<std::uint8_t> x(u.begin(), u.end());
  for (int len = 1; len < n; len <<= 1) {
    for (int i = 0; i < n; i += 2 * len) {
      for (int j = i; j < i + len; ++j) {
        x[static_cast<std::size_t>(j)] ^= x[static_cast<std::size_t>(j + len)];
      }
    }
  }
  return x;
}

std::vector<double> bsc_llrs(std::span<const std::uint8_t> word, double crossover, double clip) {
  if (crossover < 0.0 || crossover > 0.5) throw std::invalid_argument("bsc_llrs: crossover outside [0,0.5]");
  double mag = clip;
  if (crossover > 0.0) mag = std::min(std::log((1.0 - crossover) / crossover), clip);
  std::vector<double> llrs(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) llrs[i] = (word[i] & 1u) ? -mag : mag;
  return llrs;
}

FrozenMap frozen_map(int n, std::span<const int> frozen_indices, std::span<const std::uint8_t> values) {
  if (frozen_indices.size() != values.size()) throw std::invalid_argument("frozen_map: index/value size mismatch");
  FrozenMap map(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < frozen_indices.size(); ++i) {
    int idx = frozen_indices[i];
    if (idx < 0 || idx >= n) throw std::invalid_argument("frozen_map: index out of range");
    if (map[static_cast<std::size_t>(idx)] != -1) throw std::invalid_argument("frozen_map: duplicate index");
    map[static_cast<std::size_t>(idx)] = static_cast<std::int8_t>(values[i] & 1u);
  }
  return map;
}

namespace {

// List decoder state with lazy (copy-on-write) per-level arrays, following the
// Tal-Vardy bookkeeping. Level 0 holds channel LLRs (length n), level mm a
// single leaf value. Bit arrays keep the two child codeword segments per level.
class SclState {
 public:
  SclState(std::span<const double> llrs, int list_size)
      : n_(static_cast<int>(llrs.size())), mm_(log2_int(n_)), L_(list_size) {
    llr_.resize(static_cast<std::size_t>(mm_) + 1);
    bits_.resize(static_cast<std::size_t>(mm_) + 1);
    slot_ref_.resize(static_cast<std::size_t>(mm_) + 1);
    slot_free_.resize(static_cast<std::size_t>(mm_) + 1);
    path_slot_.assign(static_cast<std::size_t>(mm_) + 1, std::vector<int>(static_cast<std::size_t>(L_), -1));
    for (int lev = 0; lev <= mm_; ++lev) {
      int len = n_ >> lev;
      llr_[static_cast<std::size_t>(lev)].assign(static_cast<std::size_t>(L_) * len, 0.0);
      bits_[static_cast<std::size_t>(lev)].assign(static_cast<std::size_t>(L_) * 2 * len, 0);
      slot_ref_[static_cast<std::size_t>(lev)].assign(static_cast<std::size_t>(L_), 0);
      for (int s = L_ - 1; s >= 0; --s) slot_free_[static_cast<std::size_t>(lev)].push_back(s);
    }
    active_.assign(static_cast<std::size_t>(L_), false);
    metric_.assign(static_cast<std::size_t>(L_), 0.0);
    uhat_.assign(static_cast<std::size_t>(L_), std::vector<std::uint8_t>(static_cast<std::size_t>(n_), 0));

    // Path 0 starts alone, owning one slot per level; channel LLRs go to level 0.
    active_[0] = true;
    for (int lev = 0; lev <= mm_; ++lev) {
      int s = alloc_slot(lev);
      path_slot_[static_cast<std::size_t>(lev)][0] = s;
    }
    double* ch = llr_ptr(0, 0);
    std::copy(llrs.begin(), llrs.end(), ch);
  }

  int n() const { return n_; }
  int levels() const { return mm_; }

  bool active(int p) const { return active_[static_cast<std::size_t>(p)]; }
  double metric(int p) const { return metric_[static_cast<std::size_t>(p)]; }
  void add_metric(int p, double pen) { metric_[static_cast<std::size_t>(p)] += pen; }
  std::vector<std::uint8_t>& uhat(int p) { return uhat_[static_cast<std::size_t>(p)]; }

  double leaf_llr(int p) const { return llr_[static_cast<std::size_t>(mm_)][slot_of(mm_, p)]; }

  void compute_llr(int level, int phase) {
    if (level == 0) return;
    if ((phase & 1) == 0) compute_llr(level - 1, phase >> 1);
    int half = n_ >> level;
    for (int p = 0; p < L_; ++p) {
      if (!active_[static_cast<std::size_t>(p)]) continue;
      const double* up = llr_ptr_const(level - 1, p);
      double* cur = writable_llr(level, p);
      if ((phase & 1) == 0) {
        for (int b = 0; b < half; ++b) cur[b] = boxplus(up[b], up[b + half]);
      } else {
        const std::uint8_t* left = bits_ptr_const(level, p);  // branch 0
        for (int b = 0; b < half; ++b) {
          cur[b] = (left[b] ? -up[b] : up[b]) + up[b + half];
        }
      }
    }
  }

  void set_leaf_bit(int p, int phase, std::uint8_t u) {
    std::uint8_t* leaf = writable_bits(mm_, p);
    leaf[phase & 1] = u;
    uhat_[static_cast<std::size_t>(p)][static_cast<std::size_t>(phase)] = u;
  }

  void propagate_bits(int level, int phase) {
    // phase is odd: fold child segments into the parent branch.
    int parent_phase = phase >> 1;
    int half = n_ >> level;
    for (int p = 0; p < L_; ++p) {
      if (!active_[static_cast<std::size_t>(p)]) continue;
      const std::uint8_t* child = bits_ptr_const(level, p);
      std::uint8_t* parent = writable_bits(level - 1, p);
      std::uint8_t* dst = parent + (parent_phase & 1) * (2 * half);
      const std::uint8_t* c0 = child;
      const std::uint8_t* c1 = child + half;
      for (int b = 0; b < half; ++b) {
        dst[b] = c0[b] ^ c1[b];
        dst[b + half] = c1[b];
      }
    }
    if (parent_phase & 1) propagate_bits(level - 1, parent_phase);
  }

  int clone_path(int src) {
    int dst = -1;
    for (int p = 0; p < L_; ++p) {
      if (!active_[static_cast<std::size_t>(p)]) {
        dst = p;
        break;
      }
    }
    if (dst < 0) throw std::logic_error("scl: no free path to clone into");
    active_[static_cast<std::size_t>(dst)] = true;
    metric_[static_cast<std::size_t>(dst)] = metric_[static_cast<std::size_t>(src)];
    uhat_[static_cast<std::size_t>(dst)] = uhat_[static_cast<std::size_t>(src)];
    for (int lev = 0; lev <= mm_; ++lev) {
      int s = path_slot_[static_cast<std::size_t>(lev)][static_cast<std::size_t>(src)];
      path_slot_[static_cast<std::size_t>(lev)][static_cast<std::size_t>(dst)] = s;
      ++slot_ref_[static_cast<std::size_t>(lev)][static_cast<std::size_t>(s)];
    }
    return dst;
  }

  void kill_path(int p) {
    active_[static_cast<std::size_t>(p)] = false;
    for (int lev = 0; lev <= mm_; ++lev) {
      release_slot(lev, path_slot_[static_cast<std::size_t>(lev)][static_cast<std::size_t>(p)]);
      path_slot_[static_cast<std::size_t>(lev)][static_cast<std::size_t>(p)] = -1;
    }
  }

  int best_path() const {
    int best = -1;
    for (int p = 0; p < L_; ++p) {
      if (!active_[static_cast<std::size_t>(p)]) continue;
      if (best < 0 || metric_[static_cast<std::size_t>(p)] < metric_[static_cast<std::size_t>(best)]) best = p;
    }
    return best;
  }

 private:
  std::size_t slot_of(int level, int p) const {
    int s = path_slot_[static_cast<std::size_t>(level)][static_cast<std::size_t>(p)];
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_ >> level);
  }

  int alloc_slot(int level) {
    auto& free = slot_free_[static_cast<std::size_t>(level)];
    if (free.empty()) throw std::logic_error("scl: slot pool exhausted");
    int s = free.back();
    free.pop_back();
    slot_ref_[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)] = 1;
    return s;
  }

  void release_slot(int level, int s) {
    if (s < 0) return;
    auto& ref = slot_ref_[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)];
    if (--ref == 0) slot_free_[static_cast<std::size_t>(level)].push_back(s);
  }

  double* llr_ptr(int level, int p) { return llr_[static_cast<std::size_t>(level)].data() + slot_of(level, p); }
  const double* llr_ptr_const(int level, int p) const {
    return llr_[static_cast<std::size_t>(level)].data() + slot_of(level, p);
  }
  const std::uint8_t* bits_ptr_const(int level, int p) const {
    return bits_[static_cast<std::size_t>(level)].data() + 2 * slot_of(level, p);
  }

  // Copy-on-write accessors; LLR and bit arrays share one slot per level.
  double* writable_llr(int level, int p) {
    ensure_private(level, p);
    return llr_ptr(level, p);
  }
  std::uint8_t* writable_bits(int level, int p) {
    ensure_private(level, p);
    return bits_[static_cast<std::size_t>(level)].data() + 2 * slot_of(level, p);
  }

  void ensure_private(int level, int p) {
    int s = path_slot_[static_cast<std::size_t>(level)][static_cast<std::size_t>(p)];
    if (slot_ref_[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)] == 1) return;
    int len = n_ >> level;
    int fresh = alloc_slot(level);
    auto& llr_pool = llr_[static_cast<std::size_t>(level)];
    auto& bit_pool = bits_[static_cast<std::size_t>(level)];
    std::copy_n(llr_pool.data() + static_cast<std::size_t>(s) * len, len,
                llr_pool.data() + static_cast<std::size_t>(fresh) * len);
    std::copy_n(bit_pool.data() + static_cast<std::size_t>(s) * 2 * len, 2 * len,
                bit_pool.data() + static_cast<std::size_t>(fresh) * 2 * len);
    --slot_ref_[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)];
    path_slot_[static_cast<std::size_t>(level)][static_cast<std::size_t>(p)] = fresh;
  }

  int n_;
  int mm_;
  int L_;
  std::vector<std::vector<double>> llr_;         // per level: L slots of (n>>level)
  std::vector<std::vector<std::uint8_t>> bits_;  // per level: L slots of 2*(n>>level)
  std::vector<std::vector<int>> slot_ref_;
  std::vector<std::vector<int>> slot_free_;
  std::vector<std::vector<int>> path_slot_;
  std::vector<bool> active_;
  std::vector<double> metric_;
  std::vector<std::vector<std::uint8_t>> uhat_;
};

}  // namespace

std::vector<std::uint8_t> scl_decode(std::span<const double> llrs, const FrozenMap& frozen, int list_size) {
  int n = static_cast<int>(llrs.size());
  if (!is_pow2(n)) throw std::invalid_argument("scl_decode: length is not a power of two");
  if (static_cast<int>(frozen.size()) != n) throw std::invalid_argument("scl_decode: frozen map length mismatch");
  if (list_size < 1) throw std::invalid_argument("scl_decode: list size must be >= 1");

  SclState st(llrs, list_size);

  struct Cand {
    double metric;
    int path;
    std::uint8_t bit;
  };
  std::vector<Cand> cands;
  cands.reserve(static_cast<std::size_t>(2 * list_size));

  for (int phase = 0; phase < n; ++phase) {
    st.compute_llr(st.levels(), phase);

    if (frozen[static_cast<std::size_t>(phase)] >= 0) {
      std::uint8_t u = static_cast<std::uint8_t>(frozen[static_cast<std::size_t>(phase)]);
      for (int p = 0; p < list_size; ++p) {
        if (!st.active(p)) continue;
        st.add_metric(p, metric_penalty(st.leaf_llr(p), u));
        st.set_leaf_bit(p, phase, u);
      }
    } else {
      cands.clear();
      for (int p = 0; p < list_size; ++p) {
        if (!st.active(p)) continue;
        double l = st.leaf_llr(p);
        cands.push_back({st.metric(p) + metric_penalty(l, 0), p, 0});
        cands.push_back({st.metric(p) + metric_penalty(l, 1), p, 1});
      }
      std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.metric != b.metric) return a.metric < b.metric;
        if (a.path != b.path) return a.path < b.path;
        return a.bit < b.bit;
      });
      std::size_t keep = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(list_size));

      // survivors[p]: 0 = none, 1 = bit0 only, 2 = bit1 only, 3 = both
      std::vector<std::uint8_t> survivors(static_cast<std::size_t>(list_size), 0);
      for (std::size_t i = 0; i < keep; ++i) {
        survivors[static_cast<std::size_t>(cands[i].path)] |= static_cast<std::uint8_t>(cands[i].bit ? 2 : 1);
      }
      for (int p = 0; p < list_size; ++p) {
        if (st.active(p) && survivors[static_cast<std::size_t>(p)] == 0) st.kill_path(p);
      }
      for (int p = 0; p < list_size; ++p) {
        std::uint8_t s = survivors[static_cast<std::size_t>(p)];
        if (s == 0) continue;
        if (s == 3) {
          int q = st.clone_path(p);
          double l = st.leaf_llr(p);
          st.add_metric(p, metric_penalty(l, 0));
          st.set_leaf_bit(p, phase, 0);
          st.add_metric(q, metric_penalty(l, 1));
          st.set_leaf_bit(q, phase, 1);
        } else {
          std::uint8_t u = (s == 2) ? 1 : 0;
          st.add_metric(p, metric_penalty(st.leaf_llr(p), u));
          st.set_leaf_bit(p, phase, u);
        }
      }
    }

    if (phase & 1) st.propagate_bits(st.levels(), phase);
  }

  int best = st.best_path();
  if (best < 0) throw std::logic_error("scl_decode: no surviving path");
  return st.uhat(best);
}

namespace {

// Per-level scratch for the genie recursion; scratch[d] holds n >> d values.
using GenieScratch = std::vector<std::vector<double>>;

GenieScratch make_genie_scratch(int n) {
  GenieScratch ws;
  for (int len = n; len >= 1; len /= 2) ws.emplace_back(static_cast<std::size_t>(len));
  return ws;
}

// Genie-aided SC trial under the all-zero codeword: partial sums stay zero,
// so g reduces to a plain sum. The left subtree finishes before the right one
// writes the same scratch level, so one buffer per level suffices.
void genie_recurse(GenieScratch& ws, int depth, int bit_offset, std::vector<std::uint64_t>& weight) {
  const auto& llr = ws[static_cast<std::size_t>(depth)];
  int len = static_cast<int>(llr.size());
  if (len == 1) {
    double l = llr[0];
    if (l < 0.0) {
      weight[static_cast<std::size_t>(bit_offset)] += 2;
    } else if (l == 0.0) {
      weight[static_cast<std::size_t>(bit_offset)] += 1;
    }
    return;
  }
  int half = len / 2;
  auto& sub = ws[static_cast<std::size_t>(depth) + 1];
  for (int b = 0; b < half; ++b) sub[static_cast<std::size_t>(b)] = boxplus(llr[b], llr[b + half]);
  genie_recurse(ws, depth + 1, bit_offset, weight);
  const auto& llr2 = ws[static_cast<std::size_t>(depth)];
  for (int b = 0; b < half; ++b) sub[static_cast<std::size_t>(b)] = llr2[b] + llr2[b + half];
  genie_recurse(ws, depth + 1, bit_offset + half, weight);
}

void genie_trial(int n, double design_p, std::uint64_t trial_seed, GenieScratch& ws,
                 std::vector<std::uint64_t>& weight) {
  Rng rng(trial_seed);
  double mag = std::log((1.0 - design_p) / design_p);
  auto& llr = ws[0];
  for (int i = 0; i < n; ++i) llr[static_cast<std::size_t>(i)] = rng.bernoulli(design_p) ? -mag : mag;
  genie_recurse(ws, 0, 0, weight);
}

}  // namespace

std::vector<int> ReliabilityRanking::least_reliable(int count) const {
  if (count < 0 || count > n) throw std::invalid_argument("least_reliable: bad count");
  std::vector<int> out(order.begin(), order.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

ReliabilityRanking construct_reliability(int n, double design_p, int mc_trials, std::uint64_t seed,
                                         RunPolicy policy) {
  if (!is_pow2(n)) throw std::invalid_argument("construct_reliability: n is not a power of two");
  if (design_p <= 0.0 || design_p >= 0.5) throw std::invalid_argument("construct_reliability: p outside (0,0.5)");
  if (mc_trials < 1) throw std::invalid_argument("construct_reliability: need at least one trial");

  ReliabilityRanking rank;
  rank.n = n;
  rank.design_p = design_p;
  rank.trials = mc_trials;
  rank.error_weight.assign(static_cast<std::size_t>(n), 0);

  if (policy == RunPolicy::Parallel) {
#pragma omp parallel
    {
      std::vector<std::uint64_t> local(static_cast<std::size_t>(n), 0);
      GenieScratch ws = make_genie_scratch(n);
#pragma omp for schedule(static) nowait
      for (int t = 0; t < mc_trials; ++t) {
        genie_trial(n, design_p, derive_seed(seed, static_cast<std::uint64_t>(t)), ws, local);
      }
#pragma omp critical
      {
        for (int i = 0; i < n; ++i) rank.error_weight[static_cast<std::size_t>(i)] += local[static_cast<std::size_t>(i)];
      }
    }
  } else {
    GenieScratch ws = make_genie_scratch(n);
    for (int t = 0; t < mc_trials; ++t) {
      genie_trial(n, design_p, derive_seed(seed, static_cast<std::uint64_t>(t)), ws, rank.error_weight);
    }
  }

  rank.order.resize(static_cast<std::size_t>(n));
  std::iota(rank.order.begin(), rank.order.end(), 0);
  std::sort(rank.order.begin(), rank.order.end(), [&](int a, int b) {
    auto wa = rank.error_weight[static_cast<std::size_t>(a)];
    auto wb = rank.error_weight[static_cast<std::size_t>(b)];
    if (wa != wb) return wa > wb;  // least reliable first
    return a < b;
  });
  return rank;
}

}  // namespace pufkey::polar

// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace pufkey::gf {

// GF(2^m) with exp/log tables over a primitive polynomial. Elements are
// uint16_t in [0, 2^m). Immutable after construction and safe to share.
class Field {
 public:
  Field(int m, std::uint32_t primitive_poly);

  int m() const { return m_; }
  int size() const { return size_; }      // 2^m
  int order() const { return size_ - 1; } // multiplicative order

  std::uint16_t mul(std::uint16_t a, std::uint16_t b) const {
    if (a == 0 || b == 0) return 0;
    return exp_[(log_[a] + log_[b]) % order()];
  }

  std::uint16_t inv(std::uint16_t a) const;

  // alpha^i for any integer exponent (reduced mod 2^m - 1).
  std::uint16_t alpha_pow(long long i) const {
    long long r = i % order();
    if (r < 0) r += order();
    return exp_[static_cast<std::size_t>(r)];
  }

  int log(std::uint16_t a) const;  // throws on 0

 private:
  int m_;
  int size_;
  std::vector<std::uint16_t> exp_;  // exp_[i] = alpha^i, i in [0, 2^m-2]
  std::vector<int> log_;
};

// Default primitive polynomials for the field sizes used here.
std::uint32_t default_primitive_poly(int m);

}  // namespace pufkey::gf

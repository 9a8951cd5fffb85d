// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pufkey/gf2m.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pufkey::bch {

// Narrow-sense primitive binary BCH code of length 2^m - 1, decoded with a
// bounded-minimum-distance decoder (syndromes + Berlekamp-Massey + Chien
// search). Decoding declares failure instead of guessing beyond radius t.
class BchCode {
 public:
  BchCode(int m, int design_t);

  int length() const { return n_; }
  int dimension() const { return k_; }
  int design_distance() const { return 2 * t_ + 1; }
  int correction_radius() const { return t_; }
  const std::vector<std::uint8_t>& generator() const { return gen_; }

  // Systematic: message occupies the top k coefficient positions
  // (codeword[n-k .. n-1]), parity the bottom n-k.
  std::vector<std::uint8_t> encode(std::span<const std::uint8_t> message) const;

  // Nearest codeword within Hamming distance t, or nullopt.
  std::optional<std::vector<std::uint8_t>> correct(std::span<const std::uint8_t> word) const;

  // correct() followed by message extraction.
  std::optional<std::vector<std::uint8_t>> decode(std::span<const std::uint8_t> word) const;

  std::vector<std::uint8_t> extract_message(std::span<const std::uint8_t> codeword) const;

 private:
  bool syndromes(std::span<const std::uint8_t> word, std::vector<std::uint16_t>& out) const;  // true if all zero

  gf::Field field_;
  int n_;
  int k_;
  int t_;
  std::vector<std::uint8_t> gen_;  // generator polynomial, gen_[i] = coeff of x^i
};

// The code parameters used in this project. Throws on anything else.
BchCode make_bch(int n, int k);

}  // namespace pufkey::bch

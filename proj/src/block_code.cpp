// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/block_code.hpp"

#include <limits>
#include <stdexcept>

namespace pufkey::code {

GeneratorMatrixCode::GeneratorMatrixCode(std::string name, std::vector<std::vector<std::uint8_t>> generator_rows)
    : name_(std::move(name)), rows_(std::move(generator_rows)) {
  if (rows_.empty()) throw std::invalid_argument("GeneratorMatrixCode: empty generator");
  k_ = static_cast<int>(rows_.size());
  n_ = static_cast<int>(rows_.front().size());
  if (k_ > 20 || n_ > 24) throw std::invalid_argument("GeneratorMatrixCode: instance too large for exhaustive use");
  for (const auto& r : rows_) {
    if (static_cast<int>(r.size()) != n_) throw std::invalid_argument("GeneratorMatrixCode: ragged generator");
  }
  // Minimum nonzero codeword weight by enumeration; also checks injectivity.
  int d = std::numeric_limits<int>::max();
  for (std::uint32_t msg = 1; msg < (1u << k_); ++msg) {
    int w = 0;
    for (int j = 0; j < n_; ++j) {
      std::uint8_t bit = 0;
      for (int i = 0; i < k_; ++i) {
        if ((msg >> i) & 1u) bit ^= rows_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
      w += bit;
    }
    if (w == 0) throw std::invalid_argument("GeneratorMatrixCode: generator rows are linearly dependent");
    d = std::min(d, w);
  }
  d_min_ = d;
}

std::vector<std::uint8_t> GeneratorMatrixCode::encode(std::span<const std::uint8_t> message) const {
  if (static_cast<int>(message.size()) != k_) throw std::invalid_argument("encode: message length != k");
  std::vector<std::uint8_t> cw(static_cast<std::size_t>(n_), 0);
  for (int i = 0; i < k_; ++i) {
    if (!(message[static_cast<std::size_t>(i)] & 1u)) continue;
    for (int j = 0; j < n_; ++j) cw[static_cast<std::size_t>(j)] ^= rows_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return cw;
}

std::optional<std::vector<std::uint8_t>> GeneratorMatrixCode::decode(std::span<const std::uint8_t> word) const {
  if (static_cast<int>(word.size()) != n_) throw std::invalid_argument("decode: word length != n");
  int radius = correction_radius();
  for (std::uint32_t msg = 0; msg < (1u << k_); ++msg) {
    std::vector<std::uint8_t> m(static_cast<std::size_t>(k_));
    for (int i = 0; i < k_; ++i) m[static_cast<std::size_t>(i)] = (msg >> i) & 1u;
    auto cw = encode(m);
    int dist = 0;
    for (int j = 0; j < n_; ++j) dist += (cw[static_cast<std::size_t>(j)] ^ word[static_cast<std::size_t>(j)]) & 1u;
    if (dist <= radius) return m;
  }
  return std::nullopt;
}

std::unique_ptr<BlockCode> make_code(const std::string& name) {
  if (name == "bch_255_131") return std::make_unique<BchBlockCode>(name, bch::make_bch(255, 131));
  if (name == "bch_31_16") return std::make_unique<BchBlockCode>(name, bch::make_bch(31, 16));
  if (name == "bch_15_7") return std::make_unique<BchBlockCode>(name, bch::make_bch(15, 7));
  if (name == "rep_3_1") return std::make_unique<GeneratorMatrixCode>(name, std::vector<std::vector<std::uint8_t>>{{1, 1, 1}});
  throw std::invalid_argument("make_code: unknown code '" + name + "'");
}

}  // namespace pufkey::code

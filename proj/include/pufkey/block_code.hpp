// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pufkey/bch.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pufkey::code {

// Linear block code with bounded-minimum-distance decoding. decode() returns
// the message of the unique codeword within the correction radius, or nullopt.
class BlockCode {
 public:
  virtual ~BlockCode() = default;
  virtual std::string name() const = 0;
  virtual int length() const = 0;
  virtual int dimension() const = 0;
  virtual int design_distance() const = 0;
  int correction_radius() const { return (design_distance() - 1) / 2; }

  virtual std::vector<std::uint8_t> encode(std::span<const std::uint8_t> message) const = 0;
  virtual std::optional<std::vector<std::uint8_t>> decode(std::span<const std::uint8_t> word) const = 0;
};

class BchBlockCode final : public BlockCode {
 public:
  BchBlockCode(std::string name, bch::BchCode code) : name_(std::move(name)), code_(std::move(code)) {}

  std::string name() const override { return name_; }
  int length() const override { return code_.length(); }
  int dimension() const override { return code_.dimension(); }
  int design_distance() const override { return code_.design_distance(); }
  std::vector<std::uint8_t> encode(std::span<const std::uint8_t> m) const override { return code_.encode(m); }
  std::optional<std::vector<std::uint8_t>> decode(std::span<const std::uint8_t> w) const override {
    return code_.decode(w);
  }
  const bch::BchCode& bch() const { return code_; }

 private:
  std::string name_;
  bch::BchCode code_;
};

// Small generator-matrix code with exhaustive nearest-codeword decoding.
// Only meant for toy instances (secrecy audits, oracle tests).
class GeneratorMatrixCode final : public BlockCode {
 public:
  GeneratorMatrixCode(std::string name, std::vector<std::vector<std::uint8_t>> generator_rows);

  std::string name() const override { return name_; }
  int length() const override { return n_; }
  int dimension() const override { return k_; }
  int design_distance() const override { return d_min_; }
  std::vector<std::uint8_t> encode(std::span<const std::uint8_t> message) const override;
  std::optional<std::vector<std::uint8_t>> decode(std::span<const std::uint8_t> word) const override;

 private:
  std::string name_;
  int n_;
  int k_;
  int d_min_;
  std::vector<std::vector<std::uint8_t>> rows_;
};

// Registry: "bch_255_131", "bch_31_16", "bch_15_7", "rep_3_1".
std::unique_ptr<BlockCode> make_code(const std::string& name);

}  // namespace pufkey::code

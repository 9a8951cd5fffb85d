// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pufkey {

// All randomness in the library flows through this generator. Substreams are
// derived by hashing (seed, stream index), so per-device / per-trial work can
// run in parallel and still reproduce the serial output bit for bit.
std::uint64_t splitmix64_next(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; one spare value is cached.
  double gaussian();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// FNV-1a, used for content fingerprints of serialized artifacts. Not a
// cryptographic hash.
std::uint64_t fnv1a64(std::string_view bytes);
std::string to_hex_u64(std::uint64_t v);

// Bit <-> hex helpers. Bits are packed MSB-first: bit 0 of the sequence lands
// in the most significant bit of byte 0; the last byte is zero-padded.
std::vector<std::uint8_t> pack_bits_msb(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> unpack_bits_msb(std::span<const std::uint8_t> bytes, std::size_t n_bits);
std::string bits_to_hex(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> hex_to_bits(std::string_view hex, std::size_t n_bits);

inline std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] ^ b[i]) & 1u;
  return d;
}

inline std::size_t hamming_weight(std::span<const std::uint8_t> bits) {
  std::size_t w = 0;
  for (auto b : bits) w += b & 1u;
  return w;
}

// Write-to-temp-then-rename; readers never observe partial files.
void atomic_write_file(const std::string& path, const std::string& contents);

struct WilsonInterval {
  double rate;
  double lo;
  double hi;
};

// 95% Wilson score interval for a binomial proportion.
WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

// Controls whether a kernel runs its OpenMP path or the serial reference.
// The two must produce identical results; tests and the bench tool compare.
enum class RunPolicy { Serial, Parallel };

}  // namespace pufkey

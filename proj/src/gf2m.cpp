// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/gf2m.hpp"

#include <stdexcept>

namespace pufkey::gf {

Field::Field(int m, std::uint32_t primitive_poly) : m_(m), size_(1 << m) {
  if (m < 2 || m > 15) throw std::invalid_argument("Field: m outside [2,15]");
  exp_.resize(static_cast<std::size_t>(size_ - 1));
  log_.assign(static_cast<std::size_t>(size_), -1);
  std::uint32_t x = 1;
  for (int i = 0; i < size_ - 1; ++i) {
    exp_[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(x);
    if (log_[x] != -1) throw std::invalid_argument("Field: polynomial is not primitive");
    log_[x] = i;
    x <<= 1;
    if (x & static_cast<std::uint32_t>(size_)) x ^= primitive_poly;
  }
  if (x != 1) throw std::invalid_argument("Field: polynomial is not primitive");
}

std::uint16_t Field::inv(std::uint16_t a) const {
  if (a == 0) throw std::domain_error("Field::inv: zero has no inverse");
  return exp_[static_cast<std::size_t>((order() - log_[a]) % order())];
}

int Field::log(std::uint16_t a) const {
  if (a == 0) throw std::domain_error("Field::log: log of zero");
  return log_[a];
}

std::uint32_t default_primitive_poly(int m) {
  switch (m) {
    case 3: return 0xB;       // x^3 + x + 1
    case 4: return 0x13;      // x^4 + x + 1
    case 5: return 0x25;      // x^5 + x^2 + 1
    case 6: return 0x43;      // x^6 + x + 1
    case 7: return 0x89;      // x^7 + x^3 + 1
    case 8: return 0x11D;     // x^8 + x^4 + x^3 + x^2 + 1
    default: throw std::invalid_argument("default_primitive_poly: unsupported m");
  }
}

}  // namespace pufkey::gf

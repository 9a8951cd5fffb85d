// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/bch.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace pufkey::bch {

namespace {

// Multiply two GF(2)[x] polynomials given as bit vectors (index = degree).
std::vector<std::uint8_t> poly_mul_gf2(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  std::vector<std::uint8_t> out(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i]) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] ^= b[j];
  }
  return out;
}

}  // namespace

BchCode::BchCode(int m, int design_t) : field_(m, gf::default_primitive_poly(m)), n_((1 << m) - 1), t_(design_t) {
  if (design_t < 1) throw std::invalid_argument("BchCode: t must be >= 1");

  // Generator = product of the minimal polynomials of alpha^1 .. alpha^{2t},
  // one factor per cyclotomic coset.
  std::set<int> covered;
  gen_.assign(1, 1);
  for (int i = 1; i <= 2 * t_; ++i) {
    if (covered.count(i)) continue;
    // Cyclotomic coset of i mod n.
    std::vector<int> coset;
    int j = i;
    do {
      coset.push_back(j);
      covered.insert(j);
      j = (2 * j) % n_;
    } while (j != i);

    // Minimal polynomial: prod_{j in coset} (x + alpha^j), computed over
    // GF(2^m); the result has GF(2) coefficients.
    std::vector<std::uint16_t> poly{1};
    for (int e : coset) {
      std::uint16_t root = field_.alpha_pow(e);
      std::vector<std::uint16_t> next(poly.size() + 1, 0);
      for (std::size_t d = 0; d < poly.size(); ++d) {
        next[d + 1] ^= poly[d];
        next[d] ^= field_.mul(poly[d], root);
      }
      poly = std::move(next);
    }
    std::vector<std::uint8_t> min_poly(poly.size());
    for (std::size_t d = 0; d < poly.size(); ++d) {
      if (poly[d] > 1) throw std::logic_error("BchCode: minimal polynomial has a non-binary coefficient");
      min_poly[d] = static_cast<std::uint8_t>(poly[d]);
    }
    gen_ = poly_mul_gf2(gen_, min_poly);
  }
  k_ = n_ - static_cast<int>(gen_.size()) + 1;
  if (k_ <= 0) throw std::invalid_argument("BchCode: degenerate dimension");
}

std::vector<std::uint8_t> BchCode::encode(std::span<const std::uint8_t> message) const {
  if (static_cast<int>(message.size()) != k_) throw std::invalid_argument("BchCode::encode: message length != k");
  int parity = n_ - k_;
  std::vector<std::uint8_t> cw(static_cast<std::size_t>(n_), 0);
  for (int i = 0; i < k_; ++i) cw[static_cast<std::size_t>(parity + i)] = message[static_cast<std::size_t>(i)] & 1u;

  // Remainder of x^{n-k} m(x) modulo g(x), long division from the top.
  std::vector<std::uint8_t> rem(cw);
  for (int d = n_ - 1; d >= parity; --d) {
    if (!rem[static_cast<std::size_t>(d)]) continue;
    for (std::size_t j = 0; j < gen_.size(); ++j) {
      rem[static_cast<std::size_t>(d - parity) + j] ^= gen_[j];
    }
  }
  for (int i = 0; i < parity; ++i) cw[static_cast<std::size_t>(i)] = rem[static_cast<std::size_t>(i)];
  return cw;
}

bool BchCode::syndromes(std::span<const std::uint8_t> word, std::vector<std::uint16_t>& out) const {
  out.assign(static_cast<std::size_t>(2 * t_), 0);
  bool all_zero = true;
  for (int i = 1; i <= 2 * t_; ++i) {
    // Horner evaluation of the received polynomial at alpha^i.
    std::uint16_t alpha_i = field_.alpha_pow(i);
    std::uint16_t acc = 0;
    for (int d = n_ - 1; d >= 0; --d) {
      acc = field_.mul(acc, alpha_i);
      if (word[static_cast<std::size_t>(d)] & 1u) acc ^= 1;
    }
    out[static_cast<std::size_t>(i - 1)] = acc;
    if (acc != 0) all_zero = false;
  }
  return all_zero;
}

std::optional<std::vector<std::uint8_t>> BchCode::correct(std::span<const std::uint8_t> word) const {
  if (static_cast<int>(word.size()) != n_) throw std::invalid_argument("BchCode::correct: word length != n");

  std::vector<std::uint16_t> syn;
  if (syndromes(word, syn)) return std::vector<std::uint8_t>(word.begin(), word.end());

  // Berlekamp-Massey for the error locator Lambda(x).
  std::vector<std::uint16_t> lambda{1}, prev{1};
  int l = 0, shift = 1;
  std::uint16_t prev_disc = 1;
  for (int step = 0; step < 2 * t_; ++step) {
    std::uint16_t disc = syn[static_cast<std::size_t>(step)];
    for (int i = 1; i <= l && i < static_cast<int>(lambda.size()); ++i) {
      disc ^= field_.mul(lambda[static_cast<std::size_t>(i)], syn[static_cast<std::size_t>(step - i)]);
    }
    if (disc == 0) {
      ++shift;
      continue;
    }
    std::uint16_t scale = field_.mul(disc, field_.inv(prev_disc));
    std::vector<std::uint16_t> adjusted = lambda;
    if (adjusted.size() < prev.size() + static_cast<std::size_t>(shift)) {
      adjusted.resize(prev.size() + static_cast<std::size_t>(shift), 0);
    }
    for (std::size_t i = 0; i < prev.size(); ++i) {
      adjusted[i + static_cast<std::size_t>(shift)] ^= field_.mul(scale, prev[i]);
    }
    if (2 * l <= step) {
      prev = lambda;
      prev_disc = disc;
      l = step + 1 - l;
      shift = 1;
    } else {
      ++shift;
    }
    lambda = std::move(adjusted);
  }
  while (!lambda.empty() && lambda.back() == 0) lambda.pop_back();
  int degree = static_cast<int>(lambda.size()) - 1;
  if (degree < 1 || degree > t_ || l > t_) return std::nullopt;

  // Chien search: error at position j iff Lambda(alpha^{-j}) = 0.
  std::vector<int> positions;
  for (int j = 0; j < n_; ++j) {
    std::uint16_t x = field_.alpha_pow(-j);
    std::uint16_t acc = lambda[0];
    std::uint16_t xp = 1;
    for (int d = 1; d <= degree; ++d) {
      xp = field_.mul(xp, x);
      acc ^= field_.mul(lambda[static_cast<std::size_t>(d)], xp);
    }
    if (acc == 0) positions.push_back(j);
  }
  if (static_cast<int>(positions.size()) != degree) return std::nullopt;

  std::vector<std::uint8_t> fixed(word.begin(), word.end());
  for (int j : positions) fixed[static_cast<std::size_t>(j)] ^= 1u;

  std::vector<std::uint16_t> check;
  if (!syndromes(fixed, check)) return std::nullopt;
  return fixed;
}

std::vector<std::uint8_t> BchCode::extract_message(std::span<const std::uint8_t> codeword) const {
  return std::vector<std::uint8_t>(codeword.begin() + (n_ - k_), codeword.end());
}

std::optional<std::vector<std::uint8_t>> BchCode::decode(std::span<const std::uint8_t> word) const {
  auto cw = correct(word);
  if (!cw) return std::nullopt;
  return extract_message(*cw);
}

BchCode make_bch(int n, int k) {
  struct Entry {
    int n, k, m, t;
  };
  static const Entry table[] = {
      {15, 7, 4, 2},
      {31, 16, 5, 3},
      {255, 131, 8, 18},
  };
  for (const auto& e : table) {
    if (e.n == n && e.k == k) {
      BchCode code(e.m, e.t);
      if (code.dimension() != k) {
        throw std::logic_error("make_bch: generator degree does not give the expected dimension");
      }
      return code;
    }
  }
  throw std::invalid_argument("make_bch: unsupported code (" + std::to_string(n) + "," + std::to_string(k) + ")");
}

}  // namespace pufkey::bch

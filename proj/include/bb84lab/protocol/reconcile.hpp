// Copyright 2026 The bb84lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reconciliation building blocks: the pre-shared secret pool (one-time pad),
// Cascade block layout, Hamming block syndromes and the key-confirmation tag.

#ifndef BB84LAB_PROTOCOL_RECONCILE_HPP_
#define BB84LAB_PROTOCOL_RECONCILE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bb84lab/gf2.hpp"
#include "bb84lab/rng.hpp"

namespace bb84lab::protocol {

using gf2::BitVec;

class PoolExhausted : public std::runtime_error {
 public:
  PoolExhausted() : std::runtime_error("secret pool exhausted") {}
};

// Previously shared secret bits, consumed strictly in order by both parties.
class SecretPool {
 public:
  SecretPool(std::size_t bits, std::uint64_t seed) {
    Rng rng(Rng::derive(seed, 0x9001));
    bits_ = BitVec::random(bits, rng);
  }
  explicit SecretPool(BitVec bits) : bits_(std::move(bits)) {}

  std::size_t size() const { return bits_.size(); }
  std::size_t used() const { return cursor_; }
  std::size_t remaining() const { return bits_.size() - cursor_; }
  const BitVec& contents() const { return bits_; }

  BitVec take(std::size_t n) {
    if (n > remaining()) throw PoolExhausted();
    BitVec out(n);
    for (std::size_t i = 0; i < n; ++i) out.set(i, bits_[cursor_ + i]);
    cursor_ += n;
    return out;
  }

  // x + next |x| pool bits.
  BitVec pad(const BitVec& x) { return x + take(x.size()); }

 private:
  BitVec bits_;
  std::size_t cursor_ = 0;
};

// ---- confirmation tag ----------------------------------------------------

inline constexpr std::size_t kConfirmHashKeyBits = 64;
inline constexpr std::size_t kConfirmTagBits = 32;
inline constexpr std::size_t kConfirmCost = kConfirmHashKeyBits + kConfirmTagBits;

namespace detail {

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

inline std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(p & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(p >> 61);
  std::uint64_t s = lo + hi;
  if (s >= kMersenne61) s -= kMersenne61;
  return s;
}

}  // namespace detail

// Polynomial hash over GF(2^61 - 1) of the key's 32-bit chunks (plus its
// length), evaluated at a secret point; low 32 bits are kept. Collision
// probability for distinct keys is at most (chunks + 1) / (2^61 - 1) before
// truncation.
inline std::uint32_t confirmation_hash(const BitVec& key, std::uint64_t point) {
  point %= detail::kMersenne61;
  std::uint64_t acc = key.size() % detail::kMersenne61;
  const auto bytes = key.to_bytes();
  for (std::size_t i = 0; i < bytes.size(); i += 4) {
    std::uint64_t chunk = 0;
    for (std::size_t j = 0; j < 4 && i + j < bytes.size(); ++j) chunk |= std::uint64_t{bytes[i + j]} << (8 * j);
    acc = detail::mulmod61(acc, point) + chunk;
    if (acc >= detail::kMersenne61) acc -= detail::kMersenne61;
  }
  acc = detail::mulmod61(acc, point);
  return static_cast<std::uint32_t>(acc);
}

// ---- Cascade layout ------------------------------------------------------

// Block size and position order of one pass.
struct CascadePass {
  std::size_t block = 1;
  std::vector<std::uint32_t> order;

  std::size_t blocks(std::size_t n) const { return (n + block - 1) / block; }
};

inline std::size_t cascade_first_block(std::size_t n, double delta) {
  if (delta <= 0.0) return n;
  const auto k = static_cast<std::size_t>(std::ceil(0.73 / delta));
  return std::clamp<std::size_t>(k, 1, n);
}

// Pass p uses the identity order for p = 0 and a permutation drawn from the
// announced seed otherwise.
inline CascadePass cascade_layout(std::size_t n, std::size_t block, std::size_t pass, std::uint64_t shuffle_seed) {
  CascadePass p;
  p.block = std::clamp<std::size_t>(block, 1, std::max<std::size_t>(n, 1));
  if (pass == 0) {
    p.order.resize(n);
    std::iota(p.order.begin(), p.order.end(), 0u);
  } else {
    Rng rng(shuffle_seed);
    p.order = rng.permutation(n);
  }
  return p;
}

// k1 * 2^pass, but never more than max(k1, ceil(N/4)) so that late passes
// still split the key into several blocks.
inline std::size_t cascade_block(std::size_t n, std::size_t k1, std::size_t pass) {
  const std::size_t cap = std::max<std::size_t>(k1, (n + 3) / 4);
  return std::min({n, cap, k1 << std::min<std::size_t>(pass, 40)});
}

// Parity of key bits order[start .. start + len).
inline bool range_parity(const BitVec& key, const std::vector<std::uint32_t>& order, std::size_t start,
                         std::size_t len) {
  bool acc = false;
  for (std::size_t i = start; i < start + len; ++i) acc ^= key[order[i]];
  return acc;
}

// ---- Hamming syndromes ---------------------------------------------------

// Syndrome of each length-(2^m - 1) block (the last zero-padded), m bits per
// block, bit b of the syndrome = XOR over positions j with bit b of (j + 1).
inline BitVec hamming_syndromes(const BitVec& key, std::size_t m) {
  const std::size_t len = (std::size_t{1} << m) - 1;
  const std::size_t nblocks = (key.size() + len - 1) / len;
  BitVec out(nblocks * m);
  for (std::size_t b = 0; b < nblocks; ++b) {
    std::size_t s = 0;
    for (std::size_t j = 0; j < len; ++j) {
      const std::size_t i = b * len + j;
      if (i < key.size() && key[i]) s ^= j + 1;
    }
    for (std::size_t t = 0; t < m; ++t) out.set(b * m + t, (s >> t) & 1u);
  }
  return out;
}

// Flips, in each block, the position named by the syndrome difference.
// Returns the number of flips applied.
inline std::size_t hamming_correct(BitVec& key, const BitVec& their_syndromes, std::size_t m) {
  const BitVec mine = hamming_syndromes(key, m);
  if (mine.size() != their_syndromes.size()) throw std::invalid_argument("hamming_correct: syndrome length mismatch");
  const std::size_t len = (std::size_t{1} << m) - 1;
  std::size_t flips = 0;
  for (std::size_t b = 0; b * m < mine.size(); ++b) {
    std::size_t d = 0;
    for (std::size_t t = 0; t < m; ++t) d |= std::size_t{mine[b * m + t] != their_syndromes[b * m + t]} << t;
    if (d == 0) continue;
    const std::size_t i = b * len + d - 1;
    if (i < key.size()) {
      key.flip(i);
      ++flips;
    }
  }
  return flips;
}

// Alice's side of one-way Hamming reconciliation: strips the pad from Bob's
// syndromes and corrects her bits toward his.
inline std::size_t hamming_reconcile(BitVec& alice, const BitVec& encrypted_syndromes, SecretPool& pool,
                                     std::size_t m) {
  return hamming_correct(alice, pool.pad(encrypted_syndromes), m);
}

// Bob's side: the padded syndromes of his bits.
inline BitVec hamming_announce(const BitVec& bob, SecretPool& pool, std::size_t m) {
  return pool.pad(hamming_syndromes(bob, m));
}

// Padded confirmation tag; consumes kConfirmCost pool bits.
inline std::uint32_t confirmation_tag(const BitVec& key, SecretPool& pool) {
  const std::uint64_t point = pool.take(kConfirmHashKeyBits).to_uint();
  const auto pad = static_cast<std::uint32_t>(pool.take(kConfirmTagBits).to_uint());
  return confirmation_hash(key, point) ^ pad;
}

}  // namespace bb84lab::protocol

#endif  // BB84LAB_PROTOCOL_RECONCILE_HPP_

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

// Binary linear codes C = G(F_2^k) inside F_2^n, their duals, and the
// privacy-amplification map kappa -> G^T kappa.

#ifndef BB84LAB_CODES_HPP_
#define BB84LAB_CODES_HPP_

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bb84lab/bounds.hpp"
#include "bb84lab/gf2.hpp"
#include "bb84lab/rng.hpp"

namespace bb84lab::codes {

using gf2::BitMatrix;
using gf2::BitVec;

enum class Family : std::uint8_t { identity = 0, repetition = 1, hamming = 2, random = 3 };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::identity: return "identity";
    case Family::repetition: return "repetition";
    case Family::hamming: return "hamming";
    case Family::random: return "random";
  }
  return "?";
}

// Enough to rebuild a code bit-for-bit on either side of the link.
struct CodeDescriptor {
  Family family = Family::identity;
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  std::uint64_t seed = 0;

  // "hamming/7/4/0"
  std::string to_string() const {
    return std::string(codes::to_string(family)) + "/" + std::to_string(n) + "/" + std::to_string(k) + "/" +
           std::to_string(seed);
  }

  static CodeDescriptor parse(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      if (i == text.size() || text[i] == '/') {
        parts.push_back(text.substr(start, i - start));
        start = i + 1;
      }
    }
    if (parts.size() != 4) throw std::invalid_argument("CodeDescriptor: expected family/n/k/seed");
    CodeDescriptor d;
    if (parts[0] == "identity") {
      d.family = Family::identity;
    } else if (parts[0] == "repetition") {
      d.family = Family::repetition;
    } else if (parts[0] == "hamming") {
      d.family = Family::hamming;
    } else if (parts[0] == "random") {
      d.family = Family::random;
    } else {
      throw std::invalid_argument("CodeDescriptor: unknown family");
    }
    auto num = [](std::string_view s, auto& out) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("CodeDescriptor: bad number");
    };
    num(parts[1], d.n);
    num(parts[2], d.k);
    num(parts[3], d.seed);
    return d;
  }

  friend bool operator==(const CodeDescriptor&, const CodeDescriptor&) = default;
};

// The set of error patterns the decoder is guaranteed to undo.
class CorrectableSet {
 public:
  static CorrectableSet bounded_weight(std::size_t n, std::size_t t) {
    CorrectableSet s;
    s.n_ = n;
    s.radius_ = t;
    return s;
  }

  // The zero pattern is always a member.
  static CorrectableSet explicit_set(std::size_t n, const std::vector<BitVec>& members) {
    CorrectableSet s;
    s.n_ = n;
    s.members_ = std::make_shared<std::vector<BitVec>>();
    s.members_->push_back(BitVec(n));
    for (const auto& m : members) {
      if (m.size() != n) throw std::invalid_argument("CorrectableSet: member length mismatch");
      if (!std::any_of(s.members_->begin(), s.members_->end(), [&](const BitVec& e) { return e == m; })) {
        s.members_->push_back(m);
      }
    }
    return s;
  }

  std::size_t n() const { return n_; }
  bool is_bounded_weight() const { return members_ == nullptr; }
  std::size_t radius() const { return radius_; }

  bool contains(const BitVec& x) const {
    if (x.size() != n_) return false;
    if (!members_) return x.weight() <= radius_;
    return std::any_of(members_->begin(), members_->end(), [&](const BitVec& e) { return e == x; });
  }

  // Members as integers (bit i = position i); n must be <= 30.
  std::vector<std::uint32_t> enumerate() const {
    if (n_ > 30) throw std::length_error("CorrectableSet::enumerate: n too large");
    std::vector<std::uint32_t> out;
    if (members_) {
      for (const auto& m : *members_) out.push_back(static_cast<std::uint32_t>(m.to_uint()));
    } else {
      for (std::uint32_t x = 0; x < (1u << n_); ++x) {
        if (static_cast<std::size_t>(std::popcount(x)) <= radius_) out.push_back(x);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::size_t radius_ = 0;
  std::shared_ptr<std::vector<BitVec>> members_;
};

// Largest supported message length for exhaustive (nearest-codeword) decoding.
inline constexpr std::size_t kMaxDecodableK = 20;
inline constexpr std::size_t kMaxDecodableN = 64;

class LinearCode {
 public:
  // [n, 1] repetition code, radius floor((n-1)/2).
  static LinearCode repetition(std::size_t n) {
    if (n == 0) throw std::invalid_argument("repetition: n must be positive");
    BitVec ones(n);
    for (std::size_t i = 0; i < n; ++i) ones.set(i, true);
    return LinearCode({Family::repetition, std::uint32_t(n), 1, 0}, BitMatrix::from_columns({ones}, n), (n - 1) / 2);
  }

  // [2^m - 1, 2^m - 1 - m] Hamming code. Parity-check column j is the binary
  // expansion of j + 1; the generator columns are the kernel basis of H.
  static LinearCode hamming(std::size_t m) {
    if (m < 2 || m > 10) throw std::invalid_argument("hamming: m must be in [2, 10]");
    const std::size_t n = (std::size_t{1} << m) - 1;
    BitMatrix h(m, n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t b = 0; b < m; ++b) {
        if (((j + 1) >> b) & 1u) h.set(b, j, true);
      }
    }
    auto basis = h.kernel_basis();
    return LinearCode({Family::hamming, std::uint32_t(n), std::uint32_t(basis.size()), 0},
                      BitMatrix::from_columns(basis, n), 1);
  }

  // The trivial [n, n] code; corrects nothing.
  static LinearCode identity(std::size_t n) {
    return LinearCode({Family::identity, std::uint32_t(n), std::uint32_t(n), 0}, BitMatrix::identity(n), 0);
  }

  // Uniform random n x k generator of full rank, drawn from the seed. The
  // radius is floor((d_min - 1)/2) when k is small enough to enumerate the
  // code, otherwise 0 (unverified).
  static LinearCode random(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k == 0 || k > n) throw std::invalid_argument("random code: need 0 < k <= n");
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(Rng::derive(seed, attempt));
      BitMatrix gt = BitMatrix::random(k, n, rng);  // rows are the generator columns
      if (gt.rank() != k) continue;
      LinearCode code({Family::random, std::uint32_t(n), std::uint32_t(k), seed}, gt.transpose(), 0);
      if (code.enumerable()) {
        const std::size_t d = code.minimum_distance();
        code.radius_ = d == 0 ? 0 : (d - 1) / 2;
      }
      return code;
    }
  }

  static LinearCode from_descriptor(const CodeDescriptor& d) {
    switch (d.family) {
      case Family::identity: return identity(d.n);
      case Family::repetition:
        if (d.k != 1) throw std::invalid_argument("repetition descriptor must have k = 1");
        return repetition(d.n);
      case Family::hamming: {
        const auto m = static_cast<std::size_t>(std::bit_width(std::uint32_t(d.n)));
        auto code = hamming(m);
        if (code.n() != d.n || code.k() != d.k) throw std::invalid_argument("hamming descriptor: bad n/k");
        return code;
      }
      case Family::random: return random(d.n, d.k, d.seed);
    }
    throw std::invalid_argument("unknown code family");
  }

  std::size_t n() const { return gen_.rows(); }
  std::size_t k() const { return gen_.cols(); }
  const BitMatrix& generator() const { return gen_; }
  const BitMatrix& generator_transpose() const { return gen_t_; }
  const CodeDescriptor& descriptor() const { return descriptor_; }
  std::size_t decoder_radius() const { return radius_; }
  CorrectableSet correctable_set() const { return CorrectableSet::bounded_weight(n(), radius_); }

  BitVec encode(const BitVec& y) const {
    if (y.size() != k()) throw std::invalid_argument("encode: message length mismatch");
    return gen_.apply(y);
  }

  // Final key G^T kappa; constant on cosets kappa + C-perp.
  BitVec coset_key(const BitVec& kappa) const {
    if (kappa.size() != n()) throw std::invalid_argument("coset_key: length mismatch");
    return gen_t_.apply(kappa);
  }

  // Basis of C-perp = ker G^T.
  std::vector<BitVec> dual_basis() const { return gen_t_.kernel_basis(); }

  bool enumerable() const { return n() <= kMaxDecodableN && k() <= kMaxDecodableK; }

  // Nearest-codeword decoder; ties go to the lexicographically smallest
  // message. Total on F_2^n.
  BitVec decode(const BitVec& v) const {
    if (v.size() != n()) throw std::invalid_argument("decode: length mismatch");
    const auto& table = codewords();
    const std::uint64_t target = v.to_uint();
    std::size_t best = 0;
    int best_dist = 65;
    for (std::size_t u = 0; u < table.size(); ++u) {
      const int d = std::popcount(table[u] ^ target);
      if (d < best_dist) {
        best_dist = d;
        best = u;
        if (d == 0) break;
      }
    }
    return message_for_index(best);
  }

  // Exhaustive minimum distance (0 for k = 0).
  std::size_t minimum_distance() const {
    const auto& table = codewords();
    int best = 0;
    for (std::size_t u = 1; u < table.size(); ++u) {
      const int w = std::popcount(table[u]);
      if (best == 0 || w < best) best = w;
    }
    return static_cast<std::size_t>(best);
  }

  // The message enumerated at index u: y[j] is bit (k-1-j) of u, so
  // increasing u walks messages in lexicographic order.
  BitVec message_for_index(std::uint64_t u) const {
    BitVec y(k());
    for (std::size_t j = 0; j < k(); ++j) {
      if ((u >> (k() - 1 - j)) & 1u) y.set(j, true);
    }
    return y;
  }

  // Codewords indexed as message_for_index; bit i of each entry is
  // coordinate i. Built once per code.
  const std::vector<std::uint64_t>& codewords() const {
    if (!enumerable()) throw std::length_error("LinearCode: code too large for exhaustive decoding");
    std::call_once(cache_->once, [this] {
      const std::size_t count = std::size_t{1} << k();
      std::vector<std::uint64_t> cols(k());
      for (std::size_t j = 0; j < k(); ++j) cols[j] = gen_.column(j).to_uint();
      cache_->table.resize(count);
      for (std::size_t u = 0; u < count; ++u) {
        std::uint64_t cw = 0;
        for (std::size_t j = 0; j < k(); ++j) {
          if ((u >> (k() - 1 - j)) & 1u) cw ^= cols[j];
        }
        cache_->table[u] = cw;
      }
    });
    return cache_->table;
  }

 private:
  struct Cache {
    std::once_flag once;
    std::vector<std::uint64_t> table;
  };

  LinearCode(CodeDescriptor d, BitMatrix gen, std::size_t radius)
      : descriptor_(d), gen_(std::move(gen)), gen_t_(gen_.transpose()), radius_(radius),
        cache_(std::make_shared<Cache>()) {}

  CodeDescriptor descriptor_;
  BitMatrix gen_;
  BitMatrix gen_t_;
  std::size_t radius_ = 0;
  std::shared_ptr<Cache> cache_;
};

// Largest k allowed by the sphere-packing bound for radius t.
inline std::size_t hamming_bound_dimension(std::size_t n, std::size_t t) {
  double log_ball = 0.0;
  double ball = 0.0;
  for (std::size_t i = 0; i <= t && i <= n; ++i) {
    ball += std::exp(bounds::detail::log_choose(double(n), double(i)));
  }
  log_ball = std::log2(ball);
  const double k = static_cast<double>(n) - std::ceil(log_ball - 1e-9);
  return k < 0 ? 0 : static_cast<std::size_t>(k);
}

class InfeasibleCode : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A code of length n with decoder radius t = floor(n (delta + epsilon)).
// Candidates: the trivial code (t = 0), Hamming codes (t <= 1 at n = 2^m - 1),
// seeded random codes with exhaustive distance check (n <= 24), and the
// repetition code as the always-available fallback. The largest dimension
// wins. Throws InfeasibleCode if the winner falls more than `margin` below
// ceil(n (1 - h(delta + epsilon))).
inline LinearCode random_code_for_rate(std::size_t n, double delta, double epsilon, std::uint64_t seed,
                                       std::size_t margin = 4, std::size_t attempts_per_k = 64) {
  const double p = delta + epsilon;
  if (n == 0) throw std::invalid_argument("random_code_for_rate: n must be positive");
  if (!(delta >= 0.0 && epsilon >= 0.0 && p < 0.5)) {
    throw std::invalid_argument("random_code_for_rate: need 0 <= delta + epsilon < 1/2");
  }
  const auto t = static_cast<std::size_t>(std::floor(static_cast<double>(n) * p + 1e-9));
  const double target = std::ceil(static_cast<double>(n) * (1.0 - bounds::binary_entropy(p)) - 1e-9);

  std::optional<LinearCode> best;
  auto consider = [&](LinearCode c) {
    if (!best || c.k() > best->k()) best = std::move(c);
  };

  if (t == 0) {
    consider(LinearCode::identity(n));
  } else {
    if (2 * t + 1 <= n) consider(LinearCode::repetition(n));
    if (t == 1 && n >= 7 && std::has_single_bit(n + 1)) {
      consider(LinearCode::hamming(static_cast<std::size_t>(std::bit_width(n))));
    }
    if (n <= 24) {
      const std::size_t k_max = std::min(hamming_bound_dimension(n, t), kMaxDecodableK);
      const std::size_t k_floor = best ? best->k() + 1 : 2;
      bool found = false;
      for (std::size_t k = k_max; k >= k_floor && k >= 2 && !found; --k) {
        for (std::size_t a = 0; a < attempts_per_k; ++a) {
          auto code = LinearCode::random(n, k, Rng::derive(seed, 1000 * k + a));
          if (code.decoder_radius() >= t) {
            consider(std::move(code));
            found = true;
            break;
          }
        }
      }
    }
  }
  if (!best) throw InfeasibleCode("random_code_for_rate: no code corrects the requested radius");
  if (static_cast<double>(best->k()) + static_cast<double>(margin) < target) {
    throw InfeasibleCode("random_code_for_rate: best dimension " + std::to_string(best->k()) +
                         " is below the rate target " + std::to_string(static_cast<long>(target)));
  }
  return *best;
}

}  // namespace bb84lab::codes

#endif  // BB84LAB_CODES_HPP_

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

// Basis sifting and error-rate estimation.

#ifndef BB84LAB_PROTOCOL_SIFT_HPP_
#define BB84LAB_PROTOCOL_SIFT_HPP_

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bb84lab/gf2.hpp"
#include "bb84lab/protocol/message.hpp"
#include "bb84lab/rng.hpp"

namespace bb84lab::protocol {

struct SiftResult {
  std::vector<std::uint32_t> test;        // T, ascending
  std::vector<std::uint32_t> candidates;  // positions eligible for S, ascending
  std::vector<std::uint32_t> key;         // S, ascending; empty on abort
  AbortReason abort = AbortReason::none;
  bool ok() const { return abort == AbortReason::none; }
};

// T = {i in R | a_i = b_i}; S is a uniform N-subset of {i not in R | a_i xor
// flip = b_i}, where flip = 1 reproduces the opposite-basis rule for the
// complement of R and flip = 0 the unflipped variant. Positions with
// detected[i] = 0 are discarded first. An empty `detected` means all fired.
inline SiftResult sift(const BitVec& a, const BitVec& b, const BitVec& r_mask, const BitVec& detected,
                       std::size_t n, Rng& rng, bool flip = true) {
  if (a.size() != b.size() || a.size() != r_mask.size() || (!detected.empty() && detected.size() != a.size())) {
    throw std::invalid_argument("sift: length mismatch");
  }
  SiftResult out;
  for (std::uint32_t i = 0; i < a.size(); ++i) {
    if (!detected.empty() && !detected[i]) continue;
    if (r_mask[i]) {
      if (a[i] == b[i]) out.test.push_back(i);
    } else if ((a[i] != flip) == b[i]) {
      out.candidates.push_back(i);
    }
  }
  if (out.test.size() < n) {
    out.abort = AbortReason::insufficient_test_set;
    return out;
  }
  if (out.candidates.size() < n) {
    out.abort = AbortReason::subset_unavailable;
    return out;
  }
  std::vector<std::uint32_t> pick = out.candidates;
  rng.shuffle(pick);
  pick.resize(n);
  std::sort(pick.begin(), pick.end());
  out.key = std::move(pick);
  return out;
}

struct ErrorEstimate {
  std::size_t errors = 0;
  std::size_t tested = 0;
  double delta() const { return tested ? static_cast<double>(errors) / static_cast<double>(tested) : 0.0; }
};

// Mismatches between g and h on the test positions.
inline ErrorEstimate estimate_error(const BitVec& g, const BitVec& h) {
  if (g.size() != h.size()) throw std::invalid_argument("estimate_error: length mismatch");
  return {(g + h).weight(), g.size()};
}

// Classical variant: the number of ones among Bob's test outcomes.
inline ErrorEstimate estimate_error_ones(const BitVec& h) { return {h.weight(), h.size()}; }

// Uniform w and the announced w + y.
inline std::pair<BitVec, BitVec> randomize_key(const BitVec& y, Rng& rng) {
  BitVec w = BitVec::random(y.size(), rng);
  BitVec out = w + y;
  return {std::move(w), std::move(out)};
}

}  // namespace bb84lab::protocol

#endif  // BB84LAB_PROTOCOL_SIFT_HPP_

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

// Closed-form rate and leakage calculators.

#ifndef BB84LAB_BOUNDS_HPP_
#define BB84LAB_BOUNDS_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "bb84lab/rng.hpp"

namespace bb84lab::bounds {

inline void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

// h(p) in bits. Computed with natural logs and one change of base; the
// endpoints are exact zeros.
inline double binary_entropy(double p) {
  require(p >= 0.0 && p <= 1.0, "binary_entropy: p outside [0, 1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  const double nats = -p * std::log(p) - (1.0 - p) * std::log1p(-p);
  return nats / std::numbers::ln2;
}

// Achievable secret-key rate 1 - 2h(delta).
inline double key_rate(double delta) {
  require(delta >= 0.0 && delta <= 0.5, "key_rate: delta outside [0, 1/2]");
  return 1.0 - 2.0 * binary_entropy(delta);
}

// Rate of the earlier uncharacterized-detector analysis, 1 - h(d) - h(2d).
inline double mayers_rate(double delta) {
  require(delta >= 0.0 && delta <= 0.5, "mayers_rate: delta outside [0, 1/2]");
  return 1.0 - binary_entropy(delta) - binary_entropy(2.0 * delta);
}

// Root of key_rate in [lo, hi] by bisection.
inline double key_rate_threshold(double lo = 0.05, double hi = 0.2, double tol = 1e-12) {
  require(key_rate(lo) > 0.0 && key_rate(hi) < 0.0, "key_rate_threshold: root not bracketed");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (key_rate(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct SamplingBound {
  double value = 0.0;
  bool degenerate = false;  // delta in {0, 1}: exponent diverges, value is the limit 0
};

// exp(-eps^2 N / (4 (delta - delta^2))): envelope on the probability that the
// check set shows rate <= delta while the key set carries > N(delta + eps)
// errors.
inline SamplingBound sampling_bound(double n, double delta, double epsilon) {
  require(n >= 0.0, "sampling_bound: N must be nonnegative");
  require(delta >= 0.0 && delta <= 1.0, "sampling_bound: delta outside [0, 1]");
  require(epsilon >= 0.0, "sampling_bound: epsilon must be nonnegative");
  if (delta == 0.0 || delta == 1.0) return {0.0, true};
  return {std::exp(-epsilon * epsilon * n / (4.0 * (delta - delta * delta))), false};
}

struct LeakageBound {
  double entropy_bound = 0.0;       // h(eta) + r eta, caps S(rho_Q)
  double uniformity_deficit = 0.0;  // 2 r eta, caps r - H({p_y})
  double total = 0.0;               // 3 r eta + h(eta)
};

inline LeakageBound leakage_bound(double r, double eta) {
  require(r >= 1.0, "leakage_bound: r must be >= 1");
  require(eta >= 0.0 && eta <= 0.5, "leakage_bound: eta outside [0, 1/2]");
  LeakageBound b;
  b.entropy_bound = binary_entropy(eta) + r * eta;
  b.uniformity_deficit = 2.0 * r * eta;
  b.total = b.entropy_bound + b.uniformity_deficit;
  return b;
}

namespace detail {

inline double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Probability that a uniformly random split of 2N positions holding w errors
// into halves T and S leaves <= t_max errors in T and >= s_min errors in S.
inline double split_probability(std::size_t n, std::size_t w, std::size_t t_max, std::size_t s_min) {
  const double total = log_choose(2.0 * n, static_cast<double>(w));
  double p = 0.0;
  for (std::size_t a = 0; a <= std::min(t_max, w); ++a) {
    const std::size_t b = w - a;
    if (b < s_min || b > n || a > n) continue;
    p += std::exp(log_choose(double(n), double(a)) + log_choose(double(n), double(b)) - total);
  }
  return p;
}

}  // namespace detail

struct SamplingCheck {
  double frequency = 0.0;
  double bound = 0.0;
  double floor = 0.0;            // 10 / trials
  std::size_t worst_weight = 0;  // error count placed on the 2N positions
  double exact_probability = 0.0;
  bool passes() const { return frequency <= bound + floor; }
};

// Monte-Carlo check of the sampling statement. The adversary fixes the total
// number of errors w on the 2N check+key positions, choosing the w that
// maximizes the exact joint probability; each trial splits the positions
// uniformly into T and S and records whether T shows <= floor(N delta)
// errors while S holds > N(delta + eps).
inline SamplingCheck empirical_sampling_check(std::size_t trials, std::size_t n, double delta, double epsilon,
                                              Rng& rng) {
  require(trials >= 1, "empirical_sampling_check: trials must be >= 1");
  require(n >= 1, "empirical_sampling_check: N must be >= 1");
  const double nd = static_cast<double>(n);
  const auto t_max = static_cast<std::size_t>(std::floor(nd * delta + 1e-9));
  const auto s_min = static_cast<std::size_t>(std::floor(nd * (delta + epsilon) + 1e-9)) + 1;

  SamplingCheck out;
  out.bound = sampling_bound(nd, delta, epsilon).value;
  out.floor = 10.0 / static_cast<double>(trials);
  if (s_min > n) return out;  // S cannot exceed the threshold at all

  for (std::size_t w = 0; w <= 2 * n; ++w) {
    const double p = detail::split_probability(n, w, t_max, s_min);
    if (p > out.exact_probability) {
      out.exact_probability = p;
      out.worst_weight = w;
    }
  }
  if (out.exact_probability == 0.0) return out;

  std::vector<std::uint32_t> slots(2 * n);
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<std::uint32_t>(i);
  std::size_t hits = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    // Partial Fisher-Yates: the first w slots are a uniform w-subset.
    std::size_t in_t = 0;
    for (std::size_t k = 0; k < out.worst_weight; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(slots.size() - k));
      std::swap(slots[k], slots[j]);
      if (slots[k] < n) ++in_t;
    }
    const std::size_t in_s = out.worst_weight - in_t;
    if (in_t <= t_max && in_s >= s_min) ++hits;
  }
  out.frequency = static_cast<double>(hits) / static_cast<double>(trials);
  return out;
}

}  // namespace bb84lab::bounds

#endif  // BB84LAB_BOUNDS_HPP_

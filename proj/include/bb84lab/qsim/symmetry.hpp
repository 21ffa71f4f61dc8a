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

// Permutation symmetrization of the S register and projection onto the
// correctable subspace. S is qubits 0..N-1 of the joint state; everything
// above belongs to Eve.

#ifndef BB84LAB_QSIM_SYMMETRY_HPP_
#define BB84LAB_QSIM_SYMMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bb84lab/codes.hpp"
#include "bb84lab/qsim/state.hpp"
#include "bb84lab/rng.hpp"

namespace bb84lab::qsim {

inline constexpr std::size_t kMaxExactSymmetrization = 5;

// Basis map of U_pi on the low `system` qubits: bit i moves to bit perm[i].
inline std::vector<std::uint32_t> qubit_permutation_map(std::size_t total_qubits, std::size_t system,
                                                        const std::vector<std::uint32_t>& perm) {
  const std::size_t d = dimension(total_qubits);
  const std::uint64_t low = (std::uint64_t{1} << system) - 1;
  std::vector<std::uint32_t> map(d);
  for (std::size_t idx = 0; idx < d; ++idx) {
    std::uint64_t out = idx & ~low;
    for (std::size_t i = 0; i < system; ++i) out |= ((idx >> i) & 1u) << perm[i];
    map[idx] = static_cast<std::uint32_t>(out);
  }
  return map;
}

// Block-diagonal state sum_k w_k |k><k|_J (x) rho_k, with the permutation
// label J kept classical. Zero-weight blocks are allowed.
struct LabeledState {
  std::size_t system_qubits = 0;
  std::vector<double> weights;
  std::vector<DensityMatrix> blocks;

  std::size_t qubits() const { return blocks.empty() ? 0 : blocks.front().qubits(); }

  // Average with J traced out.
  DensityMatrix average() const {
    if (blocks.empty()) throw std::logic_error("LabeledState: no blocks");
    CMatrix m = CMatrix::Zero(blocks.front().matrix().rows(), blocks.front().matrix().cols());
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      if (weights[k] > 0.0) m += weights[k] * blocks[k].matrix();
    }
    return DensityMatrix(qubits(), std::move(m));
  }
};

struct SymmetrizeOptions {
  std::size_t samples = 0;  // permutations drawn when N > kMaxExactSymmetrization
  Rng* rng = nullptr;
};

// (1/N!) sum_pi (U_pi (x) 1) rho (U_pi^+ (x) 1), one block per permutation.
// Beyond kMaxExactSymmetrization qubits the sum is replaced by `samples`
// uniformly drawn permutations.
inline LabeledState symmetrize(const DensityMatrix& rho, std::size_t system_qubits,
                               const SymmetrizeOptions& options = {}) {
  if (system_qubits > rho.qubits()) throw std::invalid_argument("symmetrize: S larger than the state");
  LabeledState out;
  out.system_qubits = system_qubits;
  auto add = [&](const std::vector<std::uint32_t>& perm) {
    out.blocks.emplace_back(rho.qubits(),
                            permute_basis(rho.matrix(), qubit_permutation_map(rho.qubits(), system_qubits, perm)));
  };
  if (system_qubits <= kMaxExactSymmetrization) {
    std::vector<std::uint32_t> perm(system_qubits);
    std::iota(perm.begin(), perm.end(), 0u);
    do {
      add(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    if (options.samples == 0 || options.rng == nullptr) {
      throw std::length_error("symmetrize: N! exceeds the exact enumeration limit and no sampler was given");
    }
    for (std::size_t s = 0; s < options.samples; ++s) add(options.rng->permutation(system_qubits));
  }
  out.weights.assign(out.blocks.size(), 1.0 / static_cast<double>(out.blocks.size()));
  return out;
}

// Diagonal of P_E (x) 1 in the Z basis: 1 where the S bits form a pattern in E.
inline std::vector<bool> correctable_mask(std::size_t total_qubits, std::size_t system,
                                          const codes::CorrectableSet& e) {
  if (e.n() != system) throw std::invalid_argument("correctable_mask: set length does not match S");
  std::vector<bool> in_s(std::size_t{1} << system, false);
  for (auto m : e.enumerate()) in_s[m] = true;
  const std::size_t d = dimension(total_qubits);
  const std::size_t low = (std::size_t{1} << system) - 1;
  std::vector<bool> mask(d);
  for (std::size_t idx = 0; idx < d; ++idx) mask[idx] = in_s[idx & low];
  return mask;
}

inline CMatrix project_diagonal(const CMatrix& rho, const std::vector<bool>& mask) {
  CMatrix out = rho;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      if (!mask[static_cast<std::size_t>(i)] || !mask[static_cast<std::size_t>(j)]) out(i, j) = 0.0;
    }
  }
  return out;
}

class ZeroCorrectableSupport : public std::runtime_error {
 public:
  ZeroCorrectableSupport() : std::runtime_error("project_correctable: state has no weight on the correctable subspace") {}
};

inline constexpr double kZeroSupport = 1e-14;

struct Projection {
  LabeledState rho_prime;
  double eta = 0.0;  // 1 - Tr[(P_E (x) 1) rho_s]
};

// (P_E (x) 1) rho_s (P_E (x) 1) / Tr[...], block by block.
inline Projection project_correctable(const LabeledState& rho_s, const codes::CorrectableSet& e) {
  const auto mask = correctable_mask(rho_s.qubits(), rho_s.system_qubits, e);
  Projection out;
  out.rho_prime.system_qubits = rho_s.system_qubits;
  std::vector<double> traces;
  double kept = 0.0, lost = 0.0;
  for (std::size_t k = 0; k < rho_s.blocks.size(); ++k) {
    const CMatrix& m = rho_s.blocks[k].matrix();
    CMatrix p = project_diagonal(m, mask);
    const double t = p.trace().real();
    double outside = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!mask[static_cast<std::size_t>(i)]) outside += m(i, i).real();
    }
    traces.push_back(t);
    kept += rho_s.weights[k] * t;
    lost += rho_s.weights[k] * outside;
    if (t > kZeroSupport) p /= t;
    out.rho_prime.blocks.emplace_back(rho_s.qubits(), std::move(p));
  }
  if (kept <= kZeroSupport) throw ZeroCorrectableSupport();
  for (std::size_t k = 0; k < traces.size(); ++k) {
    out.rho_prime.weights.push_back(traces[k] > kZeroSupport ? rho_s.weights[k] * traces[k] / kept : 0.0);
  }
  // Summed directly so that eta is exactly 0 when no weight leaves the subspace.
  out.eta = std::clamp(lost, 0.0, 1.0);
  return out;
}

// Unlabeled form: the projection of a single density matrix.
inline std::pair<DensityMatrix, double> project_correctable(const DensityMatrix& rho_s, std::size_t system_qubits,
                                                            const codes::CorrectableSet& e) {
  LabeledState one{system_qubits, {1.0}, {rho_s}};
  Projection p = project_correctable(one, e);
  return {p.rho_prime.blocks.front(), p.eta};
}

// Fidelity of two block-diagonal states sharing the label register:
// sqrt F = sum_k sqrt(a_k b_k) sqrt F(rho_k, sigma_k).
inline double fidelity(const LabeledState& a, const LabeledState& b) {
  if (a.blocks.size() != b.blocks.size()) throw std::invalid_argument("fidelity: label registers differ");
  double root = 0.0;
  for (std::size_t k = 0; k < a.blocks.size(); ++k) {
    const double w = a.weights[k] * b.weights[k];
    if (w <= 0.0) continue;
    root += std::sqrt(w) * std::sqrt(fidelity(a.blocks[k], b.blocks[k]));
  }
  return root * root;
}

}  // namespace bb84lab::qsim

#endif  // BB84LAB_QSIM_SYMMETRY_HPP_

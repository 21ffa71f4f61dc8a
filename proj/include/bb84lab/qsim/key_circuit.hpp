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

#ifndef BB84LAB_QSIM_KEY_CIRCUIT_HPP_
#define BB84LAB_QSIM_KEY_CIRCUIT_HPP_

#include <unordered_map>
#include <utility>
#include <vector>

#include "bb84lab/codes.hpp"
#include "bb84lab/qsim/state.hpp"

namespace bb84lab::qsim {

// Key-extraction circuit U = U2 U1 on the N key qubits S (qubits 0..N-1,
// value x) and r ancillas Q (qubits N..N+r-1, value y).
//
//   U1: CNOT from Q_j onto every S_i with G[i][j] = 1, so that in the Z basis
//       |x>|y> -> |x + G y>|y>, and in the X basis |x>|y> -> |x>|y + G^T x>.
//   U2: Z-controlled addition |x>|y> -> |x>|y + f(x)>, f the nearest-codeword
//       decoder.
//
// Both are basis permutations in the Z basis. Up to kMaxQubits the full
// permutation tables are materialized for dense simulation; larger circuits
// are evaluated one basis state at a time (sparse simulation).
class KeyCircuit {
 public:
  struct Cnot {
    std::size_t control;
    std::size_t target;
  };

  static KeyCircuit build(const codes::LinearCode& code) {
    KeyCircuit c(code);
    const std::size_t n = code.n(), r = code.k();
    if (n + r > 63) throw std::length_error("KeyCircuit: N + r exceeds 63 qubits");
    if (!code.enumerable()) throw std::length_error("KeyCircuit: decoder f is not enumerable for this code");

    for (std::size_t j = 0; j < r; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        if (code.generator().get(i, j)) c.cnots_.push_back({n + j, i});
      }
    }
    if (n <= 16) {
      c.f_.resize(std::size_t{1} << n);
      for (std::size_t x = 0; x < c.f_.size(); ++x) c.f_[x] = code.decode(BitVec::from_uint(x, n)).to_uint();
    }
    if (c.total_qubits() <= kMaxQubits) {
      const std::size_t d = std::size_t{1} << c.total_qubits();
      c.u1_.resize(d);
      c.u2_.resize(d);
      c.full_.resize(d);
      for (std::size_t idx = 0; idx < d; ++idx) {
        c.u1_[idx] = static_cast<std::uint32_t>(c.map_u1(idx));
        c.u2_[idx] = static_cast<std::uint32_t>(c.map_u2(idx));
      }
      for (std::size_t idx = 0; idx < d; ++idx) c.full_[idx] = c.u2_[c.u1_[idx]];
    }
    return c;
  }

  const codes::LinearCode& code() const { return code_; }
  std::size_t system_qubits() const { return code_.n(); }
  std::size_t ancilla_qubits() const { return code_.k(); }
  std::size_t total_qubits() const { return code_.n() + code_.k(); }
  bool dense() const { return !full_.empty(); }
  const std::vector<Cnot>& cnots() const { return cnots_; }

  // Image of one Z-basis index under U1 (gate by gate).
  std::uint64_t map_u1(std::uint64_t idx) const {
    for (const auto& g : cnots_) {
      if ((idx >> g.control) & 1u) idx ^= std::uint64_t{1} << g.target;
    }
    return idx;
  }

  // Image of one Z-basis index under U2.
  std::uint64_t map_u2(std::uint64_t idx) const {
    const std::size_t n = system_qubits();
    const std::uint64_t x = idx & ((std::uint64_t{1} << n) - 1);
    const std::uint64_t fx = f_.empty() ? code_.decode(BitVec::from_uint(x, n)).to_uint() : f_[x];
    return idx ^ (fx << n);
  }

  std::uint64_t map(std::uint64_t idx) const { return map_u2(map_u1(idx)); }

  const std::vector<std::uint32_t>& u1_permutation() const { return require_dense(u1_); }
  const std::vector<std::uint32_t>& u2_permutation() const { return require_dense(u2_); }
  const std::vector<std::uint32_t>& permutation() const { return require_dense(full_); }

  CVector apply_u1(const CVector& psi) const { return permute_basis(psi, u1_permutation()); }
  CVector apply_u2(const CVector& psi) const { return permute_basis(psi, u2_permutation()); }
  CVector apply(const CVector& psi) const { return permute_basis(psi, permutation()); }
  DensityMatrix apply(const DensityMatrix& rho) const {
    return DensityMatrix(rho.qubits(), permute_basis(rho.matrix(), permutation()));
  }

  // Dense 0/1 matrix of a permutation (column idx has its 1 at row perm[idx]).
  static CMatrix unitary_matrix(const std::vector<std::uint32_t>& perm) {
    const auto d = static_cast<Eigen::Index>(perm.size());
    CMatrix u = CMatrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) u(perm[static_cast<std::size_t>(i)], i) = 1.0;
    return u;
  }

  // |x>_{S,b} (x) |0>_X on Q, as a dense state vector.
  CVector input_state(const BitVec& x, Basis system_basis) const {
    if (x.size() != system_qubits()) throw std::invalid_argument("KeyCircuit: input length mismatch");
    CVector psi = CVector::Zero(static_cast<Eigen::Index>(dimension(total_qubits())));
    psi[static_cast<Eigen::Index>(x.to_uint())] = 1.0;
    if (system_basis == Basis::X) hadamard_range(psi, 0, system_qubits());
    hadamard_range(psi, system_qubits(), ancilla_qubits());
    return psi;
  }

 private:
  explicit KeyCircuit(codes::LinearCode code) : code_(std::move(code)) {}

  static const std::vector<std::uint32_t>& require_dense(const std::vector<std::uint32_t>& table) {
    if (table.empty()) throw std::length_error("KeyCircuit: N + r exceeds dense simulator limit");
    return table;
  }

  codes::LinearCode code_;
  std::vector<Cnot> cnots_;
  std::vector<std::uint64_t> f_;
  std::vector<std::uint32_t> u1_, u2_, full_;
};

struct KeyOutcome {
  BitVec key;
  double probability = 0.0;  // probability of the most likely X-basis outcome on Q
};

// X-basis label propagation for circuits too large to simulate densely.
// U2 acts on Q as X^{f(x)}, which is diagonal in Q's X basis, so it cannot
// change the X-basis outcome; U1 is a CNOT network, and a CNOT maps X-basis
// states to X-basis states with control and target exchanged.
inline KeyOutcome extract_final_key_sparse(const KeyCircuit& circuit, const BitVec& kappa_sif) {
  const std::size_t n = circuit.system_qubits(), r = circuit.ancilla_qubits();
  if (kappa_sif.size() != n) throw std::invalid_argument("extract_final_key: input length mismatch");
  std::uint64_t w = kappa_sif.to_uint();
  for (const auto& g : circuit.cnots()) {
    if ((w >> g.target) & 1u) w ^= std::uint64_t{1} << g.control;
  }
  return {BitVec::from_uint(w >> n, r), 1.0};
}

// Runs U on |kappa>_X |0>_X and measures Q in the X basis.
inline KeyOutcome extract_final_key(const KeyCircuit& circuit, const BitVec& kappa_sif) {
  if (!circuit.dense()) return extract_final_key_sparse(circuit, kappa_sif);
  CVector psi = circuit.apply(circuit.input_state(kappa_sif, Basis::X));
  const std::size_t n = circuit.system_qubits(), r = circuit.ancilla_qubits();
  hadamard_range(psi, n, r);
  std::vector<double> p(std::size_t{1} << r, 0.0);
  for (Eigen::Index idx = 0; idx < psi.size(); ++idx) p[static_cast<std::size_t>(idx) >> n] += std::norm(psi[idx]);
  std::size_t best = 0;
  for (std::size_t y = 1; y < p.size(); ++y) {
    if (p[y] > p[best]) best = y;
  }
  return {BitVec::from_uint(best, r), p[best]};
}

// Probability that Q is found in |0>_Z after U acts on |x>_Z |0>_X. Dense
// simulation when the circuit fits, otherwise a sparse simulation over the
// 2^r nonzero input amplitudes.
inline double error_reversal_check(const KeyCircuit& circuit, const BitVec& x) {
  const std::size_t n = circuit.system_qubits(), r = circuit.ancilla_qubits();
  if (circuit.dense()) {
    const CVector psi = circuit.apply(circuit.input_state(x, Basis::Z));
    const std::size_t xs = std::size_t{1} << n;
    double p = 0.0;
    for (std::size_t i = 0; i < xs; ++i) p += std::norm(psi[static_cast<Eigen::Index>(i)]);
    return p;
  }
  if (x.size() != n) throw std::invalid_argument("error_reversal_check: input length mismatch");
  if (r > 24) throw std::length_error("error_reversal_check: too many ancillas for sparse simulation");
  const double amp = std::pow(2.0, -0.5 * static_cast<double>(r));
  std::unordered_map<std::uint64_t, Complex> out;
  for (std::uint64_t y = 0; y < (std::uint64_t{1} << r); ++y) {
    out[circuit.map(x.to_uint() | (y << n))] += amp;
  }
  double p = 0.0;
  for (const auto& [idx, a] : out) {
    if ((idx >> n) == 0) p += std::norm(a);
  }
  return p;
}

}  // namespace bb84lab::qsim

#endif  // BB84LAB_QSIM_KEY_CIRCUIT_HPP_

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

// Reference computations for the simulator tests. These deliberately avoid
// the library's Hadamard helpers, permutation tables and fidelity routine.

#ifndef BB84LAB_TESTS_QSIM_ORACLES_HPP_
#define BB84LAB_TESTS_QSIM_ORACLES_HPP_

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "bb84lab/codes.hpp"
#include "bb84lab/qsim/key_circuit.hpp"
#include "bb84lab/qsim/state.hpp"
#include "bb84lab/qsim/symmetry.hpp"
#include "bb84lab/rng.hpp"

namespace bb84lab::qsim::oracle {

// |u>_X from the sign formula (-1)^{u.i} / sqrt(2^n).
inline CVector x_basis_vector(std::uint64_t u, std::size_t n) {
  const std::size_t d = std::size_t{1} << n;
  CVector v(static_cast<Eigen::Index>(d));
  const double a = std::pow(2.0, -0.5 * static_cast<double>(n));
  for (std::size_t i = 0; i < d; ++i) v[static_cast<Eigen::Index>(i)] = (std::popcount(u & i) % 2 ? -a : a);
  return v;
}

inline CVector random_pure(std::size_t qubits, Rng& rng) {
  const std::size_t d = std::size_t{1} << qubits;
  CVector v(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    const double r = std::sqrt(-2.0 * std::log(rng.uniform_open()));
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    v[static_cast<Eigen::Index>(i)] = Complex(r * std::cos(phi), r * std::sin(phi));
  }
  return v / v.norm();
}

inline DensityMatrix random_mixed(std::size_t qubits, std::size_t rank, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << qubits);
  CMatrix m = CMatrix::Zero(d, d);
  for (std::size_t k = 0; k < rank; ++k) {
    const CVector v = random_pure(qubits, rng);
    m += rng.uniform_open() * v * v.adjoint();
  }
  return DensityMatrix(qubits, m / m.trace().real());
}

// (sum sqrt eig(rho sigma))^2; rho sigma is similar to sqrt(rho) sigma sqrt(rho).
inline double fidelity(const CMatrix& rho, const CMatrix& sigma) {
  Eigen::ComplexEigenSolver<CMatrix> es(rho * sigma, false);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += std::sqrt(std::max(es.eigenvalues()[i].real(), 0.0));
  return s * s;
}

inline CMatrix block_diagonal(const LabeledState& s) {
  const Eigen::Index d = s.blocks.front().matrix().rows();
  const auto k = static_cast<Eigen::Index>(s.blocks.size());
  CMatrix out = CMatrix::Zero(d * k, d * k);
  for (Eigen::Index b = 0; b < k; ++b) {
    out.block(b * d, b * d, d, d) = s.weights[static_cast<std::size_t>(b)] * s.blocks[static_cast<std::size_t>(b)].matrix();
  }
  return out;
}

// G^T kappa and G y by explicit sums over generator entries.
inline BitVec transpose_apply(const codes::LinearCode& code, const BitVec& kappa) {
  BitVec out(code.k());
  for (std::size_t j = 0; j < code.k(); ++j) {
    bool acc = false;
    for (std::size_t i = 0; i < code.n(); ++i) acc ^= code.generator().get(i, j) && kappa[i];
    out.set(j, acc);
  }
  return out;
}

inline std::uint64_t generator_apply(const codes::LinearCode& code, std::uint64_t y) {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < code.n(); ++i) {
    bool acc = false;
    for (std::size_t j = 0; j < code.k(); ++j) acc ^= code.generator().get(i, j) && ((y >> j) & 1u);
    out |= std::uint64_t{acc} << i;
  }
  return out;
}

// |x>|0>_X -> sum_y |x + Gy>|y + f(x + Gy)>; Q reads 0 iff f(x + Gy) = y,
// and distinct y give distinct outputs.
inline double reversal_probability(const codes::LinearCode& code, const BitVec& x) {
  const std::size_t r = code.k();
  std::size_t hits = 0;
  for (std::uint64_t y = 0; y < (std::uint64_t{1} << r); ++y) {
    const auto s = BitVec::from_uint(x.to_uint() ^ generator_apply(code, y), code.n());
    if (code.decode(s).to_uint() == y) ++hits;
  }
  return static_cast<double>(hits) / std::pow(2.0, static_cast<double>(r));
}

struct DualityDeviation {
  double z_basis = 0.0;
  double x_basis = 0.0;
  std::size_t states_checked = 0;
};

// Max amplitude deviation of U1 from |x>_Z|y>_Z -> |x + Gy>_Z|y>_Z and from
// |x>_X|y>_X -> |x>_X|y + G^T x>_X over all basis states.
inline DualityDeviation u1_duality_deviation(const KeyCircuit& circuit, const codes::LinearCode& code) {
  const std::size_t n = code.n(), r = code.k(), total = n + r;
  const std::size_t d = std::size_t{1} << total;
  const std::uint64_t low = (std::uint64_t{1} << n) - 1;
  DualityDeviation dev;
  for (std::uint64_t idx = 0; idx < d; ++idx) {
    const std::uint64_t x = idx & low, y = idx >> n;
    CVector z_in = CVector::Zero(static_cast<Eigen::Index>(d));
    z_in[static_cast<Eigen::Index>(idx)] = 1.0;
    CVector z_expected = CVector::Zero(static_cast<Eigen::Index>(d));
    z_expected[static_cast<Eigen::Index>((x ^ generator_apply(code, y)) | (y << n))] = 1.0;
    dev.z_basis = std::max(dev.z_basis, (circuit.apply_u1(z_in) - z_expected).cwiseAbs().maxCoeff());

    const std::uint64_t gtx = transpose_apply(code, BitVec::from_uint(x, n)).to_uint();
    const CVector x_expected = x_basis_vector(x | ((y ^ gtx) << n), total);
    dev.x_basis = std::max(dev.x_basis, (circuit.apply_u1(x_basis_vector(idx, total)) - x_expected).cwiseAbs().maxCoeff());
    ++dev.states_checked;
  }
  return dev;
}

struct VerificationSample {
  double eta = 0.0;   // frequency of key-register patterns of weight > t
  double pass = 0.0;  // frequency of test sets with <= floor(m delta_max) errors
};

// Samples Z outcomes of i.i.d. attacked qubits directly from the error rate q.
inline VerificationSample monte_carlo_verification(double q, std::size_t n, std::size_t t, std::size_t m,
                                                   double delta_max, std::size_t trials, Rng& rng) {
  const auto allowed = static_cast<std::size_t>(std::floor(static_cast<double>(m) * delta_max + 1e-9));
  std::size_t outside = 0, passed = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    std::size_t w = 0, e = 0;
    for (std::size_t i = 0; i < n; ++i) w += rng.uniform() < q;
    for (std::size_t i = 0; i < m; ++i) e += rng.uniform() < q;
    outside += w > t;
    passed += e <= allowed;
  }
  return {static_cast<double>(outside) / static_cast<double>(trials),
          static_cast<double>(passed) / static_cast<double>(trials)};
}

}  // namespace bb84lab::qsim::oracle

#endif  // BB84LAB_TESTS_QSIM_ORACLES_HPP_

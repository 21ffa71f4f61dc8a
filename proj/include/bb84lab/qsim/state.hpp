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

// Dense pure and mixed qubit states. Basis index bit j is the Z-basis value
// of qubit j (qubit 0 is the least significant bit).

#ifndef BB84LAB_QSIM_STATE_HPP_
#define BB84LAB_QSIM_STATE_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "bb84lab/gf2.hpp"

namespace bb84lab::qsim {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using gf2::BitVec;

inline constexpr std::size_t kMaxQubits = 12;
inline constexpr double kStateTolerance = 1e-10;
inline constexpr double kEntropyCutoff = 1e-12;

enum class Basis { Z, X };

class InvalidState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::size_t dimension(std::size_t qubits) {
  if (qubits > kMaxQubits) throw std::length_error("qsim: qubit count exceeds simulator limit");
  return std::size_t{1} << qubits;
}

// In-place H on one qubit of a state vector.
inline void hadamard_on(CVector& psi, std::size_t qubit) {
  const std::size_t bit = std::size_t{1} << qubit;
  const double s = 1.0 / std::numbers::sqrt2;
  for (std::size_t i = 0; i < static_cast<std::size_t>(psi.size()); ++i) {
    if (i & bit) continue;
    const Complex a = psi[i], b = psi[i | bit];
    psi[i] = s * (a + b);
    psi[i | bit] = s * (a - b);
  }
}

inline void hadamard_range(CVector& psi, std::size_t first, std::size_t count) {
  for (std::size_t q = first; q < first + count; ++q) hadamard_on(psi, q);
}

// H on the given qubit range, applied as H rho H on a density matrix.
inline CMatrix hadamard_conjugate(const CMatrix& rho, std::size_t first, std::size_t count) {
  CMatrix out = rho;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    CVector col = out.col(c);
    hadamard_range(col, first, count);
    out.col(c) = col;
  }
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    CVector row = out.row(r).transpose();
    hadamard_range(row, first, count);
    out.row(r) = row.transpose();
  }
  return out;
}

struct StateVector {
  std::size_t qubits = 0;
  CVector amplitudes;

  double norm() const { return amplitudes.norm(); }
  bool is_normalized(double tol = kStateTolerance) const { return std::abs(norm() - 1.0) <= tol; }
  Complex inner(const StateVector& other) const { return amplitudes.dot(other.amplitudes); }  // <this|other>
};

// |v>_Z, or |v>_X = H^n |v>_Z.
inline StateVector basis_state(const BitVec& v, Basis basis) {
  StateVector s{v.size(), CVector::Zero(static_cast<Eigen::Index>(dimension(v.size())))};
  s.amplitudes[static_cast<Eigen::Index>(v.to_uint())] = 1.0;
  if (basis == Basis::X) hadamard_range(s.amplitudes, 0, v.size());
  return s;
}

class DensityMatrix {
 public:
  DensityMatrix() = default;
  DensityMatrix(std::size_t qubits, CMatrix rho) : qubits_(qubits), rho_(std::move(rho)) {
    const auto d = static_cast<Eigen::Index>(dimension(qubits));
    if (rho_.rows() != d || rho_.cols() != d) throw std::invalid_argument("DensityMatrix: dimension mismatch");
  }

  static DensityMatrix from_pure(const StateVector& s) {
    return DensityMatrix(s.qubits, s.amplitudes * s.amplitudes.adjoint());
  }
  static DensityMatrix maximally_mixed(std::size_t qubits) {
    const auto d = static_cast<Eigen::Index>(dimension(qubits));
    return DensityMatrix(qubits, CMatrix::Identity(d, d) / static_cast<double>(d));
  }

  std::size_t qubits() const { return qubits_; }
  std::size_t dim() const { return static_cast<std::size_t>(rho_.rows()); }
  const CMatrix& matrix() const { return rho_; }
  Complex operator()(std::size_t i, std::size_t j) const {
    return rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double trace() const { return rho_.trace().real(); }

  double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  // Hermitian, unit trace, positive semidefinite.
  void validate(double tol = kStateTolerance, double psd_tol = 1e-9) const {
    if (hermiticity_error() > tol) throw InvalidState("density matrix is not Hermitian");
    if (std::abs(trace() - 1.0) > tol) throw InvalidState("density matrix trace is not 1");
    if (min_eigenvalue() < -psd_tol) throw InvalidState("density matrix has a negative eigenvalue");
  }

 private:
  std::size_t qubits_ = 0;
  CMatrix rho_;
};

// a on the low qubits, b on the high ones.
inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  const auto da = static_cast<Eigen::Index>(a.dim()), db = static_cast<Eigen::Index>(b.dim());
  CMatrix out(da * db, da * db);
  for (Eigen::Index ib = 0; ib < db; ++ib) {
    for (Eigen::Index jb = 0; jb < db; ++jb) {
      out.block(ib * da, jb * da, da, da) = a.matrix() * b.matrix()(ib, jb);
    }
  }
  return DensityMatrix(a.qubits() + b.qubits(), std::move(out));
}

// Reduced state on `keep`; output qubit k is input qubit keep[k].
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::size_t>& keep) {
  std::uint64_t keep_mask = 0;
  for (auto q : keep) {
    if (q >= rho.qubits()) throw std::invalid_argument("partial_trace: qubit out of range");
    keep_mask |= std::uint64_t{1} << q;
  }
  const std::size_t d = rho.dim();
  std::vector<std::size_t> reduced_index(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::size_t r = 0;
    for (std::size_t k = 0; k < keep.size(); ++k) r |= ((i >> keep[k]) & 1u) << k;
    reduced_index[i] = r;
  }
  const auto dk = static_cast<Eigen::Index>(dimension(keep.size()));
  CMatrix out = CMatrix::Zero(dk, dk);
  const CMatrix& m = rho.matrix();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if ((i & ~keep_mask) != (j & ~keep_mask)) continue;
      out(static_cast<Eigen::Index>(reduced_index[i]), static_cast<Eigen::Index>(reduced_index[j])) +=
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return DensityMatrix(keep.size(), std::move(out));
}

// rho -> P rho P^T for the basis permutation |i> -> |perm[i]>.
inline CMatrix permute_basis(const CMatrix& rho, const std::vector<std::uint32_t>& perm) {
  CMatrix out(rho.rows(), rho.cols());
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j) out(perm[i], perm[j]) = rho(i, j);
  }
  return out;
}

inline CVector permute_basis(const CVector& psi, const std::vector<std::uint32_t>& perm) {
  CVector out(psi.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) out[perm[i]] = psi[i];
  return out;
}

// A with A A^+ = rho, from a pivoted LDL^T factorization; pivots at or
// below the cutoff are dropped. Any such A serves for the fidelity below.
inline CMatrix psd_factor(const CMatrix& rho, double cutoff = 1e-13) {
  const Eigen::LDLT<CMatrix> ldlt(rho);
  const CMatrix l = ldlt.matrixL();
  const auto& d = ldlt.vectorD();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i].real() > cutoff) keep.push_back(i);
  }
  CMatrix f(rho.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    f.col(static_cast<Eigen::Index>(k)) = l.col(keep[k]) * std::sqrt(d[keep[k]].real());
  }
  return ldlt.transpositionsP().transpose() * f;
}

// F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2. With rho = A A^+
// and sigma = B B^+ this is the squared nuclear norm of A^+ B, which avoids
// square roots of numerically-zero eigenvalues.
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  const CMatrix a = psd_factor(rho.matrix());
  const CMatrix b = psd_factor(sigma.matrix());
  if (a.cols() == 0 || b.cols() == 0) return 0.0;
  const CMatrix overlap = a.adjoint() * b;
  Eigen::JacobiSVD<CMatrix> svd(overlap);
  const double root = svd.singularValues().sum();
  return root * root;
}

inline double von_neumann_entropy(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double l = es.eigenvalues()[i];
    if (l > kEntropyCutoff) s -= l * std::log2(l);
  }
  return s;
}

// (1/2) sum |eig(a - b)| for Hermitian a, b (not necessarily unit trace).
inline double trace_distance(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("trace_distance: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a - b, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double shannon_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

// Z-basis diagonal of rho.
inline std::vector<double> z_distribution(const DensityMatrix& rho) {
  std::vector<double> p(rho.dim());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = rho(i, i).real();
  return p;
}

// Outcome distribution of measuring every qubit in the X basis.
inline std::vector<double> x_distribution(const DensityMatrix& rho) {
  return z_distribution(DensityMatrix(rho.qubits(), hadamard_conjugate(rho.matrix(), 0, rho.qubits())));
}

}  // namespace bb84lab::qsim

#endif  // BB84LAB_QSIM_STATE_HPP_

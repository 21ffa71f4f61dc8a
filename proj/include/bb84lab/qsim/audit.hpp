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

// Small-N adversarial audit of the reduced protocol in which Eve prepares
// Bob's qubits. Attacks are i.i.d.: each of Bob's qubits starts in |0> with
// a private one-qubit ancilla in |0>, and Eve applies the same two-qubit
// unitary to every pair. Bob's qubit is the low qubit of the 4x4 matrix.

#ifndef BB84LAB_QSIM_AUDIT_HPP_
#define BB84LAB_QSIM_AUDIT_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bb84lab/bounds.hpp"
#include "bb84lab/codes.hpp"
#include "bb84lab/qsim/key_circuit.hpp"
#include "bb84lab/qsim/state.hpp"
#include "bb84lab/qsim/symmetry.hpp"
#include "bb84lab/rng.hpp"

namespace bb84lab::qsim {

inline constexpr std::size_t kMaxAuditQubits = 4;

struct Attack {
  std::string name;
  CMatrix unitary = CMatrix::Identity(4, 4);  // on Bob (x) ancilla, Bob low

  static Attack identity() { return {"identity", CMatrix::Identity(4, 4)}; }

  // R_y(theta) on Bob's qubit, ancilla untouched.
  static Attack rotation(double theta) {
    CMatrix ry(2, 2);
    ry << std::cos(theta / 2), -std::sin(theta / 2), std::sin(theta / 2), std::cos(theta / 2);
    return {"rotation:" + format_double(theta), kron(CMatrix::Identity(2, 2), ry)};
  }

  // Eve keeps the signal and forwards |+>: SWAP (1 (x) H_E).
  static Attack swap() {
    CMatrix sw = CMatrix::Zero(4, 4);
    sw(0, 0) = sw(1, 2) = sw(2, 1) = sw(3, 3) = 1.0;
    return {"swap", sw * kron(hadamard(), CMatrix::Identity(2, 2))};
  }

  // H on Bob, then CNOT Bob -> ancilla: Bob's qubit is maximally entangled with Eve.
  static Attack bell() {
    CMatrix cnot = CMatrix::Zero(4, 4);
    cnot(0, 0) = cnot(3, 1) = cnot(2, 2) = cnot(1, 3) = 1.0;
    return {"bell", cnot * kron(CMatrix::Identity(2, 2), hadamard())};
  }

  // Haar-random two-qubit unitary (QR of a complex Gaussian matrix).
  static Attack random(std::uint64_t seed) {
    Rng rng(seed);
    CMatrix z(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) {
        const double r = std::sqrt(-2.0 * std::log(rng.uniform_open()));
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        z(i, j) = Complex(r * std::cos(phi), r * std::sin(phi)) / std::numbers::sqrt2;
      }
    }
    Eigen::HouseholderQR<CMatrix> qr(z);
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < 4; ++j) {
      const Complex d = r(j, j);
      if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
    }
    return {"random:" + std::to_string(seed), q};
  }

  // identity | swap | bell | rotation:<theta> | random:<seed>
  static Attack parse(const std::string& text) {
    if (text == "identity") return identity();
    if (text == "swap") return swap();
    if (text == "bell") return bell();
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
      const std::string kind = text.substr(0, colon), arg = text.substr(colon + 1);
      try {
        std::size_t used = 0;
        if (kind == "rotation") {
          const double theta = std::stod(arg, &used);
          if (used == arg.size()) return rotation(theta);
        } else if (kind == "random") {
          const auto seed = std::stoull(arg, &used);
          if (used == arg.size()) return random(seed);
        }
      } catch (const std::logic_error&) {
      }
    }
    throw std::invalid_argument("unknown attack: " + text);
  }

  // Bob's qubit and ancilla after the attack, amplitude index = bob + 2 * eve.
  CVector signal_state() const { return unitary.col(0); }

  // Probability that a Z measurement of Bob's qubit reads 1.
  double z_error_probability() const {
    const CVector s = signal_state();
    return std::norm(s[1]) + std::norm(s[3]);
  }

 private:
  static CMatrix hadamard() {
    CMatrix h(2, 2);
    h << 1, 1, 1, -1;
    return h / std::numbers::sqrt2;
  }
  // a on the high qubit, b on the low qubit.
  static CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
    return out;
  }
  static std::string format_double(double v) {
    std::string s = std::to_string(v);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }
};

struct AuditOptions {
  std::size_t test_size = 0;  // |T|; 0 means N
  double delta_max = 0.15;
  double slack = 1e-8;
};

struct SecurityReport {
  std::string attack;
  std::string code;
  std::size_t n = 0;
  std::size_t r = 0;
  std::size_t test_size = 0;
  double delta_max = 0.0;

  double z_error_probability = 0.0;       // per-qubit Z error rate seen by the verification test
  double verification_probability = 0.0;  // P(test passes)
  double eta = 0.0;
  double fidelity = 0.0;                  // F(rho', rho_s)
  double q_zero = 0.0;                    // <0|_Z rho_Q |0>_Z
  double q_zero_projected = 0.0;          // same, with rho' in place of rho_s
  double entropy = 0.0;                   // S(rho_Q)
  double entropy_bound = 0.0;             // h(eta) + r eta
  std::vector<double> key_distribution;   // p_y, X-basis outcomes of Q
  double shannon_entropy = 0.0;           // H({p_y})
  double shannon_target = 0.0;            // r (1 - 2 eta)
  double uniformity_fidelity = 0.0;       // 2^-r (sum sqrt p_y)^2
  double leakage_bound = 0.0;             // 3 r eta + h(eta)

  bool vacuous = false;                        // eta > 1/2 or leakage bound >= r
  bool verification_failure_dominant = false;  // test passes with probability < 1/2

  bool zero_overlap_ok = false;         // q_zero >= 1 - eta
  bool fidelity_chain_ok = false;       // q_zero >= F(rho', rho_s)
  bool holevo_ok = false;               // S(rho_Q) <= h(eta) + r eta (checked when eta <= 1/2)
  bool shannon_ok = false;              // H >= r (1 - 2 eta)
  bool uniformity_fidelity_ok = false;  // 2^-r (sum sqrt p)^2 >= 1 - eta

  nlohmann::json to_json() const {
    return {{"attack", attack},
            {"code", code},
            {"n", n},
            {"r", r},
            {"test_size", test_size},
            {"delta_max", delta_max},
            {"z_error_probability", z_error_probability},
            {"verification_probability", verification_probability},
            {"eta", eta},
            {"fidelity", fidelity},
            {"q_zero", q_zero},
            {"q_zero_projected", q_zero_projected},
            {"entropy", entropy},
            {"entropy_bound", entropy_bound},
            {"key_distribution", key_distribution},
            {"shannon_entropy", shannon_entropy},
            {"shannon_target", shannon_target},
            {"uniformity_fidelity", uniformity_fidelity},
            {"leakage_bound", leakage_bound},
            {"vacuous", vacuous},
            {"verification_failure_dominant", verification_failure_dominant},
            {"checks",
             {{"zero_overlap", zero_overlap_ok},
              {"fidelity_chain", fidelity_chain_ok},
              {"holevo", holevo_ok},
              {"shannon", shannon_ok},
              {"uniformity_fidelity", uniformity_fidelity_ok}}}};
  }
};

// P(at most floor(m * delta_max) errors among m independent Z tests with rate q).
inline double verification_pass_probability(std::size_t m, double q, double delta_max) {
  const auto allowed = static_cast<std::size_t>(std::floor(static_cast<double>(m) * delta_max + 1e-9));
  double p = 0.0;
  for (std::size_t k = 0; k <= std::min(allowed, m); ++k) {
    const double log_term = bounds::detail::log_choose(double(m), double(k)) +
                            (k ? double(k) * std::log(q) : 0.0) + (m - k ? double(m - k) * std::log1p(-q) : 0.0);
    if (std::isfinite(log_term)) p += std::exp(log_term);
  }
  return std::min(p, 1.0);
}

// Joint pure state of N attacked signals: S on qubits 0..N-1, E on N..2N-1.
inline CVector attacked_register(const Attack& attack, std::size_t n) {
  const CVector s = attack.signal_state();
  const std::size_t d = dimension(2 * n);
  CVector psi(static_cast<Eigen::Index>(d));
  for (std::size_t idx = 0; idx < d; ++idx) {
    Complex a = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t b = (idx >> i) & 1u, e = (idx >> (n + i)) & 1u;
      a *= s[static_cast<Eigen::Index>(b + 2 * e)];
    }
    psi[static_cast<Eigen::Index>(idx)] = a;
  }
  return psi;
}

// rho_S (x) |0>_X<0| on Q, then U, then trace out S.
inline DensityMatrix key_register_state(const KeyCircuit& circuit, const DensityMatrix& rho_s) {
  const std::size_t n = circuit.system_qubits(), r = circuit.ancilla_qubits();
  CVector plus = CVector::Zero(static_cast<Eigen::Index>(dimension(r)));
  plus[0] = 1.0;
  hadamard_range(plus, 0, r);
  const DensityMatrix q0 = DensityMatrix::from_pure({r, plus});
  const DensityMatrix out = circuit.apply(tensor(rho_s, q0));
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < r; ++j) keep.push_back(n + j);
  return partial_trace(out, keep);
}

// Runs the audit pipeline: joint state, verification test on T (independent
// of S for i.i.d. attacks, so it only contributes its pass probability),
// symmetrization, projection, key circuit, reduced state of Q.
inline SecurityReport audit_protocol3(const Attack& attack, const codes::LinearCode& code,
                                      const AuditOptions& options = {}) {
  const std::size_t n = code.n(), r = code.k();
  if (n > kMaxAuditQubits) throw std::length_error("audit_protocol3: N exceeds the audit limit");
  if (attack.unitary.rows() != 4 || attack.unitary.cols() != 4) throw std::invalid_argument("audit: attack must be 4x4");
  if ((attack.unitary.adjoint() * attack.unitary - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("audit: attack is not unitary");
  }

  SecurityReport rep;
  rep.attack = attack.name;
  rep.code = code.descriptor().to_string();
  rep.n = n;
  rep.r = r;
  rep.test_size = options.test_size ? options.test_size : n;
  rep.delta_max = options.delta_max;
  rep.z_error_probability = attack.z_error_probability();
  rep.verification_probability = verification_pass_probability(rep.test_size, rep.z_error_probability, options.delta_max);
  if (rep.verification_probability < 1e-300) throw std::domain_error("audit: verification probability is zero");
  rep.verification_failure_dominant = rep.verification_probability < 0.5;

  const KeyCircuit circuit = KeyCircuit::build(code);
  const CVector psi = attacked_register(attack, n);
  const DensityMatrix rho = DensityMatrix::from_pure({2 * n, psi});
  const LabeledState rho_s = symmetrize(rho, n);
  const Projection proj = project_correctable(rho_s, code.correctable_set());
  rep.eta = proj.eta;
  rep.fidelity = fidelity(proj.rho_prime, rho_s);

  std::vector<std::size_t> s_qubits(n);
  for (std::size_t i = 0; i < n; ++i) s_qubits[i] = i;
  const DensityMatrix rho_q = key_register_state(circuit, partial_trace(rho_s.average(), s_qubits));
  const DensityMatrix rho_q_prime = key_register_state(circuit, partial_trace(proj.rho_prime.average(), s_qubits));

  rep.q_zero = rho_q(0, 0).real();
  rep.q_zero_projected = rho_q_prime(0, 0).real();
  rep.entropy = von_neumann_entropy(rho_q);
  rep.key_distribution = x_distribution(rho_q);
  rep.shannon_entropy = shannon_entropy(rep.key_distribution);
  const double rd = static_cast<double>(r);
  rep.shannon_target = rd * (1.0 - 2.0 * rep.eta);
  double root_sum = 0.0;
  for (double p : rep.key_distribution) root_sum += std::sqrt(std::max(p, 0.0));
  rep.uniformity_fidelity = root_sum * root_sum / std::pow(2.0, rd);

  const double h = bounds::binary_entropy(rep.eta);
  rep.entropy_bound = h + rd * rep.eta;
  rep.leakage_bound = 3.0 * rd * rep.eta + h;
  rep.vacuous = rep.eta > 0.5 || rep.leakage_bound >= rd;

  const double slack = options.slack;
  rep.zero_overlap_ok = rep.q_zero >= 1.0 - rep.eta - slack;
  rep.fidelity_chain_ok = rep.q_zero >= rep.fidelity - slack;
  rep.holevo_ok = rep.eta > 0.5 || rep.entropy <= rep.entropy_bound + slack;
  rep.shannon_ok = rep.shannon_entropy >= rep.shannon_target - slack;
  rep.uniformity_fidelity_ok = rep.uniformity_fidelity >= 1.0 - rep.eta - slack;
  return rep;
}

// Attack family used by the acceptance audit and the CLI default.
inline std::vector<Attack> standard_attacks(std::size_t random_count = 10) {
  std::vector<Attack> out{Attack::identity()};
  for (double theta : {0.1, 0.3, 0.5, 1.0, 1.3}) out.push_back(Attack::rotation(theta));
  out.push_back(Attack::swap());
  out.push_back(Attack::bell());
  for (std::size_t s = 1; s <= random_count; ++s) out.push_back(Attack::random(s));
  return out;
}

}  // namespace bb84lab::qsim

#endif  // BB84LAB_QSIM_AUDIT_HPP_

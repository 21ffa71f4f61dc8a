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

// Source, channel and detector models for the prepare-and-measure protocol.

#ifndef BB84LAB_PROTOCOL_MODELS_HPP_
#define BB84LAB_PROTOCOL_MODELS_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bb84lab/qsim/audit.hpp"
#include "bb84lab/qsim/state.hpp"
#include "bb84lab/rng.hpp"

namespace bb84lab::protocol {

using qsim::CMatrix;
using qsim::Complex;
using qsim::CVector;

inline constexpr double kCompliance = 1e-10;

namespace states {

inline CMatrix projector(const CVector& v) { return v * v.adjoint(); }

// Eigenstate of basis a (0 = Z, 1 = X) with value g.
inline CVector bb84(int a, int g) {
  CVector v(2);
  const double s = 1.0 / std::numbers::sqrt2;
  if (a == 0) {
    v << (g ? 0.0 : 1.0), (g ? 1.0 : 0.0);
  } else {
    v << s, (g ? -s : s);
  }
  return v;
}

inline CMatrix ry(double theta) {
  CMatrix m(2, 2);
  m << std::cos(theta / 2), -std::sin(theta / 2), std::sin(theta / 2), std::cos(theta / 2);
  return m;
}

// a on the low qubit, b on the high qubit.
inline CMatrix kron(const CMatrix& low, const CMatrix& high) {
  CMatrix out(low.rows() * high.rows(), low.cols() * high.cols());
  for (Eigen::Index i = 0; i < high.rows(); ++i) {
    for (Eigen::Index j = 0; j < high.cols(); ++j) {
      out.block(i * low.rows(), j * low.cols(), low.rows(), low.cols()) = high(i, j) * low;
    }
  }
  return out;
}

}  // namespace states

enum class SourceKind { perfect, entangled, rotated_z, leaky_two_copy };

// Alice's source: emitted states rho(a, g) with probabilities p_{a,g}.
class SourceModel {
 public:
  // bias shifts weight toward g = 0: p_{a,0} = 1/4 + bias, p_{a,1} = 1/4 - bias.
  static SourceModel perfect(double bias = 0.0) {
    if (std::abs(bias) > 0.25) throw std::invalid_argument("perfect source: |bias| must be <= 1/4");
    SourceModel s(SourceKind::perfect);
    s.bias_ = bias;
    return s;
  }

  // Alice holds A (x) A' in V |Phi+><Phi+| + (1 - V) I/4 and measures A' with
  // sigma_z for a = 0 or along angle m1_angle in the x-z plane for a = 1.
  static SourceModel entangled(double visibility = 1.0, double m1_angle = std::numbers::pi / 2) {
    if (visibility < 0.0 || visibility > 1.0) throw std::invalid_argument("entangled source: visibility outside [0, 1]");
    SourceModel s(SourceKind::entangled);
    s.visibility_ = visibility;
    s.m1_angle_ = m1_angle;
    return s;
  }

  // Perfect in X; in Z both states are rotated by R_y(theta).
  static SourceModel rotated_z(double theta) {
    SourceModel s(SourceKind::rotated_z);
    s.theta_ = theta;
    return s;
  }

  // With probability leak emits two identical copies. States live on a flag
  // qubit (high) and two signal qubits; single emissions leave the second
  // signal qubit in |0>.
  static SourceModel leaky_two_copy(double leak = 0.5) {
    if (leak < 0.0 || leak > 1.0) throw std::invalid_argument("leaky source: probability outside [0, 1]");
    SourceModel s(SourceKind::leaky_two_copy);
    s.leak_ = leak;
    return s;
  }

  SourceKind kind() const { return kind_; }
  std::string name() const {
    switch (kind_) {
      case SourceKind::perfect: return "perfect";
      case SourceKind::entangled: return "entangled";
      case SourceKind::rotated_z: return "rotated_z";
      case SourceKind::leaky_two_copy: return "leaky_two_copy";
    }
    return "unknown";
  }
  std::size_t qubits() const { return kind_ == SourceKind::leaky_two_copy ? 3 : 1; }

  double probability(int a, int g) const {
    check_bits(a, g);
    if (kind_ == SourceKind::perfect) return g == 0 ? 0.25 + bias_ : 0.25 - bias_;
    if (kind_ == SourceKind::entangled) return 0.5 * conditional(a, g).trace().real();
    return 0.25;
  }

  CMatrix emit(int a, int g) const {
    check_bits(a, g);
    switch (kind_) {
      case SourceKind::perfect: return states::projector(states::bb84(a, g));
      case SourceKind::entangled: {
        const CMatrix c = conditional(a, g);
        return c / c.trace().real();
      }
      case SourceKind::rotated_z: {
        const CVector v = a == 0 ? CVector(states::ry(theta_) * states::bb84(0, g)) : states::bb84(1, g);
        return states::projector(v);
      }
      case SourceKind::leaky_two_copy: {
        const CMatrix one = states::projector(states::bb84(a, g));
        CMatrix zero = CMatrix::Zero(2, 2);
        zero(0, 0) = 1.0;
        CMatrix flag0 = CMatrix::Zero(2, 2), flag1 = CMatrix::Zero(2, 2);
        flag0(0, 0) = 1.0;
        flag1(1, 1) = 1.0;
        return (1.0 - leak_) * states::kron(states::kron(one, zero), flag0) +
               leak_ * states::kron(states::kron(one, one), flag1);
      }
    }
    throw std::logic_error("unreachable");
  }

  // Draws g for basis a with probability p_{a,g} / (1/2).
  int sample_key_bit(int a, Rng& rng) const { return rng.uniform() < 2.0 * probability(a, 0) ? 0 : 1; }

  // sum_g p_{a,g} rho(a, g).
  CMatrix basis_average(int a) const {
    return probability(a, 0) * emit(a, 0) + probability(a, 1) * emit(a, 1);
  }

 private:
  explicit SourceModel(SourceKind k) : kind_(k) {}

  static void check_bits(int a, int g) {
    if ((a != 0 && a != 1) || (g != 0 && g != 1)) throw std::invalid_argument("source: a and g must be bits");
  }

  // Unnormalized state of A after outcome g of M_a on A'; its trace is P(g | a).
  CMatrix conditional(int a, int g) const {
    CVector phi = CVector::Zero(4);
    phi[0] = phi[3] = 1.0 / std::numbers::sqrt2;
    const CMatrix rho = visibility_ * phi * phi.adjoint() + (1.0 - visibility_) * CMatrix::Identity(4, 4) / 4.0;
    const double angle = a == 0 ? 0.0 : m1_angle_;
    CVector e(2);
    e << std::cos(angle / 2), std::sin(angle / 2);
    if (g) e << -std::sin(angle / 2), std::cos(angle / 2);
    const CMatrix pi_ap = states::kron(CMatrix::Identity(2, 2), states::projector(e));  // A low, A' high
    const CMatrix post = pi_ap * rho * pi_ap;
    CMatrix out = CMatrix::Zero(2, 2);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) out(i, j) = post(i, j) + post(i + 2, j + 2);
    }
    return out;
  }

  SourceKind kind_;
  double bias_ = 0.0;
  double visibility_ = 1.0;
  double m1_angle_ = std::numbers::pi / 2;
  double theta_ = 0.0;
  double leak_ = 0.5;
};

// (1/2) || sum_g p_{0,g} rho(0,g) - sum_g p_{1,g} rho(1,g) ||_tr.
inline double check_basis_independence(const SourceModel& s) {
  return qsim::trace_distance(s.basis_average(0), s.basis_average(1));
}

class NonCompliantSource : public std::runtime_error {
 public:
  explicit NonCompliantSource(double distance)
      : std::runtime_error("source violates basis independence (trace distance " + std::to_string(distance) + ")"),
        distance_(distance) {}
  double distance() const { return distance_; }

 private:
  double distance_;
};

// Runs refuse sources whose basis averages differ, and sources that are not
// single qubits (the wire format carries one qubit per signal).
inline void require_compliant(const SourceModel& s) {
  const double d = check_basis_independence(s);
  if (d >= kCompliance || s.qubits() != 1) throw NonCompliantSource(d);
}

// One transmitted signal: a qubit state, or nothing if lost in transit.
struct Signal {
  bool lost = false;
  CMatrix rho = CMatrix::Identity(2, 2) / 2.0;
};

struct EveRecord {
  std::uint32_t index = 0;
  int basis = -1;   // -1 when Eve did not measure
  int outcome = -1;
};

// Z (a = 0) or X (a = 1) measurement with the rng deciding the outcome.
inline int measure(const CMatrix& rho, int basis, Rng& rng) {
  const CVector one = states::bb84(basis, 1);
  const double p1 = std::clamp((one.adjoint() * rho * one)(0, 0).real(), 0.0, 1.0);
  return rng.uniform() < p1 ? 1 : 0;
}

enum class ChannelKind { identity, depolarizing, intercept_resend, unitary, loss };
enum class EveBasisPolicy { random, z, x };

class ChannelModel {
 public:
  static ChannelModel identity() { return ChannelModel(ChannelKind::identity); }
  static ChannelModel depolarizing(double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("depolarizing: p outside [0, 1]");
    ChannelModel c(ChannelKind::depolarizing);
    c.p_ = p;
    return c;
  }
  static ChannelModel intercept_resend(EveBasisPolicy policy = EveBasisPolicy::random) {
    ChannelModel c(ChannelKind::intercept_resend);
    c.policy_ = policy;
    return c;
  }
  // Two-qubit unitary on signal (low) and a fresh Eve ancilla in |0> (high).
  static ChannelModel unitary(const qsim::Attack& attack) {
    ChannelModel c(ChannelKind::unitary);
    c.attack_ = attack;
    return c;
  }
  static ChannelModel loss(double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("loss: p outside [0, 1]");
    ChannelModel c(ChannelKind::loss);
    c.p_ = p;
    return c;
  }

  ChannelKind kind() const { return kind_; }
  double parameter() const { return p_; }
  EveBasisPolicy policy() const { return policy_; }
  const qsim::Attack& attack() const { return attack_; }

  // Trace-preserving action on one signal. Randomness (if any) comes from
  // Eve's stream.
  Signal apply(std::uint32_t index, const Signal& in, Rng& eve, std::vector<EveRecord>* log = nullptr) const {
    if (in.lost) return in;
    Signal out = in;
    switch (kind_) {
      case ChannelKind::identity: break;
      case ChannelKind::depolarizing:
        out.rho = (1.0 - p_) * in.rho + p_ * CMatrix::Identity(2, 2) / 2.0;
        break;
      case ChannelKind::intercept_resend: {
        int basis = policy_ == EveBasisPolicy::z ? 0 : policy_ == EveBasisPolicy::x ? 1 : (eve.bit() ? 1 : 0);
        const int outcome = measure(in.rho, basis, eve);
        out.rho = states::projector(states::bb84(basis, outcome));
        if (log) log->push_back({index, basis, outcome});
        break;
      }
      case ChannelKind::unitary: {
        CMatrix anc = CMatrix::Zero(2, 2);
        anc(0, 0) = 1.0;
        const CMatrix joint = attack_.unitary * states::kron(in.rho, anc) * attack_.unitary.adjoint();
        out.rho = CMatrix::Zero(2, 2);
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) out.rho(i, j) = joint(i, j) + joint(i + 2, j + 2);
        }
        break;
      }
      case ChannelKind::loss:
        if (eve.uniform() < p_) {
          out.lost = true;
          if (log) log->push_back({index, -1, -1});
        }
        break;
    }
    return out;
  }

 private:
  explicit ChannelModel(ChannelKind k) : kind_(k) {}
  ChannelKind kind_;
  double p_ = 0.0;
  EveBasisPolicy policy_ = EveBasisPolicy::random;
  qsim::Attack attack_ = qsim::Attack::identity();
};

// Bob's detector. Efficiency must be the same in both bases.
class DetectorModel {
 public:
  explicit DetectorModel(double efficiency = 1.0) : efficiency_(efficiency) {
    if (efficiency <= 0.0 || efficiency > 1.0) throw std::invalid_argument("detector: efficiency outside (0, 1]");
  }
  static DetectorModel per_basis(double eff_z, double eff_x) {
    if (eff_z != eff_x) throw std::invalid_argument("detector: efficiency must be identical for both bases");
    return DetectorModel(eff_z);
  }
  double efficiency() const { return efficiency_; }

  // Outcome h, or nullopt for a null (failed) detection.
  std::optional<int> detect(const Signal& s, int basis, Rng& bob) const {
    const bool fired = efficiency_ >= 1.0 || bob.uniform() < efficiency_;
    if (s.lost || !fired) return std::nullopt;
    return measure(s.rho, basis, bob);
  }

 private:
  double efficiency_;
};

}  // namespace bb84lab::protocol

#endif  // BB84LAB_PROTOCOL_MODELS_HPP_

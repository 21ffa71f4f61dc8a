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

// Alice and Bob as message-driven state machines. Each call to on_message
// consumes one message and returns the messages to send in reply; neither
// machine touches a transport.

#ifndef BB84LAB_PROTOCOL_SESSION_HPP_
#define BB84LAB_PROTOCOL_SESSION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bb84lab/bounds.hpp"
#include "bb84lab/codes.hpp"
#include "bb84lab/protocol/config.hpp"
#include "bb84lab/protocol/message.hpp"
#include "bb84lab/protocol/models.hpp"
#include "bb84lab/protocol/reconcile.hpp"
#include "bb84lab/protocol/sift.hpp"
#include "bb84lab/rng.hpp"

namespace bb84lab::protocol {

enum class Phase { prepare, transmit, announce, sift, test, code, reconcile, confirm, done, aborted };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::prepare: return "prepare";
    case Phase::transmit: return "transmit";
    case Phase::announce: return "announce";
    case Phase::sift: return "sift";
    case Phase::test: return "test";
    case Phase::code: return "code";
    case Phase::reconcile: return "reconcile";
    case Phase::confirm: return "confirm";
    case Phase::done: return "done";
    case Phase::aborted: return "aborted";
  }
  return "unknown";
}

struct SessionStats {
  std::size_t signals = 0;
  std::size_t detected = 0;
  std::size_t test_size = 0;
  std::size_t key_size = 0;
  std::size_t errors = 0;
  double delta = 0.0;
  std::size_t r = 0;
  std::size_t tau = 0;  // pool bits spent on reconciliation
  std::size_t confirm_bits = 0;
  std::size_t cascade_rounds = 0;
  std::string code;
  AbortReason abort = AbortReason::none;

  double key_rate() const {
    if (abort != AbortReason::none || key_size == 0) return 0.0;
    return (static_cast<double>(r) - static_cast<double>(tau) - static_cast<double>(confirm_bits)) /
           static_cast<double>(key_size);
  }
};

// Stream numbers under the master seed.
inline constexpr std::uint64_t kAliceStream = 1;
inline constexpr std::uint64_t kBobStream = 2;
inline constexpr std::uint64_t kEveStream = 3;

// ---- QSIGNAL payload -----------------------------------------------------

// u32 index, u8 lost flag, then the 2x2 density matrix as 8 doubles
// (row-major, real then imaginary).
inline Bytes encode_qsignal(std::uint32_t index, const Signal& s) {
  if (s.rho.rows() != 2 || s.rho.cols() != 2) throw std::invalid_argument("QSIGNAL: only single-qubit signals");
  ByteWriter w;
  w.u32(index).u8(s.lost ? 1 : 0);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) w.f64(s.rho(i, j).real()).f64(s.rho(i, j).imag());
  }
  return w.take();
}

inline std::pair<std::uint32_t, Signal> decode_qsignal(const Bytes& payload) {
  ByteReader r(payload);
  const std::uint32_t index = r.u32();
  const std::uint8_t lost = r.u8();
  if (lost > 1) throw FramingError("QSIGNAL: bad lost flag");
  Signal s;
  s.lost = lost == 1;
  s.rho = CMatrix(2, 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double re = r.f64(), im = r.f64();
      if (!std::isfinite(re) || !std::isfinite(im)) throw FramingError("QSIGNAL: non-finite amplitude");
      s.rho(i, j) = Complex(re, im);
    }
  }
  r.expect_done();
  return {index, s};
}

inline Message abort_message(AbortReason reason) {
  return {Tag::ABORT, ByteWriter().u8(static_cast<std::uint8_t>(reason)).take()};
}

inline AbortReason decode_abort(const Bytes& payload) {
  ByteReader r(payload);
  const std::uint8_t v = r.u8();
  r.expect_done();
  if (v > static_cast<std::uint8_t>(AbortReason::config_mismatch)) throw FramingError("ABORT: unknown reason");
  return static_cast<AbortReason>(v);
}

namespace detail {

inline bool is_sorted_unique(const std::vector<std::uint32_t>& v) {
  return std::adjacent_find(v.begin(), v.end(), [](auto x, auto y) { return x >= y; }) == v.end();
}

inline bool is_permutation_of_n(const std::vector<std::uint32_t>& v) {
  std::vector<bool> seen(v.size(), false);
  for (auto x : v) {
    if (x >= v.size() || seen[x]) return false;
    seen[x] = true;
  }
  return true;
}

class PhaseOrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace detail

// Shared bookkeeping for both parties.
class PartyBase {
 public:
  Phase phase() const { return phase_; }
  bool finished() const { return phase_ == Phase::done || phase_ == Phase::aborted; }
  bool succeeded() const { return phase_ == Phase::done; }
  bool aborted() const { return phase_ == Phase::aborted; }
  AbortReason reason() const { return stats_.abort; }
  const SessionStats& stats() const { return stats_; }
  // Final key; empty unless the session succeeded.
  const BitVec& key() const { return key_; }
  // Reconciled sifted key (before privacy amplification); empty unless done.
  const BitVec& sifted_key() const { return sifted_out_; }
  const SecretPool& pool() const { return pool_; }

  // Local failure (e.g. the transport dropped). No message is produced.
  void fail(AbortReason reason) {
    if (finished()) return;
    enter_abort(reason);
  }

 protected:
  explicit PartyBase(const ProtocolConfig& cfg, std::uint64_t stream)
      : cfg_(cfg), rng_(Rng::derive(cfg.seed, stream)), pool_(cfg.pool_size(), cfg.pool_seed) {
    cfg_.validate();
  }

  void enter_abort(AbortReason reason) {
    phase_ = Phase::aborted;
    stats_.abort = reason;
    key_ = BitVec();
    sifted_out_ = BitVec();
  }

  std::vector<Message> abort_with(AbortReason reason) {
    enter_abort(reason);
    return {abort_message(reason)};
  }

  void expect(bool ok, const char* what) const {
    if (!ok) throw detail::PhaseOrderError(what);
  }

  // Common error handling around a handler.
  template <typename F>
  std::vector<Message> guarded(const Message& m, F&& handler) {
    if (finished()) return {};
    if (m.tag == Tag::ABORT) {
      try {
        enter_abort(decode_abort(m.payload));
      } catch (const FramingError&) {
        enter_abort(AbortReason::framing_error);
      }
      return {};
    }
    try {
      return handler();
    } catch (const detail::PhaseOrderError&) {
      return abort_with(AbortReason::phase_order);
    } catch (const FramingError&) {
      return abort_with(AbortReason::framing_error);
    } catch (const PoolExhausted&) {
      return abort_with(AbortReason::pool_exhausted);
    }
  }

  codes::LinearCode build_code(const std::string& descriptor) const {
    try {
      const auto d = codes::CodeDescriptor::parse(descriptor);
      if (d.n != cfg_.n) throw FramingError("CODE: length differs from N");
      return codes::LinearCode::from_descriptor(d);
    } catch (const std::invalid_argument& e) {
      throw FramingError(std::string("CODE: ") + e.what());
    }
  }

  ProtocolConfig cfg_;
  Rng rng_;
  SecretPool pool_;
  Phase phase_ = Phase::prepare;
  SessionStats stats_;
  BitVec key_;
  BitVec sifted_out_;
};

class AliceMachine : public PartyBase {
 public:
  explicit AliceMachine(const ProtocolConfig& cfg) : PartyBase(cfg, kAliceStream), source_(cfg.source.build()) {
    require_compliant(source_);
    const std::size_t omega = cfg_.omega_size();
    a_ = BitVec::random(omega, rng_);
    r_mask_ = BitVec(omega);
    auto perm = rng_.permutation(omega);
    for (std::size_t i = 0; i < cfg_.r_size(); ++i) r_mask_.set(perm[i], true);
    g_ = BitVec(omega);
    for (std::size_t i = 0; i < omega; ++i) g_.set(i, source_.sample_key_bit(prepared_basis(i), rng_) != 0);
    stats_.signals = omega;
  }

  // Basis actually used for position i.
  int prepared_basis(std::size_t i) const {
    const bool flip = !r_mask_[i] && cfg_.variant == Variant::protocol1;
    return static_cast<int>(a_[i] != flip);
  }
  const BitVec& bases() const { return a_; }
  const BitVec& key_bits() const { return g_; }
  const BitVec& r_mask() const { return r_mask_; }

  // HELLO followed by one QSIGNAL per position of Omega.
  std::vector<Message> start() {
    if (phase_ != Phase::prepare) throw std::logic_error("AliceMachine::start called twice");
    std::vector<Message> out;
    out.push_back({Tag::HELLO, ByteWriter().u16(kProtocolVersion).str(cfg_.session_digest()).take()});
    for (std::uint32_t i = 0; i < a_.size(); ++i) {
      Signal s;
      s.rho = source_.emit(prepared_basis(i), g_[i]);
      out.push_back({Tag::QSIGNAL, encode_qsignal(i, s)});
    }
    phase_ = Phase::announce;
    return out;
  }

  std::vector<Message> on_message(const Message& m) {
    return guarded(m, [&] { return dispatch(m); });
  }

 private:
  struct Search {
    std::size_t pass, block, start, len;
    bool bob_parity;
  };

  std::vector<Message> dispatch(const Message& m) {
    switch (m.tag) {
      case Tag::BASES_B: return on_bases_b(m);
      case Tag::SUBSET_S: return on_subset(m);
      case Tag::TEST_BITS: return on_test_bits(m);
      case Tag::PERM: return on_perm(m);
      case Tag::CODE: return on_code(m);
      case Tag::SYNDROME_ENC: return on_syndrome(m);
      case Tag::KEY_CONFIRM: return on_confirm(m);
      default: expect(false, "unexpected tag for alice");
    }
    return {};
  }

  std::vector<Message> on_bases_b(const Message& m) {
    expect(phase_ == Phase::announce, "BASES_B out of order");
    ByteReader r(m.payload);
    detected_ = r.bits();
    b_ = r.bits();
    r.expect_done();
    if (detected_.size() != a_.size() || b_.size() != a_.size()) throw FramingError("BASES_B: wrong length");
    stats_.detected = detected_.weight();
    phase_ = Phase::sift;
    return {{Tag::BASES_A_AND_R, ByteWriter().bits(a_).bits(r_mask_).take()}};
  }

  std::vector<Message> on_subset(const Message& m) {
    expect(phase_ == Phase::sift && s_.empty(), "SUBSET_S out of order");
    ByteReader r(m.payload);
    auto s = r.indices();
    r.expect_done();
    if (s.size() != cfg_.n || !detail::is_sorted_unique(s)) throw FramingError("SUBSET_S: bad index set");
    const bool flip = cfg_.variant == Variant::protocol1;
    for (auto i : s) {
      if (i >= a_.size() || r_mask_[i] || !detected_[i] || (a_[i] != flip) != b_[i]) {
        throw FramingError("SUBSET_S: ineligible position");
      }
    }
    s_ = std::move(s);
    test_.clear();
    for (std::uint32_t i = 0; i < a_.size(); ++i) {
      if (detected_[i] && r_mask_[i] && a_[i] == b_[i]) test_.push_back(i);
    }
    stats_.key_size = s_.size();
    stats_.test_size = test_.size();
    phase_ = Phase::test;
    return {};
  }

  std::vector<Message> on_test_bits(const Message& m) {
    expect(phase_ == Phase::test, "TEST_BITS out of order");
    ByteReader r(m.payload);
    const BitVec h = r.bits();
    r.expect_done();
    if (h.size() != test_.size()) throw FramingError("TEST_BITS: wrong length");
    const ErrorEstimate e = estimate_error(g_.select(test_), h);
    stats_.errors = e.errors;
    stats_.delta = e.delta();
    const bool accept = stats_.delta <= cfg_.delta_max;
    Message decision{Tag::DELTA_DECISION, ByteWriter()
                                              .u32(static_cast<std::uint32_t>(e.errors))
                                              .u32(static_cast<std::uint32_t>(e.tested))
                                              .u8(accept ? 1 : 0)
                                              .take()};
    if (!accept) {
      enter_abort(AbortReason::delta_exceeded);
      return {decision};
    }
    phase_ = Phase::code;
    return {decision};
  }

  std::vector<Message> on_perm(const Message& m) {
    expect(phase_ == Phase::code && perm_.empty(), "PERM out of order");
    ByteReader r(m.payload);
    auto p = r.indices();
    r.expect_done();
    if (p.size() != cfg_.n || !detail::is_permutation_of_n(p)) throw FramingError("PERM: not a permutation of N");
    perm_ = std::move(p);
    return {};
  }

  std::vector<Message> on_code(const Message& m) {
    expect(phase_ == Phase::code && !perm_.empty(), "CODE out of order");
    ByteReader r(m.payload);
    const std::string desc = r.str();
    r.expect_done();
    code_.emplace(build_code(desc));
    stats_.code = desc;
    stats_.r = code_->k();
    kappa_ = BitVec(cfg_.n);
    for (std::size_t j = 0; j < cfg_.n; ++j) kappa_.set(j, g_[s_[perm_[j]]]);
    phase_ = Phase::reconcile;
    return {};
  }

  std::vector<Message> on_syndrome(const Message& m) {
    expect(phase_ == Phase::reconcile, "SYNDROME_ENC out of order");
    ByteReader r(m.payload);
    const auto kind = static_cast<SyndromeKind>(r.u8());
    if (cfg_.reconciliation == Reconciliation::hamming) {
      expect(kind == SyndromeKind::HAMMING_SYNDROME, "expected HAMMING_SYNDROME");
      const std::size_t mm = r.u8();
      const BitVec enc = r.bits();
      r.expect_done();
      if (mm != cfg_.hamming_m || enc.size() != hamming_syndromes(kappa_, mm).size()) {
        throw FramingError("HAMMING_SYNDROME: wrong shape");
      }
      hamming_reconcile(kappa_, enc, pool_, mm);
      stats_.tau = pool_.used();
      phase_ = Phase::confirm;
      return {};
    }
    if (kind == SyndromeKind::PASS_START) {
      expect(!awaiting_reply_ && passes_.size() < cfg_.cascade_passes, "PASS_START out of order");
      const std::size_t pass = r.u8();
      const std::size_t block = r.u32();
      const std::uint64_t seed = r.u64();
      const BitVec enc = r.bits();
      r.expect_done();
      if (pass != passes_.size() || block < 1 || block > cfg_.n) throw FramingError("PASS_START: bad header");
      CascadePass layout = cascade_layout(cfg_.n, block, pass, seed);
      if (enc.size() != layout.blocks(cfg_.n)) throw FramingError("PASS_START: wrong parity count");
      passes_.push_back(std::move(layout));
      bob_top_.push_back(pool_.pad(enc));
      return settle_and_request();
    }
    expect(kind == SyndromeKind::PARITY_REPLY && awaiting_reply_, "PARITY_REPLY out of order");
    const BitVec enc = r.bits();
    r.expect_done();
    if (enc.size() != searches_.size()) throw FramingError("PARITY_REPLY: wrong count");
    const BitVec left = pool_.pad(enc);
    for (std::size_t i = 0; i < searches_.size(); ++i) {
      Search& s = searches_[i];
      const std::size_t half = s.len / 2;
      const bool mine = range_parity(kappa_, passes_[s.pass].order, s.start, half);
      if (mine != left[i]) {
        s.len = half;
        s.bob_parity = left[i];
      } else {
        s.start += half;
        s.len -= half;
        s.bob_parity = s.bob_parity != left[i];
      }
    }
    awaiting_reply_ = false;
    return settle_and_request();
  }

  // Resolves finished binary searches (flipping the located bit), opens
  // searches for every top-level block whose parity disagrees, and asks for
  // the left-half parities of all open searches. An empty request ends the pass.
  std::vector<Message> settle_and_request() {
    for (;;) {
      std::erase_if(searches_, [&](const Search& s) {
        return range_parity(kappa_, passes_[s.pass].order, s.start, s.len) == s.bob_parity;
      });
      for (std::size_t q = 0; q < passes_.size(); ++q) {
        const auto& layout = passes_[q];
        for (std::size_t b = 0; b < layout.blocks(cfg_.n); ++b) {
          const std::size_t start = b * layout.block, len = std::min(layout.block, cfg_.n - start);
          if (range_parity(kappa_, layout.order, start, len) == bob_top_[q][b]) continue;
          const bool open = std::any_of(searches_.begin(), searches_.end(),
                                        [&](const Search& s) { return s.pass == q && s.block == b; });
          if (!open) searches_.push_back({q, b, start, len, bob_top_[q][b]});
        }
      }
      auto done = std::find_if(searches_.begin(), searches_.end(), [](const Search& s) { return s.len == 1; });
      if (done == searches_.end()) break;
      kappa_.flip(passes_[done->pass].order[done->start]);
      searches_.erase(done);
    }
    std::sort(searches_.begin(), searches_.end(),
              [](const Search& x, const Search& y) { return std::tie(x.pass, x.block) < std::tie(y.pass, y.block); });
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(SyndromeKind::PARITY_REQUEST)).u32(static_cast<std::uint32_t>(searches_.size()));
    for (const auto& s : searches_) {
      w.u8(static_cast<std::uint8_t>(s.pass)).u32(static_cast<std::uint32_t>(s.start)).u32(
          static_cast<std::uint32_t>(s.len / 2));
    }
    awaiting_reply_ = !searches_.empty();
    ++stats_.cascade_rounds;
    stats_.tau = pool_.used();
    if (!awaiting_reply_ && passes_.size() == cfg_.cascade_passes) phase_ = Phase::confirm;
    return {{Tag::SYNDROME_ENC, w.take()}};
  }

  std::vector<Message> on_confirm(const Message& m) {
    expect(phase_ == Phase::confirm, "KEY_CONFIRM out of order");
    ByteReader r(m.payload);
    const std::uint32_t theirs = r.u32();
    r.expect_done();
    const std::size_t before = pool_.used();
    const std::uint32_t mine = confirmation_tag(kappa_, pool_);
    stats_.confirm_bits = pool_.used() - before;
    if (mine != theirs) return abort_with(AbortReason::confirmation_mismatch);
    sifted_out_ = kappa_;
    key_ = code_->coset_key(kappa_);
    phase_ = Phase::done;
    return {{Tag::DONE, {}}};
  }

  SourceModel source_;
  BitVec a_, r_mask_, g_;
  BitVec detected_, b_;
  std::vector<std::uint32_t> s_, test_, perm_;
  std::optional<codes::LinearCode> code_;
  BitVec kappa_;
  std::vector<CascadePass> passes_;
  std::vector<BitVec> bob_top_;
  std::vector<Search> searches_;
  bool awaiting_reply_ = false;
};

class BobMachine : public PartyBase {
 public:
  explicit BobMachine(const ProtocolConfig& cfg) : PartyBase(cfg, kBobStream), detector_(cfg.efficiency) {
    const std::size_t omega = cfg_.omega_size();
    b_ = BitVec::random(omega, rng_);
    detected_ = BitVec(omega);
    h_ = BitVec(omega);
    stats_.signals = omega;
  }

  const BitVec& bases() const { return b_; }
  const BitVec& outcomes() const { return h_; }
  const BitVec& detected() const { return detected_; }

  std::vector<Message> on_message(const Message& m) {
    return guarded(m, [&] { return dispatch(m); });
  }

 private:
  std::vector<Message> dispatch(const Message& m) {
    switch (m.tag) {
      case Tag::HELLO: return on_hello(m);
      case Tag::QSIGNAL: return on_signal(m);
      case Tag::BASES_A_AND_R: return on_bases_a(m);
      case Tag::DELTA_DECISION: return on_decision(m);
      case Tag::SYNDROME_ENC: return on_request(m);
      case Tag::DONE: return on_done(m);
      default: expect(false, "unexpected tag for bob");
    }
    return {};
  }

  std::vector<Message> on_hello(const Message& m) {
    expect(phase_ == Phase::prepare, "HELLO out of order");
    ByteReader r(m.payload);
    const std::uint16_t version = r.u16();
    const std::string digest = r.str();
    r.expect_done();
    if (version != kProtocolVersion) return abort_with(AbortReason::version_mismatch);
    if (digest != cfg_.session_digest()) return abort_with(AbortReason::config_mismatch);
    phase_ = Phase::transmit;
    return {};
  }

  std::vector<Message> on_signal(const Message& m) {
    expect(phase_ == Phase::transmit, "QSIGNAL out of order");
    const auto [index, signal] = decode_qsignal(m.payload);
    if (index != next_signal_) throw FramingError("QSIGNAL: out-of-sequence index");
    ++next_signal_;
    if (auto h = detector_.detect(signal, b_[index], rng_)) {
      detected_.set(index, true);
      h_.set(index, *h != 0);
    }
    if (next_signal_ < b_.size()) return {};
    stats_.detected = detected_.weight();
    phase_ = Phase::announce;
    return {{Tag::BASES_B, ByteWriter().bits(detected_).bits(b_).take()}};
  }

  std::vector<Message> on_bases_a(const Message& m) {
    expect(phase_ == Phase::announce, "BASES_A_AND_R out of order");
    ByteReader r(m.payload);
    const BitVec a = r.bits();
    const BitVec r_mask = r.bits();
    r.expect_done();
    if (a.size() != b_.size() || r_mask.size() != b_.size() || r_mask.weight() != cfg_.r_size()) {
      throw FramingError("BASES_A_AND_R: wrong shape");
    }
    SiftResult sr = sift(a, b_, r_mask, detected_, cfg_.n, rng_, cfg_.variant == Variant::protocol1);
    stats_.test_size = sr.test.size();
    if (!sr.ok()) return abort_with(sr.abort);
    s_ = std::move(sr.key);
    stats_.key_size = s_.size();
    phase_ = Phase::test;
    return {{Tag::SUBSET_S, ByteWriter().indices(s_).take()}, {Tag::TEST_BITS, ByteWriter().bits(h_.select(sr.test)).take()}};
  }

  std::vector<Message> on_decision(const Message& m) {
    expect(phase_ == Phase::test, "DELTA_DECISION out of order");
    ByteReader r(m.payload);
    const std::size_t errors = r.u32(), tested = r.u32();
    const std::uint8_t accept = r.u8();
    r.expect_done();
    if (tested != stats_.test_size || errors > tested || accept > 1) throw FramingError("DELTA_DECISION: bad values");
    stats_.errors = errors;
    stats_.delta = tested ? static_cast<double>(errors) / static_cast<double>(tested) : 0.0;
    if (!accept) {
      enter_abort(AbortReason::delta_exceeded);
      return {};
    }
    phase_ = Phase::code;
    perm_ = rng_.permutation(cfg_.n);
    std::string desc;
    if (cfg_.code_policy == "rate") {
      const double p = std::min(stats_.delta + cfg_.epsilon, 0.5);
      const auto r_len = static_cast<std::size_t>(
          std::floor(static_cast<double>(cfg_.n) * (1.0 - bounds::binary_entropy(p)) + 1e-9));
      const std::uint64_t seed = rng_.next();
      if (r_len == 0) return abort_with(AbortReason::no_key_length);
      desc = codes::CodeDescriptor{codes::Family::random, static_cast<std::uint32_t>(cfg_.n),
                                   static_cast<std::uint32_t>(r_len), seed}
                 .to_string();
    } else {
      desc = cfg_.code_policy;
    }
    code_.emplace(build_code(desc));
    stats_.code = desc;
    stats_.r = code_->k();
    kappa_ = BitVec(cfg_.n);
    for (std::size_t j = 0; j < cfg_.n; ++j) kappa_.set(j, h_[s_[perm_[j]]]);

    std::vector<Message> out{{Tag::PERM, ByteWriter().indices(perm_).take()},
                             {Tag::CODE, ByteWriter().str(desc).take()}};
    phase_ = Phase::reconcile;
    if (cfg_.reconciliation == Reconciliation::hamming) {
      const BitVec enc = hamming_announce(kappa_, pool_, cfg_.hamming_m);
      stats_.tau = pool_.used();
      out.push_back({Tag::SYNDROME_ENC, ByteWriter()
                                            .u8(static_cast<std::uint8_t>(SyndromeKind::HAMMING_SYNDROME))
                                            .u8(static_cast<std::uint8_t>(cfg_.hamming_m))
                                            .bits(enc)
                                            .take()});
      out.push_back(confirm());
      return out;
    }
    k1_ = cascade_first_block(cfg_.n, stats_.delta);
    out.push_back(start_pass());
    return out;
  }

  Message start_pass() {
    const std::size_t pass = passes_.size();
    const std::size_t block = cascade_block(cfg_.n, k1_, pass);
    const std::uint64_t seed = pass == 0 ? 0 : rng_.next();
    passes_.push_back(cascade_layout(cfg_.n, block, pass, seed));
    const auto& layout = passes_.back();
    BitVec parities(layout.blocks(cfg_.n));
    for (std::size_t b = 0; b < parities.size(); ++b) {
      const std::size_t start = b * block;
      parities.set(b, range_parity(kappa_, layout.order, start, std::min(block, cfg_.n - start)));
    }
    const BitVec enc = pool_.pad(parities);
    stats_.tau = pool_.used();
    return {Tag::SYNDROME_ENC, ByteWriter()
                                   .u8(static_cast<std::uint8_t>(SyndromeKind::PASS_START))
                                   .u8(static_cast<std::uint8_t>(pass))
                                   .u32(static_cast<std::uint32_t>(block))
                                   .u64(seed)
                                   .bits(enc)
                                   .take()};
  }

  Message confirm() {
    const std::size_t before = pool_.used();
    const std::uint32_t tag = confirmation_tag(kappa_, pool_);
    stats_.confirm_bits = pool_.used() - before;
    phase_ = Phase::confirm;
    return {Tag::KEY_CONFIRM, ByteWriter().u32(tag).take()};
  }

  std::vector<Message> on_request(const Message& m) {
    expect(phase_ == Phase::reconcile && cfg_.reconciliation == Reconciliation::cascade, "SYNDROME_ENC out of order");
    ByteReader r(m.payload);
    expect(static_cast<SyndromeKind>(r.u8()) == SyndromeKind::PARITY_REQUEST, "expected PARITY_REQUEST");
    const std::size_t count = r.u32();
    if (count > cfg_.n) throw FramingError("PARITY_REQUEST: too many entries");
    BitVec parities(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t pass = r.u8(), start = r.u32(), len = r.u32();
      if (pass >= passes_.size() || len == 0 || start + len > cfg_.n) throw FramingError("PARITY_REQUEST: bad range");
      parities.set(i, range_parity(kappa_, passes_[pass].order, start, len));
    }
    r.expect_done();
    ++stats_.cascade_rounds;
    if (count == 0) {
      if (passes_.size() < cfg_.cascade_passes) return {start_pass()};
      return {confirm()};
    }
    const BitVec enc = pool_.pad(parities);
    stats_.tau = pool_.used();
    return {{Tag::SYNDROME_ENC,
             ByteWriter().u8(static_cast<std::uint8_t>(SyndromeKind::PARITY_REPLY)).bits(enc).take()}};
  }

  std::vector<Message> on_done(const Message& m) {
    expect(phase_ == Phase::confirm && m.payload.empty(), "DONE out of order");
    sifted_out_ = kappa_;
    key_ = code_->coset_key(kappa_);
    phase_ = Phase::done;
    return {};
  }

  DetectorModel detector_;
  BitVec b_, detected_, h_;
  std::uint32_t next_signal_ = 0;
  std::vector<std::uint32_t> s_, perm_;
  std::optional<codes::LinearCode> code_;
  BitVec kappa_;
  std::size_t k1_ = 1;
  std::vector<CascadePass> passes_;
};

}  // namespace bb84lab::protocol

#endif  // BB84LAB_PROTOCOL_SESSION_HPP_

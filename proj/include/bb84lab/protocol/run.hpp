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

// In-process driver: both parties plus the channel in one queue loop.

#ifndef BB84LAB_PROTOCOL_RUN_HPP_
#define BB84LAB_PROTOCOL_RUN_HPP_

#include <deque>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bb84lab/protocol/config.hpp"
#include "bb84lab/protocol/session.hpp"
#include "bb84lab/qsim/state.hpp"

namespace bb84lab::protocol {

struct RunResult {
  BitVec alice_key;
  BitVec bob_key;
  Transcript transcript;
  SessionStats stats;  // Alice's view
  std::vector<EveRecord> eve_log;
  AbortReason abort = AbortReason::none;

  bool ok() const { return abort == AbortReason::none; }
};

// Applies the channel to a QSIGNAL in flight.
inline Message apply_channel(const ChannelModel& channel, const Message& m, Rng& eve, std::vector<EveRecord>* log) {
  auto [index, signal] = decode_qsignal(m.payload);
  return {Tag::QSIGNAL, encode_qsignal(index, channel.apply(index, signal, eve, log))};
}

inline RunResult run_protocol(const ProtocolConfig& cfg, bool keep_eve_log = false) {
  AliceMachine alice(cfg);
  BobMachine bob(cfg);
  const ChannelModel channel = cfg.channel.build();
  Rng eve(Rng::derive(cfg.seed, kEveStream));
  RunResult out;

  std::deque<std::pair<Party, Message>> queue;
  for (auto& m : alice.start()) queue.emplace_back(Party::alice, std::move(m));
  while (!queue.empty()) {
    auto [from, m] = std::move(queue.front());
    queue.pop_front();
    out.transcript.record(from, m);
    std::vector<Message> replies;
    if (from == Party::alice) {
      if (m.tag == Tag::QSIGNAL) m = apply_channel(channel, m, eve, keep_eve_log ? &out.eve_log : nullptr);
      replies = bob.on_message(m);
    } else {
      replies = alice.on_message(m);
    }
    const Party to = from == Party::alice ? Party::bob : Party::alice;
    for (auto& r : replies) queue.emplace_back(to, std::move(r));
  }
  if (!alice.finished() || !bob.finished()) throw std::logic_error("run_protocol: session stalled");

  out.stats = alice.stats();
  out.stats.cascade_rounds = std::max(out.stats.cascade_rounds, bob.stats().cascade_rounds);
  if (alice.succeeded() && bob.succeeded()) {
    out.alice_key = alice.key();
    out.bob_key = bob.key();
  } else {
    out.abort = alice.aborted() ? alice.reason() : bob.reason();
    if (out.abort == AbortReason::none) out.abort = AbortReason::phase_order;
    out.stats.abort = out.abort;
  }
  return out;
}

// ---- classical variant ----------------------------------------------------

struct Protocol3Result {
  std::size_t test_size = 0;
  std::size_t key_size = 0;
  double delta = 0.0;
  BitVec key;  // Bob's outcomes on S
  AbortReason abort = AbortReason::none;
  bool ok() const { return abort == AbortReason::none; }
};

// Eve prepares every qubit (|0> passed through the configured channel) and
// Bob alone measures. T = {i in R | b_i = 0} with delta the fraction of ones;
// S is an N-subset of {i not in R | b_i = 1}.
inline Protocol3Result run_protocol3(const ProtocolConfig& cfg) {
  cfg.validate();
  Rng alice(Rng::derive(cfg.seed, kAliceStream)), bob(Rng::derive(cfg.seed, kBobStream)),
      eve(Rng::derive(cfg.seed, kEveStream));
  const std::size_t omega = cfg.omega_size();
  BitVec r_mask(omega);
  const auto perm = alice.permutation(omega);
  for (std::size_t i = 0; i < cfg.r_size(); ++i) r_mask.set(perm[i], true);
  const BitVec b = BitVec::random(omega, bob);
  const ChannelModel channel = cfg.channel.build();
  const DetectorModel detector(cfg.efficiency);
  BitVec detected(omega), h(omega);
  Signal zero;
  zero.rho = CMatrix::Zero(2, 2);
  zero.rho(0, 0) = 1.0;
  for (std::uint32_t i = 0; i < omega; ++i) {
    if (auto o = detector.detect(channel.apply(i, zero, eve), b[i], bob)) {
      detected.set(i, true);
      h.set(i, *o != 0);
    }
  }
  // a = 0 everywhere with the unflipped rule selects T on b = 0 and the
  // complement candidates on b = 0 too; use a_i = 1 outside R instead.
  BitVec a(omega);
  for (std::size_t i = 0; i < omega; ++i) a.set(i, !r_mask[i]);
  SiftResult sr = sift(a, b, r_mask, detected, cfg.n, bob, /*flip=*/false);
  Protocol3Result out;
  out.test_size = sr.test.size();
  if (!sr.ok()) {
    out.abort = sr.abort;
    return out;
  }
  const ErrorEstimate e = estimate_error_ones(h.select(sr.test));
  out.delta = e.delta();
  if (out.delta > cfg.delta_max) {
    out.abort = AbortReason::delta_exceeded;
    return out;
  }
  out.key_size = sr.key.size();
  out.key = h.select(sr.key);
  return out;
}

// Trace distance between what Protocol 1 (opposite basis on the complement
// of R) and the basis-flipped variant send there, for announced basis value
// `announced`, averaged over the key bit. Zero for compliant sources.
inline double variant_state_distance(const SourceModel& source, int announced) {
  return qsim::trace_distance(source.basis_average(1 - announced), source.basis_average(announced));
}

}  // namespace bb84lab::protocol

#endif  // BB84LAB_PROTOCOL_RUN_HPP_

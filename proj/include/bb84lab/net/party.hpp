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

// Networked parties and the man-in-the-middle proxy.

#ifndef BB84LAB_NET_PARTY_HPP_
#define BB84LAB_NET_PARTY_HPP_

#include <sys/socket.h>

#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bb84lab/net/wire.hpp"
#include "bb84lab/protocol/config.hpp"
#include "bb84lab/protocol/run.hpp"
#include "bb84lab/protocol/session.hpp"

namespace bb84lab::net {

using protocol::AbortReason;
using protocol::Party;

struct PartyOutcome {
  Party role = Party::alice;
  bool succeeded = false;
  AbortReason reason = AbortReason::none;
  protocol::BitVec key;
  protocol::Transcript transcript;
  protocol::SessionStats stats;
};

struct ServeOptions {
  // Alice applies the configured channel to her QSIGNALs before sending, with
  // Eve's stream, exactly as the in-process driver does. Turn off when a
  // proxy carries the channel.
  bool apply_channel = true;
};

namespace detail {

template <typename Machine>
PartyOutcome drive(Machine& machine, Party role, const protocol::ProtocolConfig& cfg, Socket& sock,
                   std::vector<Message> initial, const ServeOptions& opt) {
  PartyOutcome out;
  out.role = role;
  const Party peer = role == Party::alice ? Party::bob : Party::alice;
  const protocol::ChannelModel channel = cfg.channel.build();
  Rng eve(Rng::derive(cfg.seed, protocol::kEveStream));
  const bool transform = role == Party::alice && opt.apply_channel;

  auto send = [&](const Message& m) {
    out.transcript.record(role, m);
    if (transform && m.tag == Tag::QSIGNAL) {
      sock.send_message(protocol::apply_channel(channel, m, eve, nullptr));
    } else {
      sock.send_message(m);
    }
  };

  try {
    for (const auto& m : initial) send(m);
    while (!machine.finished()) {
      std::optional<Message> in;
      try {
        in = sock.read_message();
      } catch (const FramingError&) {
        machine.fail(AbortReason::framing_error);
        send(protocol::abort_message(AbortReason::framing_error));
        break;
      }
      if (!in) {
        machine.fail(AbortReason::transport_failure);
        break;
      }
      out.transcript.record(peer, *in);
      for (const auto& r : machine.on_message(*in)) send(r);
    }
  } catch (const TransportError&) {
    machine.fail(AbortReason::transport_failure);
  }
  sock.shutdown_write();
  sock.drain();

  out.succeeded = machine.succeeded();
  out.reason = machine.reason();
  out.key = machine.key();
  out.stats = machine.stats();
  return out;
}

}  // namespace detail

// Runs one party's half of a session over a connected socket.
inline PartyOutcome serve_party(Party role, const protocol::ProtocolConfig& cfg, Socket& sock,
                                const ServeOptions& opt = {}) {
  if (role == Party::alice) {
    protocol::AliceMachine alice(cfg);
    auto initial = alice.start();
    return detail::drive(alice, role, cfg, sock, std::move(initial), opt);
  }
  protocol::BobMachine bob(cfg);
  return detail::drive(bob, role, cfg, sock, {}, opt);
}

// ---- Eve proxy ---------------------------------------------------------------

struct EvePolicy {
  enum class Kind { passive, intercept_resend, depolarize };
  Kind kind = Kind::passive;
  double p = 0.0;

  // "passive", "intercept_resend", "depolarize:<p>" or "depolarize(<p>)".
  static EvePolicy parse(const std::string& text) {
    EvePolicy e;
    if (text == "passive") return e;
    if (text == "intercept_resend") {
      e.kind = Kind::intercept_resend;
      return e;
    }
    for (const std::string prefix : {"depolarize:", "depolarize("}) {
      if (text.rfind(prefix, 0) != 0) continue;
      std::string num = text.substr(prefix.size());
      if (prefix.back() == '(') {
        if (num.empty() || num.back() != ')') break;
        num.pop_back();
      }
      try {
        std::size_t used = 0;
        e.p = std::stod(num, &used);
        if (used != num.size() || e.p < 0.0 || e.p > 1.0) break;
      } catch (const std::exception&) {
        break;
      }
      e.kind = Kind::depolarize;
      return e;
    }
    throw std::invalid_argument("unknown Eve policy '" + text + "'");
  }

  protocol::ChannelModel channel() const {
    switch (kind) {
      case Kind::passive: return protocol::ChannelModel::identity();
      case Kind::intercept_resend: return protocol::ChannelModel::intercept_resend();
      case Kind::depolarize: return protocol::ChannelModel::depolarizing(p);
    }
    return protocol::ChannelModel::identity();
  }
};

struct ProxyCapture {
  std::vector<Bytes> alice_to_bob;  // frames as forwarded
  std::vector<Bytes> bob_to_alice;
  std::vector<protocol::EveRecord> log;
  bool transport_error = false;
};

// Accepts Alice on `listener`, connects to Bob at `upstream`, and forwards
// frames in both directions, transforming each QSIGNAL with the policy. The
// Eve stream is derived from `seed` as in the in-process driver.
inline ProxyCapture eve_proxy(const EvePolicy& policy, Listener& listener, const Endpoint& upstream,
                              std::uint64_t seed, bool capture = true) {
  Socket alice = listener.accept();
  Socket bob = connect_to(upstream);
  const protocol::ChannelModel channel = policy.channel();
  Rng eve(Rng::derive(seed, protocol::kEveStream));
  ProxyCapture out;
  std::mutex mu;

  auto pump = [&](Socket& from, Socket& to, bool forward, std::vector<Bytes>& sink) {
    try {
      while (auto frame = from.read_frame()) {
        if (forward && (*frame)[0] == static_cast<std::uint8_t>(Tag::QSIGNAL)) {
          const Message m = decode_frame(*frame);
          *frame = encode_frame(protocol::apply_channel(channel, m, eve, &out.log));
        }
        to.write_all(frame->data(), frame->size());
        if (capture) {
          std::lock_guard<std::mutex> lock(mu);
          sink.push_back(std::move(*frame));
        }
      }
      to.shutdown_write();
    } catch (const std::exception&) {
      std::lock_guard<std::mutex> lock(mu);
      out.transport_error = true;
      ::shutdown(from.fd(), SHUT_RDWR);
      ::shutdown(to.fd(), SHUT_RDWR);
    }
  };

  std::thread upstream_thread([&] { pump(alice, bob, true, out.alice_to_bob); });
  pump(bob, alice, false, out.bob_to_alice);
  upstream_thread.join();
  return out;
}

}  // namespace bb84lab::net

#endif  // BB84LAB_NET_PARTY_HPP_

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

#include <gtest/gtest.h>

#include <algorithm>
#include <future>

#include "bb84lab/net/party.hpp"
#include "bb84lab/net/wire.hpp"
#include "bb84lab/protocol/run.hpp"

namespace bb84lab::net {
namespace {

using protocol::ProtocolConfig;

ProtocolConfig config(std::size_t n, std::uint64_t seed) {
  ProtocolConfig c;
  c.n = n;
  c.epsilon = 0.2;
  c.seed = seed;
  return c;
}

struct Pair {
  PartyOutcome alice, bob;
};

// Bob listens on an ephemeral loopback port; Alice connects.
Pair run_loopback(const ProtocolConfig& ca, const ProtocolConfig& cb, ServeOptions alice_opt = {}) {
  Listener listener(Endpoint{"127.0.0.1", 0});
  auto bob = std::async(std::launch::async, [&] {
    Socket s = listener.accept();
    return serve_party(Party::bob, cb, s);
  });
  Socket s = connect_to(listener.endpoint());
  PartyOutcome a = serve_party(Party::alice, ca, s, alice_opt);
  return {std::move(a), bob.get()};
}

struct ProxiedRun {
  PartyOutcome alice, bob;
  ProxyCapture capture;
};

ProxiedRun run_through_proxy(const ProtocolConfig& cfg, const EvePolicy& policy) {
  Listener bob_listener(Endpoint{"127.0.0.1", 0});
  Listener eve_listener(Endpoint{"127.0.0.1", 0});
  auto bob = std::async(std::launch::async, [&] {
    Socket s = bob_listener.accept();
    return serve_party(Party::bob, cfg, s);
  });
  auto eve = std::async(std::launch::async,
                        [&] { return eve_proxy(policy, eve_listener, bob_listener.endpoint(), cfg.seed); });
  Socket s = connect_to(eve_listener.endpoint());
  ServeOptions opt;
  opt.apply_channel = false;
  PartyOutcome a = serve_party(Party::alice, cfg, s, opt);
  return {std::move(a), bob.get(), eve.get()};
}

TEST(FrameTest, RoundTripOnRandomPayloads) {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const auto tag = static_cast<Tag>(1 + rng.below(13));
    Bytes payload(rng.below(300));
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng.below(256));
    const Message m{tag, payload};
    const Bytes f = encode_frame(m);
    ASSERT_EQ(f.size(), kFrameHeader + payload.size());
    EXPECT_EQ(decode_frame(f), m);
  }
}

TEST(FrameTest, HeaderIsTagThenBigEndianLength) {
  const Bytes f = encode_frame({Tag::CODE, Bytes(258, 0xaa)});
  EXPECT_EQ(f[0], 9);
  EXPECT_EQ(f[1], 0);
  EXPECT_EQ(f[2], 0);
  EXPECT_EQ(f[3], 1);
  EXPECT_EQ(f[4], 2);
}

TEST(FrameTest, RejectsMalformedFrames) {
  EXPECT_THROW(decode_frame({0, 0, 0, 0, 0}), FramingError);
  EXPECT_THROW(decode_frame({14, 0, 0, 0, 0}), FramingError);
  EXPECT_THROW(decode_frame({1, 0, 0, 0, 2, 7}), FramingError);
  EXPECT_THROW(decode_frame({1, 0, 0}), FramingError);
  EXPECT_EQ(decode_frame({13, 0, 0, 0, 0}).tag, Tag::DONE);
}

TEST(EndpointTest, Parse) {
  EXPECT_EQ(Endpoint::parse("localhost:9000").host, "localhost");
  EXPECT_EQ(Endpoint::parse(":9000").port, 9000);
  EXPECT_EQ(Endpoint::parse("9001").port, 9001);
  EXPECT_THROW(Endpoint::parse("host:99999"), std::invalid_argument);
  EXPECT_THROW(Endpoint::parse("host:x"), std::invalid_argument);
}

TEST(EvePolicyTest, Parse) {
  EXPECT_EQ(EvePolicy::parse("passive").kind, EvePolicy::Kind::passive);
  EXPECT_EQ(EvePolicy::parse("intercept_resend").kind, EvePolicy::Kind::intercept_resend);
  EXPECT_EQ(EvePolicy::parse("depolarize:0.1").p, 0.1);
  EXPECT_EQ(EvePolicy::parse("depolarize(0.25)").p, 0.25);
  EXPECT_THROW(EvePolicy::parse("depolarize(2)"), std::invalid_argument);
  EXPECT_THROW(EvePolicy::parse("loud"), std::invalid_argument);
}

TEST(LoopbackTest, NoiselessRunSucceeds) {
  const auto cfg = config(64, 1);
  const Pair p = run_loopback(cfg, cfg);
  ASSERT_TRUE(p.alice.succeeded) << protocol::abort_reason_name(p.alice.reason);
  ASSERT_TRUE(p.bob.succeeded);
  EXPECT_EQ(p.alice.key, p.bob.key);
  EXPECT_EQ(p.alice.transcript, p.bob.transcript);
}

TEST(LoopbackTest, TranscriptMatchesInProcessRun) {
  auto cfg = config(256, 9);
  cfg.channel.kind = "depolarizing";
  cfg.channel.p = 0.08;
  const auto local = protocol::run_protocol(cfg);
  const Pair p = run_loopback(cfg, cfg);
  EXPECT_EQ(p.alice.transcript.serialize(), local.transcript.serialize());
  EXPECT_EQ(p.bob.transcript.serialize(), local.transcript.serialize());
  EXPECT_EQ(p.alice.key, local.alice_key);
  EXPECT_EQ(p.bob.key, local.bob_key);
}

TEST(LoopbackTest, ConfigMismatchAbortsBothSides) {
  auto ca = config(32, 1), cb = config(32, 1);
  cb.epsilon = 0.3;
  const Pair p = run_loopback(ca, cb);
  EXPECT_EQ(p.bob.reason, AbortReason::config_mismatch);
  EXPECT_EQ(p.alice.reason, AbortReason::config_mismatch);
}

TEST(LoopbackTest, PeerVanishingMidRunIsTransportFailure) {
  const auto cfg = config(32, 2);
  Listener listener(Endpoint{"127.0.0.1", 0});
  auto bob = std::async(std::launch::async, [&] {
    Socket s = listener.accept();
    return serve_party(Party::bob, cfg, s);
  });
  {
    Socket s = connect_to(listener.endpoint());
    protocol::AliceMachine alice(cfg);
    const auto msgs = alice.start();
    for (std::size_t i = 0; i < 10; ++i) s.send_message(msgs[i]);
  }  // closed without finishing
  const PartyOutcome b = bob.get();
  EXPECT_FALSE(b.succeeded);
  EXPECT_EQ(b.reason, AbortReason::transport_failure);
  EXPECT_TRUE(b.key.empty());
}

TEST(LoopbackTest, UnknownTagIsFramingError) {
  const auto cfg = config(32, 2);
  Listener listener(Endpoint{"127.0.0.1", 0});
  auto bob = std::async(std::launch::async, [&] {
    Socket s = listener.accept();
    return serve_party(Party::bob, cfg, s);
  });
  Socket s = connect_to(listener.endpoint());
  const Bytes junk{0x7f, 0, 0, 0, 0};
  s.write_all(junk.data(), junk.size());
  auto reply = s.read_message();
  s.shutdown_write();
  EXPECT_EQ(bob.get().reason, AbortReason::framing_error);
  ASSERT_TRUE(reply.has_value());
  EXPECT_EQ(reply->tag, Tag::ABORT);
  EXPECT_EQ(protocol::decode_abort(reply->payload), AbortReason::framing_error);
}

TEST(LoopbackTest, VersionMismatchAborts) {
  const auto cfg = config(32, 2);
  Listener listener(Endpoint{"127.0.0.1", 0});
  auto bob = std::async(std::launch::async, [&] {
    Socket s = listener.accept();
    return serve_party(Party::bob, cfg, s);
  });
  Socket s = connect_to(listener.endpoint());
  s.send_message({Tag::HELLO, protocol::ByteWriter().u16(99).str(cfg.session_digest()).take()});
  s.shutdown_write();
  EXPECT_EQ(bob.get().reason, AbortReason::version_mismatch);
}

TEST(ProxyTest, PassiveProxyIsTransparent) {
  const auto cfg = config(128, 4);
  const Pair direct = run_loopback(cfg, cfg);
  const auto proxied = run_through_proxy(cfg, EvePolicy::parse("passive"));
  EXPECT_EQ(proxied.alice.transcript, direct.alice.transcript);
  EXPECT_EQ(proxied.bob.key, direct.bob.key);
  EXPECT_FALSE(proxied.capture.transport_error);
}

TEST(ProxyTest, PolicyMatchesInProcessChannel) {
  auto cfg = config(256, 6);
  const auto proxied = run_through_proxy(cfg, EvePolicy::parse("depolarize:0.1"));
  cfg.channel.kind = "depolarizing";
  cfg.channel.p = 0.1;
  const auto local = protocol::run_protocol(cfg);
  EXPECT_EQ(proxied.alice.transcript.serialize(), local.transcript.serialize());
  EXPECT_EQ(proxied.alice.key, local.alice_key);
}

TEST(ProxyTest, InterceptResendAborts) {
  auto cfg = config(2048, 3);
  cfg.epsilon = 0.1;
  cfg.delta_max = 0.15;
  const auto proxied = run_through_proxy(cfg, EvePolicy::parse("intercept_resend"));
  EXPECT_EQ(proxied.alice.reason, AbortReason::delta_exceeded);
  EXPECT_EQ(proxied.bob.reason, AbortReason::delta_exceeded);
  EXPECT_NEAR(proxied.alice.stats.delta, 0.25, 0.03);
  EXPECT_EQ(proxied.capture.log.size(), cfg.omega_size());
}

// True if any `window`-byte run of `needle` occurs in `hay`.
bool shares_window(const Bytes& hay, const Bytes& needle, std::size_t window) {
  if (hay.size() < window) return false;
  for (std::size_t i = 0; i + window <= needle.size(); ++i) {
    if (std::search(hay.begin(), hay.end(), needle.begin() + static_cast<std::ptrdiff_t>(i),
                    needle.begin() + static_cast<std::ptrdiff_t>(i + window)) != hay.end()) {
      return true;
    }
  }
  return false;
}

TEST(ProxyTest, PoolBytesNeverAppearOnTheWire) {
  auto cfg = config(256, 5);
  cfg.channel.kind = "identity";
  const auto proxied = run_through_proxy(cfg, EvePolicy::parse("depolarize:0.06"));
  ASSERT_TRUE(proxied.alice.succeeded) << protocol::abort_reason_name(proxied.alice.reason);
  Bytes wire;
  for (const auto* dir : {&proxied.capture.alice_to_bob, &proxied.capture.bob_to_alice}) {
    for (const auto& f : *dir) wire.insert(wire.end(), f.begin(), f.end());
  }
  const Bytes pool = protocol::SecretPool(cfg.pool_size(), cfg.pool_seed).contents().to_bytes();
  EXPECT_FALSE(shares_window(wire, pool, 8));
  // Positive control: plaintext pool material would be found.
  Bytes leaked = wire;
  leaked.insert(leaked.begin() + 100, pool.begin() + 40, pool.begin() + 48);
  EXPECT_TRUE(shares_window(leaked, pool, 8));
}

}  // namespace
}  // namespace bb84lab::net

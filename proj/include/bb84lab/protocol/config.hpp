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

// Run configuration and its key = value text format.

#ifndef BB84LAB_PROTOCOL_CONFIG_HPP_
#define BB84LAB_PROTOCOL_CONFIG_HPP_

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bb84lab/codes.hpp"
#include "bb84lab/protocol/models.hpp"

namespace bb84lab::protocol {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class Variant { protocol1, protocol2 };
enum class Reconciliation { cascade, hamming };

struct SourceSpec {
  std::string kind = "perfect";
  double bias = 0.0;
  double visibility = 1.0;
  double m1_angle = std::numbers::pi / 2;
  double theta = 0.0;
  double leak = 0.5;

  SourceModel build() const {
    if (kind == "perfect") return SourceModel::perfect(bias);
    if (kind == "entangled") return SourceModel::entangled(visibility, m1_angle);
    if (kind == "rotated_z") return SourceModel::rotated_z(theta);
    if (kind == "leaky_two_copy") return SourceModel::leaky_two_copy(leak);
    throw ConfigError(0, "unknown source kind: " + kind);
  }
};

struct ChannelSpec {
  std::string kind = "identity";
  double p = 0.0;
  std::string basis = "random";
  std::string unitary = "identity";

  ChannelModel build() const {
    if (kind == "identity") return ChannelModel::identity();
    if (kind == "depolarizing") return ChannelModel::depolarizing(p);
    if (kind == "loss") return ChannelModel::loss(p);
    if (kind == "unitary") return ChannelModel::unitary(qsim::Attack::parse(unitary));
    if (kind == "intercept_resend") {
      if (basis == "random") return ChannelModel::intercept_resend(EveBasisPolicy::random);
      if (basis == "z") return ChannelModel::intercept_resend(EveBasisPolicy::z);
      if (basis == "x") return ChannelModel::intercept_resend(EveBasisPolicy::x);
      throw ConfigError(0, "unknown intercept basis policy: " + basis);
    }
    throw ConfigError(0, "unknown channel kind: " + kind);
  }
};

struct ProtocolConfig {
  std::size_t n = 256;
  double epsilon = 0.05;
  double delta_max = 0.109;
  SourceSpec source;
  ChannelSpec channel;
  double efficiency = 1.0;
  Variant variant = Variant::protocol1;
  Reconciliation reconciliation = Reconciliation::cascade;
  std::size_t cascade_passes = 6;
  std::size_t hamming_m = 3;
  std::string code_policy = "rate";  // "rate" or a code descriptor family/n/k/seed
  std::size_t pool_bits = 0;         // 0 means 2N + 96
  std::uint64_t pool_seed = 0x5eed;
  std::uint64_t seed = 1;

  // |R| = ceil(2N(1 + eps) / eff^2); |Omega| = 2|R|.
  std::size_t r_size() const {
    return static_cast<std::size_t>(
        std::ceil(2.0 * static_cast<double>(n) * (1.0 + epsilon) / (efficiency * efficiency) - 1e-9));
  }
  std::size_t omega_size() const { return 2 * r_size(); }
  std::size_t pool_size() const { return pool_bits ? pool_bits : 2 * n + 96; }

  void validate() const {
    if (n < 1) throw ConfigError(0, "N must be >= 1");
    if (!(epsilon > 0.0)) throw ConfigError(0, "epsilon must be > 0");
    if (delta_max < 0.0 || delta_max > 1.0) throw ConfigError(0, "delta_max outside [0, 1]");
    if (efficiency <= 0.0 || efficiency > 1.0) throw ConfigError(0, "detector efficiency outside (0, 1]");
    if (cascade_passes < 1 || cascade_passes > 32) throw ConfigError(0, "cascade passes outside [1, 32]");
    if (hamming_m < 2 || hamming_m > 10) throw ConfigError(0, "hamming m outside [2, 10]");
    if (omega_size() > (std::size_t{1} << 24)) throw ConfigError(0, "Omega too large");
    if (code_policy != "rate") {
      try {
        const auto d = codes::CodeDescriptor::parse(code_policy);
        if (d.n != n) throw ConfigError(0, "code descriptor length differs from N");
      } catch (const std::invalid_argument& e) {
        throw ConfigError(0, std::string("bad code policy: ") + e.what());
      }
    }
    try {
      source.build();
      channel.build();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(0, e.what());
    }
  }

  // Canonical text; two parties agree on a session iff these match.
  std::string canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "N = " << n << '\n'
       << "epsilon = " << epsilon << '\n'
       << "delta_max = " << delta_max << '\n'
       << "source = " << source.kind << '\n'
       << "source.bias = " << source.bias << '\n'
       << "source.visibility = " << source.visibility << '\n'
       << "source.m1_angle = " << source.m1_angle << '\n'
       << "source.theta = " << source.theta << '\n'
       << "source.leak = " << source.leak << '\n'
       << "channel = " << channel.kind << '\n'
       << "channel.p = " << channel.p << '\n'
       << "channel.basis = " << channel.basis << '\n'
       << "channel.unitary = " << channel.unitary << '\n'
       << "detector.efficiency = " << efficiency << '\n'
       << "variant = " << (variant == Variant::protocol1 ? "protocol1" : "protocol2") << '\n'
       << "reconciliation = " << (reconciliation == Reconciliation::cascade ? "cascade" : "hamming") << '\n'
       << "reconciliation.passes = " << cascade_passes << '\n'
       << "reconciliation.hamming_m = " << hamming_m << '\n'
       << "code = " << code_policy << '\n'
       << "pool_bits = " << pool_size() << '\n'
       << "pool_seed = " << pool_seed << '\n';
    return os.str();
  }

  // Session parameters only: the channel and master seed are excluded
  // because a networked run may place the channel in a separate process.
  std::string session_digest() const {
    std::string c = canonical();
    std::string out;
    std::istringstream is(c);
    std::string line;
    while (std::getline(is, line)) {
      if (line.rfind("channel", 0) == 0) continue;
      out += line + '\n';
    }
    return out;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v, std::size_t line, const std::string& key) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(line, "bad value for " + key + ": '" + v + "'");
  return out;
}

}  // namespace detail

// Applies one "key = value" setting; `line` is used for diagnostics.
inline void apply_setting(ProtocolConfig& c, const std::string& key, const std::string& value, std::size_t line) {
  using detail::parse_number;
  if (key == "N") c.n = parse_number<std::size_t>(value, line, key);
  else if (key == "epsilon") c.epsilon = parse_number<double>(value, line, key);
  else if (key == "delta_max") c.delta_max = parse_number<double>(value, line, key);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, line, key);
  else if (key == "source") c.source.kind = value;
  else if (key == "source.bias") c.source.bias = parse_number<double>(value, line, key);
  else if (key == "source.visibility") c.source.visibility = parse_number<double>(value, line, key);
  else if (key == "source.m1_angle") c.source.m1_angle = parse_number<double>(value, line, key);
  else if (key == "source.theta") c.source.theta = parse_number<double>(value, line, key);
  else if (key == "source.leak") c.source.leak = parse_number<double>(value, line, key);
  else if (key == "channel") c.channel.kind = value;
  else if (key == "channel.p") c.channel.p = parse_number<double>(value, line, key);
  else if (key == "channel.basis") c.channel.basis = value;
  else if (key == "channel.unitary") c.channel.unitary = value;
  else if (key == "detector.efficiency") c.efficiency = parse_number<double>(value, line, key);
  else if (key == "variant") {
    if (value == "protocol1") c.variant = Variant::protocol1;
    else if (value == "protocol2") c.variant = Variant::protocol2;
    else throw ConfigError(line, "variant must be protocol1 or protocol2");
  } else if (key == "reconciliation") {
    if (value == "cascade") c.reconciliation = Reconciliation::cascade;
    else if (value == "hamming") c.reconciliation = Reconciliation::hamming;
    else throw ConfigError(line, "reconciliation must be cascade or hamming");
  } else if (key == "reconciliation.passes") c.cascade_passes = parse_number<std::size_t>(value, line, key);
  else if (key == "reconciliation.hamming_m") c.hamming_m = parse_number<std::size_t>(value, line, key);
  else if (key == "code") c.code_policy = value;
  else if (key == "pool_bits") c.pool_bits = parse_number<std::size_t>(value, line, key);
  else if (key == "pool_seed") c.pool_seed = parse_number<std::uint64_t>(value, line, key);
  else throw ConfigError(line, "unknown key '" + key + "'");
}

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Parses "key = value" lines; '#' starts a comment. Unknown keys, duplicate
// keys and malformed values are errors reported with their line number.
// Overrides replace (or add) settings after the file is read; their
// diagnostics carry line 0.
inline ProtocolConfig parse_config(std::istream& in, const Overrides& overrides = {}) {
  ProtocolConfig c;
  std::map<std::string, std::size_t> seen;
  std::string raw;
  std::size_t line = 0;
  auto check_models = [&](const std::string& key, std::size_t at) {
    try {
      if (key.rfind("source", 0) == 0) c.source.build();
      if (key.rfind("channel", 0) == 0) c.channel.build();
    } catch (const ConfigError& e) {
      throw ConfigError(at, e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(at, e.what());
    }
  };
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = detail::trim(text.substr(0, eq)), value = detail::trim(text.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(line, "empty key or value");
    if (seen.count(key)) throw ConfigError(line, "duplicate key '" + key + "' (first on line " + std::to_string(seen[key]) + ")");
    seen[key] = line;
    apply_setting(c, key, value, line);
    check_models(key, line);
  }
  for (const auto& [key, value] : overrides) {
    try {
      apply_setting(c, key, value, 0);
      check_models(key, 0);
    } catch (const ConfigError& e) {
      throw ConfigError(0, std::string("override: ") + e.what());
    }
  }
  c.validate();
  return c;
}

inline ProtocolConfig parse_config(const std::string& text, const Overrides& overrides = {}) {
  std::istringstream is(text);
  return parse_config(is, overrides);
}

inline ProtocolConfig load_config(const std::string& path, const Overrides& overrides = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError(0, "cannot open config file " + path);
  return parse_config(f, overrides);
}

}  // namespace bb84lab::protocol

#endif  // BB84LAB_PROTOCOL_CONFIG_HPP_

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

// bb84lab command line: simulate, sweep, bounds, audit, alice, bob, eve.
//
// Exit codes: 0 success, 2 protocol abort, 3 config or usage error,
// 4 internal invariant violation.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bb84lab/bounds.hpp"
#include "bb84lab/codes.hpp"
#include "bb84lab/net/party.hpp"
#include "bb84lab/net/wire.hpp"
#include "bb84lab/protocol/config.hpp"
#include "bb84lab/protocol/run.hpp"
#include "bb84lab/qsim/audit.hpp"
#include "bb84lab/rng.hpp"
#include "json.hpp"

namespace {

using namespace bb84lab;

constexpr int kExitOk = 0;
constexpr int kExitAbort = 2;
constexpr int kExitConfig = 3;
constexpr int kExitInvariant = 4;

constexpr const char* kSeedEnv = "BB84LAB_SEED";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const char* const kStatsColumns =
    "Stats CSV columns (simulate, sweep):\n"
    "  param, value    sweep only: the swept config key and its value\n"
    "  run_id          run index, from 0\n"
    "  seed            master seed of the run\n"
    "  signals         signals Alice sent\n"
    "  detected        signals Bob detected\n"
    "  test_size       |T|, bits compared for error estimation\n"
    "  errors          mismatches found in T\n"
    "  delta           errors / test_size\n"
    "  key_size        N, sifted key bits\n"
    "  r               final key length\n"
    "  tau             pool bits spent on reconciliation\n"
    "  confirm_bits    pool bits spent on key confirmation\n"
    "  key_rate        (r - tau - confirm_bits) / N, 0 on abort\n"
    "  abort_reason    empty on success\n"
    "  keys_equal      1 when Alice and Bob hold the same final key\n";

const char* const kBoundsColumns =
    "Bounds CSV columns:\n"
    "  delta           error rate\n"
    "  h               binary entropy h(delta)\n"
    "  rate            1 - 2 h(delta)\n"
    "  rate_mayers     1 - h(delta) - h(2 delta)\n"
    "  sampling_bound  exp(-eps^2 N / (4 (delta - delta^2))) at the given N and eps\n";

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used, 0);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("bad seed in " + what + ": '" + text + "'");
}

// --seed, then $BB84LAB_SEED, then the config value.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t config_seed) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kSeedEnv); env && *env) return parse_seed(env, kSeedEnv);
  return config_seed;
}

protocol::Overrides parse_overrides(const std::vector<std::string>& sets) {
  protocol::Overrides out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

protocol::ProtocolConfig load(const std::string& path, const protocol::Overrides& overrides) {
  return path.empty() ? protocol::parse_config(std::string(), overrides) : protocol::load_config(path, overrides);
}

void check_output(const std::string& path, bool force) {
  if (path.empty() || force) return;
  if (std::filesystem::exists(path)) throw UsageError(path + " exists; pass --force to overwrite");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw UsageError("cannot write " + path);
  f << content;
  if (!f) throw UsageError("write failed for " + path);
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content << std::flush;
  } else {
    write_file(path, content);
  }
}

std::string key_hex(const gf2::BitVec& key) { return key.to_hex() + "\n"; }

// ---- simulate / sweep --------------------------------------------------------

struct RunRow {
  std::size_t run_id = 0;
  std::uint64_t seed = 0;
  protocol::RunResult result;
};

std::string stats_header(bool sweep) {
  std::string h = sweep ? "param,value," : "";
  return h +
         "run_id,seed,signals,detected,test_size,errors,delta,key_size,r,tau,confirm_bits,key_rate,abort_reason,"
         "keys_equal\n";
}

std::string stats_row(const RunRow& row) {
  const auto& s = row.result.stats;
  const bool equal = row.result.ok() && row.result.alice_key == row.result.bob_key;
  std::ostringstream os;
  os << row.run_id << ',' << row.seed << ',' << s.signals << ',' << s.detected << ',' << s.test_size << ','
     << s.errors << ',' << fmt(s.delta) << ',' << s.key_size << ',' << s.r << ',' << s.tau << ',' << s.confirm_bits
     << ',' << fmt(s.key_rate()) << ','
     << (row.result.abort == protocol::AbortReason::none ? "" : protocol::abort_reason_name(row.result.abort)) << ','
     << (equal ? 1 : 0) << '\n';
  return os.str();
}

std::uint64_t run_seed(std::uint64_t master, std::size_t runs, std::size_t i) {
  return runs == 1 ? master : Rng::derive(master, i);
}

RunRow run_once(protocol::ProtocolConfig cfg, std::size_t run_id, std::uint64_t seed) {
  cfg.seed = seed;
  RunRow row{run_id, seed, protocol::run_protocol(cfg)};
  if (row.result.ok() && row.result.alice_key != row.result.bob_key) {
    throw InvariantViolation("run " + std::to_string(run_id) + " confirmed unequal keys");
  }
  return row;
}

struct SimulateArgs {
  std::string config, out, transcript_out, key_out;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::size_t runs = 1;
  bool force = false;
};

int cmd_simulate(const SimulateArgs& a) {
  if (a.runs == 0) throw UsageError("--runs must be positive");
  if (a.runs > 1 && (!a.transcript_out.empty() || !a.key_out.empty())) {
    throw UsageError("--transcript-out and --key-out need --runs 1");
  }
  for (const auto* p : {&a.out, &a.transcript_out, &a.key_out}) check_output(*p, a.force);
  const auto cfg = load(a.config, parse_overrides(a.sets));
  const std::uint64_t master = resolve_seed(a.seed, cfg.seed);

  std::string csv = stats_header(false);
  bool any_abort = false;
  for (std::size_t i = 0; i < a.runs; ++i) {
    const RunRow row = run_once(cfg, i, run_seed(master, a.runs, i));
    csv += stats_row(row);
    any_abort |= !row.result.ok();
    if (!a.transcript_out.empty()) write_file(a.transcript_out, row.result.transcript.serialize());
    if (!a.key_out.empty() && row.result.ok()) write_file(a.key_out, key_hex(row.result.alice_key));
  }
  emit(a.out, csv);
  return any_abort ? kExitAbort : kExitOk;
}

struct SweepArgs {
  std::string config, out, param, range;
  std::vector<std::string> values, sets;
  std::optional<std::uint64_t> seed;
  std::size_t runs_per_point = 1;
  bool force = false;
};

// "start:stop:step", inclusive of stop up to rounding.
std::vector<std::string> expand_range(const std::string& text) {
  double v[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const auto next = i < 2 ? text.find(':', pos) : text.size();
    if (next == std::string::npos) throw UsageError("--range expects start:stop:step");
    try {
      std::size_t used = 0;
      const std::string part = text.substr(pos, next - pos);
      v[i] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--range expects start:stop:step, got '" + text + "'");
    }
    pos = next + 1;
  }
  if (!(v[2] > 0.0) || v[1] < v[0]) throw UsageError("--range needs step > 0 and stop >= start");
  const auto count = static_cast<std::size_t>(std::floor((v[1] - v[0]) / v[2] + 1e-9)) + 1;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(fmt(v[0] + static_cast<double>(i) * v[2]));
  return out;
}

int cmd_sweep(const SweepArgs& a) {
  if (a.values.empty() == a.range.empty()) throw UsageError("give exactly one of --values and --range");
  if (a.runs_per_point == 0) throw UsageError("--runs-per-point must be positive");
  check_output(a.out, a.force);
  const std::vector<std::string> values = a.range.empty() ? a.values : expand_range(a.range);
  auto overrides = parse_overrides(a.sets);
  const std::uint64_t master = resolve_seed(a.seed, load(a.config, overrides).seed);

  // Every point reuses the same run seeds, so neighbouring points differ only
  // in the swept parameter.
  std::string csv = stats_header(true);
  for (const auto& value : values) {
    auto point = overrides;
    point.emplace_back(a.param, value);
    const auto cfg = load(a.config, point);
    for (std::size_t i = 0; i < a.runs_per_point; ++i) {
      csv += a.param + "," + value + "," + stats_row(run_once(cfg, i, run_seed(master, a.runs_per_point, i)));
    }
  }
  emit(a.out, csv);
  return kExitOk;
}

// ---- bounds ------------------------------------------------------------------

struct BoundsArgs {
  double delta_min = 0.0, delta_max = 0.15;
  std::size_t points = 31;
  double n = 1000, epsilon = 0.01;
  std::string out;
  bool force = false;
};

int cmd_bounds(const BoundsArgs& a) {
  if (a.points < 2) throw UsageError("--points must be at least 2");
  if (!(a.delta_min >= 0.0 && a.delta_max <= 0.5 && a.delta_min <= a.delta_max)) {
    throw UsageError("delta grid must satisfy 0 <= delta-min <= delta-max <= 0.5");
  }
  if (!(a.n > 0.0) || !(a.epsilon >= 0.0)) throw UsageError("--n must be positive and --epsilon nonnegative");
  check_output(a.out, a.force);
  std::string csv = "delta,h,rate,rate_mayers,sampling_bound\n";
  for (std::size_t i = 0; i < a.points; ++i) {
    const double d = a.delta_min + (a.delta_max - a.delta_min) * static_cast<double>(i) /
                                       static_cast<double>(a.points - 1);
    csv += fmt(d) + "," + fmt(bounds::binary_entropy(d)) + "," + fmt(bounds::key_rate(d)) + "," + fmt(bounds::mayers_rate(d)) + "," +
           fmt(bounds::sampling_bound(a.n, d, a.epsilon).value) + "\n";
  }
  emit(a.out, csv);
  return kExitOk;
}

// ---- audit -------------------------------------------------------------------

struct AuditArgs {
  std::string code = "repetition/3/1/0";
  std::vector<std::string> attacks{"all"};
  std::size_t test_size = 0;
  double delta_max = 0.15;
  std::string out;
  bool strict = false, force = false;
};

int cmd_audit(const AuditArgs& a) {
  check_output(a.out, a.force);
  codes::LinearCode code = [&] {
    try {
      return codes::LinearCode::from_descriptor(codes::CodeDescriptor::parse(a.code));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--code: ") + e.what());
    }
  }();
  if (code.n() > qsim::kMaxAuditQubits) {
    throw UsageError("--code: audits need n <= " + std::to_string(qsim::kMaxAuditQubits));
  }
  std::vector<qsim::Attack> attacks;
  for (const auto& name : a.attacks) {
    if (name == "all") {
      const auto std_attacks = qsim::standard_attacks();
      attacks.insert(attacks.end(), std_attacks.begin(), std_attacks.end());
    } else {
      try {
        attacks.push_back(qsim::Attack::parse(name));
      } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--attack: ") + e.what());
      }
    }
  }
  qsim::AuditOptions opt;
  opt.test_size = a.test_size;
  opt.delta_max = a.delta_max;

  nlohmann::json reports = nlohmann::json::array();
  std::size_t violations = 0;
  for (const auto& attack : attacks) {
    const auto report = qsim::audit_protocol3(attack, code, opt);
    const bool ok = report.zero_overlap_ok && report.fidelity_chain_ok && report.holevo_ok && report.shannon_ok &&
                    report.uniformity_fidelity_ok;
    violations += ok ? 0 : 1;
    reports.push_back(report.to_json());
  }
  const nlohmann::json doc = {{"code", a.code}, {"reports", reports}, {"failing_reports", violations}};
  emit(a.out, doc.dump(2) + "\n");
  return a.strict && violations ? kExitInvariant : kExitOk;
}

// ---- alice / bob / eve -------------------------------------------------------

struct PartyArgs {
  std::string listen, connect, config, transcript_out, key_out;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool no_channel = false, force = false;
};

// Connects or listens; a listener announces its bound endpoint on stdout so a
// caller can pass port 0.
net::Socket open_socket(const std::string& listen, const std::string& connect) {
  if (listen.empty() == connect.empty()) throw UsageError("give exactly one of --listen and --connect");
  try {
    if (!listen.empty()) {
      net::Listener l(net::Endpoint::parse(listen));
      std::cout << "listening " << l.endpoint().to_string() << std::endl;
      return l.accept(std::chrono::minutes(5));
    }
    return net::connect_to(net::Endpoint::parse(connect), std::chrono::seconds(30));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int cmd_party(protocol::Party role, const PartyArgs& a) {
  for (const auto* p : {&a.transcript_out, &a.key_out}) check_output(*p, a.force);
  auto cfg = load(a.config, parse_overrides(a.sets));
  cfg.seed = resolve_seed(a.seed, cfg.seed);
  protocol::require_compliant(cfg.source.build());

  net::Socket sock;
  try {
    sock = open_socket(a.listen, a.connect);
  } catch (const net::TransportError& e) {
    std::cerr << "bb84lab: " << e.what() << "\n";
    return kExitAbort;
  }
  net::ServeOptions opt;
  opt.apply_channel = !a.no_channel;
  const auto out = net::serve_party(role, cfg, sock, opt);

  if (!a.transcript_out.empty()) write_file(a.transcript_out, out.transcript.serialize());
  if (!a.key_out.empty() && out.succeeded) write_file(a.key_out, key_hex(out.key));
  std::cout << (role == protocol::Party::alice ? "alice" : "bob") << ' '
            << (out.succeeded ? "ok" : protocol::abort_reason_name(out.reason)) << " delta=" << fmt(out.stats.delta)
            << " key_bits=" << out.key.size() << std::endl;
  return out.succeeded ? kExitOk : kExitAbort;
}

struct EveArgs {
  std::string listen, connect, policy = "passive", log_out;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

int cmd_eve(const EveArgs& a) {
  check_output(a.log_out, a.force);
  net::EvePolicy policy;
  net::Endpoint listen_at, upstream;
  try {
    policy = net::EvePolicy::parse(a.policy);
    listen_at = net::Endpoint::parse(a.listen);
    upstream = net::Endpoint::parse(a.connect);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::uint64_t seed = resolve_seed(a.seed, 0);

  net::ProxyCapture cap;
  try {
    net::Listener l(listen_at);
    std::cout << "listening " << l.endpoint().to_string() << std::endl;
    cap = net::eve_proxy(policy, l, upstream, seed, false);
  } catch (const net::TransportError& e) {
    std::cerr << "bb84lab: " << e.what() << "\n";
    return kExitAbort;
  }
  if (!a.log_out.empty()) {
    std::string csv = "index,basis,outcome\n";
    for (const auto& r : cap.log) {
      csv += std::to_string(r.index) + "," + std::to_string(r.basis) + "," + std::to_string(r.outcome) + "\n";
    }
    write_file(a.log_out, csv);
  }
  std::cout << "eve forwarded signals=" << cap.log.size() << (cap.transport_error ? " transport_error" : "")
            << std::endl;
  return cap.transport_error ? kExitAbort : kExitOk;
}

void add_seed(CLI::App* app, std::optional<std::uint64_t>& seed) {
  app->add_option_function<std::string>(
         "--seed", [&seed](const std::string& s) { seed = parse_seed(s, "--seed"); },
         "Master seed; overrides $BB84LAB_SEED and the config")
      ->type_name("UINT");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bb84lab: BB84 key distribution lab with an uncharacterized source"};
  app.require_subcommand(1);
  app.footer(std::string("Exit codes: 0 success, 2 protocol abort, 3 config or usage error, 4 invariant violation.\n") +
             "$" + kSeedEnv + " supplies a default seed; --seed overrides it.");

  std::function<int()> action;

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run the protocol in process and write per-run stats as CSV");
  s->add_option("--config", sim.config, "Config file (key = value lines)");
  s->add_option("--set", sim.sets, "Override a config key, key=value (repeatable)");
  s->add_option("--runs", sim.runs, "Number of runs; run i uses seed derive(seed, i) when runs > 1");
  add_seed(s, sim.seed);
  s->add_option("--out", sim.out, "Stats CSV path (default stdout)");
  s->add_option("--transcript-out", sim.transcript_out, "Transcript file (single run)");
  s->add_option("--key-out", sim.key_out, "Final key as hex (single run)");
  s->add_flag("--force", sim.force, "Overwrite existing outputs");
  s->footer(kStatsColumns);
  s->callback([&] { action = [&] { return cmd_simulate(sim); }; });

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Vary one config key and write stats CSV rows per point");
  w->add_option("--config", sw.config, "Config file");
  w->add_option("--set", sw.sets, "Override a config key, key=value (repeatable)");
  w->add_option("--param", sw.param, "Config key to vary, e.g. channel.p")->required();
  w->add_option("--values", sw.values, "Comma separated values")->delimiter(',');
  w->add_option("--range", sw.range, "start:stop:step");
  w->add_option("--runs-per-point", sw.runs_per_point, "Runs per value; seeds are shared across values");
  add_seed(w, sw.seed);
  w->add_option("--out", sw.out, "CSV path (default stdout)");
  w->add_flag("--force", sw.force, "Overwrite existing outputs");
  w->footer(kStatsColumns);
  w->callback([&] { action = [&] { return cmd_sweep(sw); }; });

  BoundsArgs bd;
  auto* b = app.add_subcommand("bounds", "Tabulate key rates and the sampling bound over a delta grid");
  b->add_option("--delta-min", bd.delta_min, "First grid point");
  b->add_option("--delta-max", bd.delta_max, "Last grid point (at most 0.5)");
  b->add_option("--points", bd.points, "Grid points, endpoints included");
  b->add_option("--n", bd.n, "N for the sampling bound");
  b->add_option("--epsilon", bd.epsilon, "epsilon for the sampling bound");
  b->add_option("--out", bd.out, "CSV path (default stdout)");
  b->add_flag("--force", bd.force, "Overwrite existing outputs");
  b->footer(kBoundsColumns);
  b->callback([&] { action = [&] { return cmd_bounds(bd); }; });

  AuditArgs au;
  auto* u = app.add_subcommand("audit", "Simulate the key circuit under i.i.d. attacks and report as JSON");
  u->add_option("--code", au.code, "Code descriptor family/n/k/seed with n <= 4");
  u->add_option("--attack", au.attacks,
                "identity, swap, bell, rotation:<theta>, random:<seed> or all (repeatable)");
  u->add_option("--test-size", au.test_size, "Verification sample size; 0 means n");
  u->add_option("--delta-max", au.delta_max, "Verification threshold");
  u->add_option("--out", au.out, "JSON path (default stdout)");
  u->add_flag("--strict", au.strict, "Exit 4 when any report fails a check");
  u->add_flag("--force", au.force, "Overwrite existing outputs");
  u->callback([&] { action = [&] { return cmd_audit(au); }; });

  PartyArgs pa[2];
  const char* names[2] = {"alice", "bob"};
  for (int i = 0; i < 2; ++i) {
    const auto role = i == 0 ? protocol::Party::alice : protocol::Party::bob;
    auto* p = app.add_subcommand(names[i], std::string("Run ") + names[i] + "'s side over TCP");
    p->add_option("--listen", pa[i].listen, "host:port to accept on (port 0 picks one and prints it)");
    p->add_option("--connect", pa[i].connect, "host:port of the peer");
    p->add_option("--config", pa[i].config, "Config file; both sides need the same protocol settings");
    p->add_option("--set", pa[i].sets, "Override a config key, key=value (repeatable)");
    add_seed(p, pa[i].seed);
    p->add_option("--transcript-out", pa[i].transcript_out, "Transcript file");
    p->add_option("--key-out", pa[i].key_out, "Final key as hex");
    if (i == 0) p->add_flag("--no-channel", pa[i].no_channel, "Send signals untouched (a proxy plays the channel)");
    p->add_flag("--force", pa[i].force, "Overwrite existing outputs");
    p->callback([&, i, role] { action = [&, i, role] { return cmd_party(role, pa[i]); }; });
  }

  EveArgs ev;
  auto* e = app.add_subcommand("eve", "Man-in-the-middle proxy between Alice and Bob");
  e->add_option("--listen", ev.listen, "host:port for Alice")->required();
  e->add_option("--connect", ev.connect, "host:port of Bob")->required();
  e->add_option("--policy", ev.policy, "passive, intercept_resend or depolarize:<p>");
  add_seed(e, ev.seed);
  e->add_option("--log-out", ev.log_out, "CSV of Eve's measurements: index,basis,outcome");
  e->add_flag("--force", ev.force, "Overwrite existing outputs");
  e->callback([&] { action = [&] { return cmd_eve(ev); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitConfig;
  } catch (const UsageError& ex) {
    std::cerr << "bb84lab: " << ex.what() << "\n";
    return kExitConfig;
  }

  try {
    return action();
  } catch (const UsageError& ex) {
    std::cerr << "bb84lab: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const protocol::ConfigError& ex) {
    std::cerr << "bb84lab: config: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const protocol::NonCompliantSource& ex) {
    std::cerr << "bb84lab: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const InvariantViolation& ex) {
    std::cerr << "bb84lab: invariant violated: " << ex.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& ex) {
    std::cerr << "bb84lab: internal error: " << ex.what() << "\n";
    return kExitInvariant;
  }
}

/*
 * Copyright (c) 2026, The abq authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "abq/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "abq/ba_psync.hpp"
#include "abq/compose.hpp"
#include "abq/qab.hpp"
#include "abq/quorum_ba.hpp"

namespace abq::scenario {

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::ba_psync: return "ba_psync";
    case Protocol::qab_async: return "qab_async";
    case Protocol::qab_psync: return "qab_psync";
    case Protocol::quorum_ba: return "quorum_ba";
    case Protocol::composed_psync: return "composed_psync";
    case Protocol::composed_async: return "composed_async";
  }
  return "?";
}

std::optional<Protocol> protocol_from(const std::string& name) {
  for (auto p : {Protocol::ba_psync, Protocol::qab_async, Protocol::qab_psync, Protocol::quorum_ba,
                 Protocol::composed_psync, Protocol::composed_async})
    if (name == protocol_name(p)) return p;
  return std::nullopt;
}

bool protocol_is_async(Protocol p) {
  return p == Protocol::qab_async || p == Protocol::quorum_ba || p == Protocol::composed_async;
}

void ScenarioConfig::validate() const {
  SystemParams params{n, t, f, delta, gst};
  params.validate_basic();
  std::uint32_t q = quorum_size ? quorum_size : 3 * t + 1;
  switch (protocol) {
    case Protocol::ba_psync:
      if (!params.third_resilient())
        throw std::invalid_argument("ba_psync requires t < n/3");
      break;
    case Protocol::quorum_ba:
      if (!params.third_resilient())
        throw std::invalid_argument("quorum_ba requires t < n/3 (thresholds need n >= 3t+1)");
      break;
    case Protocol::qab_async:
    case Protocol::qab_psync:
      if (q <= t) throw std::invalid_argument("qab requires quorum size > t");
      if (q > n) throw std::invalid_argument("qab quorum exceeds n");
      break;
    case Protocol::composed_psync:
    case Protocol::composed_async:
      if (!params.third_resilient())
        throw std::invalid_argument("composition requires t < n/3");
      if (q > n) throw std::invalid_argument("quorum 3t+1 exceeds n");
      break;
  }
}

// ---- flat key=value parsing ----

namespace {

std::map<std::string, std::string> read_kv(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

sim::SchedulerKind scheduler_from(const std::string& s) {
  if (s == "immediate") return sim::SchedulerKind::immediate;
  if (s == "random") return sim::SchedulerKind::random_psync;
  if (s == "async") return sim::SchedulerKind::async_random;
  if (s == "main") return sim::SchedulerKind::main_lb;
  throw std::invalid_argument("unknown scheduler: " + s);
}

const char* scheduler_name(sim::SchedulerKind k) {
  switch (k) {
    case sim::SchedulerKind::immediate: return "immediate";
    case sim::SchedulerKind::random_psync: return "random";
    case sim::SchedulerKind::async_random: return "async";
    case sim::SchedulerKind::main_lb: return "main";
  }
  return "?";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

sim::ByzantineBehavior parse_behavior(const std::string& token) {
  sim::ByzantineBehavior b;
  std::string kind = token;
  std::string arg;
  auto at = token.find('@');
  if (at != std::string::npos) {
    kind = token.substr(0, at);
    arg = token.substr(at + 1);
  }
  if (kind == "crash" || kind == "silent") {
    b.kind = sim::BehaviorKind::crash;
    b.crash_at = arg.empty() ? 0 : std::stoll(arg);
  } else if (kind == "silent-leader" || kind == "silent_leader") {
    b.kind = sim::BehaviorKind::silent_leader;
  } else if (kind == "equivocator") {
    b.kind = sim::BehaviorKind::equivocator;
  } else if (kind == "mirror") {
    b.kind = sim::BehaviorKind::mirror_input;
    b.forced_input = make_bin(arg.empty() ? 0 : std::stoi(arg));
  } else {
    throw std::invalid_argument("unknown behavior kind: " + kind);
  }
  return b;
}

}  // namespace

ScenarioConfig parse_config(std::istream& in) {
  auto kv = read_kv(in);
  ScenarioConfig cfg;
  auto get = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  if (auto v = get("protocol")) {
    auto p = protocol_from(*v);
    if (!p) throw std::invalid_argument("unknown protocol: " + *v);
    cfg.protocol = *p;
  }
  if (auto v = get("n")) cfg.n = static_cast<std::uint32_t>(std::stoul(*v));
  if (auto v = get("t")) cfg.t = static_cast<std::uint32_t>(std::stoul(*v));
  if (auto v = get("f")) cfg.f = static_cast<std::uint32_t>(std::stoul(*v));
  if (auto v = get("delta")) cfg.delta = std::stoll(*v);
  if (auto v = get("gst")) cfg.gst = std::stoll(*v);
  if (auto v = get("seed")) cfg.seed = std::stoull(*v);
  if (auto v = get("horizon")) cfg.horizon = std::stoull(*v);
  if (auto v = get("scheduler")) {
    cfg.scheduler = scheduler_from(*v);
    cfg.scheduler_set = true;
  }
  if (auto v = get("inputs")) cfg.inputs = *v;
  if (auto v = get("behaviors")) cfg.behaviors = *v;
  if (auto v = get("expander_c")) cfg.expander_c = std::stod(*v);
  if (auto v = get("relayer_cap_factor")) cfg.relayer_cap_factor = std::stod(*v);
  if (auto v = get("override_degree"))
    cfg.override_degree = static_cast<std::uint32_t>(std::stoul(*v));
  if (auto v = get("override_relayers"))
    cfg.override_relayers = static_cast<std::uint32_t>(std::stoul(*v));
  if (auto v = get("sched_t")) cfg.sched_t = static_cast<std::uint32_t>(std::stoul(*v));
  if (auto v = get("fairness")) cfg.fairness = std::stoull(*v);
  if (auto v = get("quorum_size")) cfg.quorum_size = static_cast<std::uint32_t>(std::stoul(*v));
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  return parse_config(in);
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::ostringstream out;
  out << "protocol=" << protocol_name(cfg.protocol) << "\n";
  out << "n=" << cfg.n << "\nt=" << cfg.t << "\nf=" << cfg.f << "\n";
  out << "delta=" << cfg.delta << "\ngst=" << cfg.gst << "\n";
  out << "seed=" << cfg.seed << "\nhorizon=" << cfg.horizon << "\n";
  out << "scheduler=" << scheduler_name(cfg.scheduler) << "\n";
  out << "inputs=" << cfg.inputs << "\n";
  if (!cfg.behaviors.empty()) out << "behaviors=" << cfg.behaviors << "\n";
  out << "expander_c=" << cfg.expander_c << "\n";
  out << "relayer_cap_factor=" << cfg.relayer_cap_factor << "\n";
  if (cfg.override_degree) out << "override_degree=" << *cfg.override_degree << "\n";
  if (cfg.override_relayers) out << "override_relayers=" << *cfg.override_relayers << "\n";
  if (cfg.sched_t) out << "sched_t=" << cfg.sched_t << "\n";
  out << "fairness=" << cfg.fairness << "\n";
  if (cfg.quorum_size) out << "quorum_size=" << cfg.quorum_size << "\n";
  return out.str();
}

// ---- trusted setup ----

namespace {

std::vector<BinValue> make_inputs(const ScenarioConfig& cfg) {
  std::vector<BinValue> inputs(cfg.n, BinValue::zero);
  if (cfg.inputs == "unanimous0") {
    // all zero
  } else if (cfg.inputs == "unanimous1") {
    std::fill(inputs.begin(), inputs.end(), BinValue::one);
  } else if (cfg.inputs == "mixed") {
    for (std::uint32_t i = 0; i < cfg.n; ++i)
      inputs[i] = make_bin(static_cast<int>(splitmix64(derive_seed(cfg.seed, 0x1247) + i) & 1));
  } else {
    if (cfg.inputs.size() != cfg.n)
      throw std::invalid_argument("inputs bitstring length must equal n");
    for (std::uint32_t i = 0; i < cfg.n; ++i) {
      if (cfg.inputs[i] != '0' && cfg.inputs[i] != '1')
        throw std::invalid_argument("inputs bitstring must be 0/1");
      inputs[i] = make_bin(cfg.inputs[i] - '0');
    }
  }
  return inputs;
}

std::vector<NodeId> all_nodes(std::uint32_t n) {
  std::vector<NodeId> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(NodeId{i});
  return out;
}

/// Build the dissemination graph unless the relayer layer would exceed the
/// cap, in which case QAB falls back to direct quorum fanout (null graph).
std::shared_ptr<const expander::BipartiteGraph> maybe_build_graph(const ScenarioConfig& cfg) {
  std::uint32_t relayers =
      cfg.override_relayers.value_or(expander::default_relayers(cfg.n, cfg.t, cfg.expander_c));
  double cap = cfg.relayer_cap_factor * static_cast<double>(cfg.n);
  if (static_cast<double>(relayers) > cap) return nullptr;

  expander::Overrides ov{cfg.override_degree, cfg.override_relayers};
  // Resample the construction seed until the expansion check passes
  // (exhaustively when feasible, sampled otherwise). Random graphs at these
  // parameters pass almost always; the retry is a correctness backstop.
  for (std::uint64_t attempt = 0; attempt < 8; ++attempt) {
    auto g = expander::build_graph(cfg.n, cfg.t, cfg.expander_c, derive_seed(cfg.seed, 0x6e + attempt),
                                   ov);
    auto cert = expander::verify_expansion(g, cfg.t, /*exhaustive_limit=*/200'000, /*samples=*/500,
                                           derive_seed(cfg.seed, 0x77 + attempt));
    if (cert.verified) return std::make_shared<const expander::BipartiteGraph>(std::move(g));
  }
  throw std::runtime_error("expander construction failed expansion check after 8 seeds");
}

}  // namespace

sim::RunSetup make_setup(const ScenarioConfig& cfg) {
  cfg.validate();
  sim::RunSetup setup;
  setup.params = SystemParams{cfg.n, cfg.t, cfg.f, cfg.delta, cfg.gst};
  setup.inputs = make_inputs(cfg);
  setup.seed = cfg.seed;
  setup.coin = std::make_shared<sim::CoinOracle>(derive_seed(cfg.seed, 0xc0));
  setup.log = std::make_shared<crypto::SigningLog>();

  std::uint32_t q = cfg.quorum_size ? cfg.quorum_size : 3 * cfg.t + 1;

  switch (cfg.protocol) {
    case Protocol::ba_psync: {
      auto everyone = all_nodes(cfg.n);
      setup.schemes.global = crypto::SchemeId{"GLOBAL", everyone, cfg.n - cfg.t};
      setup.schemes.suggest = crypto::SchemeId{"SUGGEST", everyone, cfg.t + 1};
      break;
    }
    case Protocol::quorum_ba: {
      setup.quorum = all_nodes(cfg.n);
      setup.schemes.quorum = crypto::SchemeId{"QUORUM", setup.quorum, cfg.n - cfg.t};
      break;
    }
    case Protocol::qab_async:
    case Protocol::qab_psync: {
      auto quorum = all_nodes(std::min(q, cfg.n));
      setup.quorum = quorum;
      BinValue v_in = setup.inputs[0];
      setup.qab_input = CertifiedValue{v_in, std::monostate{}};
      setup.qab_verify = [v_in](const CertifiedValue& v) {
        return std::holds_alternative<std::monostate>(v.evidence) && v.value == v_in;
      };
      if (cfg.protocol == Protocol::qab_async) {
        setup.graph = maybe_build_graph(cfg);
        if (setup.graph)
          for (std::uint32_t r = 0; r < setup.graph->n_right; ++r)
            setup.schemes.committees.push_back(crypto::aggregate_scheme(
                "AGG" + std::to_string(r), qab::committee_of(*setup.graph, r)));
      }
      break;
    }
    case Protocol::composed_psync: {
      setup.quorum = compose::default_quorum(cfg.n, cfg.t);
      std::uint32_t qs = static_cast<std::uint32_t>(setup.quorum.size());
      setup.schemes.global = crypto::SchemeId{"GLOBAL", setup.quorum, qs - cfg.t};
      setup.schemes.suggest = crypto::SchemeId{"SUGGEST", setup.quorum, cfg.t + 1};
      setup.qab_verify = compose::commit_verify_predicate(*setup.schemes.global);
      break;
    }
    case Protocol::composed_async: {
      setup.quorum = compose::default_quorum(cfg.n, cfg.t);
      std::uint32_t qs = static_cast<std::uint32_t>(setup.quorum.size());
      setup.schemes.quorum = crypto::SchemeId{"QUORUM", setup.quorum, qs - cfg.t};
      setup.qab_verify = compose::cert_verify_predicate(*setup.schemes.quorum);
      setup.graph = maybe_build_graph(cfg);
      if (setup.graph)
        for (std::uint32_t r = 0; r < setup.graph->n_right; ++r)
          setup.schemes.committees.push_back(
              crypto::aggregate_scheme("AGG" + std::to_string(r), qab::committee_of(*setup.graph, r)));
      break;
    }
  }
  return setup;
}

sim::AdversaryPolicy make_adversary(const ScenarioConfig& cfg) {
  sim::AdversaryPolicy adversary;
  if (cfg.scheduler_set) {
    adversary.scheduler = cfg.scheduler;
  } else {
    adversary.scheduler = protocol_is_async(cfg.protocol) ? sim::SchedulerKind::async_random
                                                          : sim::SchedulerKind::random_psync;
  }
  adversary.fairness_bound = cfg.fairness;
  adversary.sched_t = cfg.sched_t;

  if (!cfg.behaviors.empty()) {
    for (const auto& token : split_list(cfg.behaviors)) {
      auto colon = token.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("behavior token needs idx:kind form: " + token);
      std::uint32_t idx = static_cast<std::uint32_t>(std::stoul(token.substr(0, colon)));
      adversary.behaviors[idx] = parse_behavior(token.substr(colon + 1));
    }
    if (adversary.behaviors.size() != cfg.f)
      throw std::invalid_argument("behaviors list must name exactly f nodes");
  } else {
    for (std::uint32_t i = 0; i < cfg.f; ++i)
      adversary.behaviors[i] = sim::ByzantineBehavior{sim::BehaviorKind::crash, 0, {}, {}};
  }
  return adversary;
}

sim::NodeFactory factory_for(Protocol p) {
  switch (p) {
    case Protocol::ba_psync: return psync::agreement_factory();
    case Protocol::qab_async: return qab::qab_async_factory();
    case Protocol::qab_psync: return qab::qab_psync_factory();
    case Protocol::quorum_ba: return qba::quorum_ba_factory();
    case Protocol::composed_psync: return compose::composed_psync_factory();
    case Protocol::composed_async: return compose::composed_async_factory();
  }
  throw std::logic_error("unreachable");
}

sim::RunOptions run_options_for(const ScenarioConfig& cfg) {
  sim::RunOptions opts;
  if (protocol_is_async(cfg.protocol)) {
    opts.max_events = cfg.horizon ? cfg.horizon : 1'000'000;
  } else {
    opts.max_events = 4'000'000;
    Time span = cfg.horizon ? static_cast<Time>(cfg.horizon)
                            : static_cast<Time>(20) * cfg.n * sim::kAgreementViewLen * cfg.delta;
    opts.horizon_time = cfg.gst + span;
  }
  return opts;
}

audit::AuditOptions audit_options_for(const ScenarioConfig& cfg, const sim::RunSetup& setup) {
  audit::AuditOptions opts;
  opts.schemes = &setup.schemes;
  switch (cfg.protocol) {
    case Protocol::ba_psync:
      opts.view_len = sim::kAgreementViewLen;
      opts.liveness_views = cfg.n;
      break;
    case Protocol::qab_psync:
      opts.view_len = sim::kQabViewLen;
      opts.liveness_views = cfg.n + 1;
      break;
    case Protocol::composed_psync:
      // Inner agreement needs at most q 9-delta views after GST, then one
      // honest-leader 3-delta view disseminates; expressed in 3-delta units.
      opts.view_len = sim::kQabViewLen;
      opts.liveness_views = 3 * (3 * cfg.t + 1) + cfg.n + 1;
      break;
    default:
      break;
  }
  if (cfg.protocol == Protocol::qab_async || cfg.protocol == Protocol::qab_psync)
    if (setup.qab_input) opts.qab_expected = setup.qab_input->value;
  if (setup.graph) opts.graph = setup.graph.get();
  auto scheduler = make_adversary(cfg).scheduler;
  if (scheduler == sim::SchedulerKind::random_psync || scheduler == sim::SchedulerKind::immediate)
    opts.check_psync_bound = true;
  if (scheduler == sim::SchedulerKind::main_lb)
    opts.main_sched_t = cfg.sched_t ? cfg.sched_t : cfg.t;
  return opts;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  RunResult result{make_setup(cfg), {}, {}};
  auto adversary = make_adversary(cfg);
  result.trace =
      sim::run_simulation(result.setup, adversary, factory_for(cfg.protocol), run_options_for(cfg));
  result.report = audit::audit_trace(result.trace, audit_options_for(cfg, result.setup));
  return result;
}

// ---- metrics ----

const char* MetricsRow::csv_header() {
  return "protocol,n,t,f,seed,words_total,words_after_gst,views_to_global_decision,rounds,"
         "decided_value,safety_ok,liveness_ok";
}

std::string MetricsRow::csv_line() const {
  std::ostringstream out;
  out << protocol << "," << n << "," << t << "," << f << "," << seed << "," << words_total << ","
      << words_after_gst << "," << views_to_global_decision << "," << rounds << "," << decided_value
      << "," << (safety_ok ? 1 : 0) << "," << (liveness_ok ? 1 : 0);
  return out.str();
}

MetricsRow make_metrics(const ScenarioConfig& cfg, const Trace& trace,
                        const audit::AuditReport& report) {
  MetricsRow row;
  row.protocol = protocol_name(cfg.protocol);
  row.n = cfg.n;
  row.t = cfg.t;
  row.f = cfg.f;
  row.seed = cfg.seed;
  row.words_total = count_words(trace, true, 0);
  row.words_after_gst = count_words(trace, true, cfg.gst);
  row.safety_ok = report.safety_ok();
  row.liveness_ok = report.liveness_ok();

  if (auto last = trace.last_honest_decision()) {
    std::uint32_t len =
        cfg.protocol == Protocol::ba_psync ? sim::kAgreementViewLen : sim::kQabViewLen;
    if (!protocol_is_async(cfg.protocol))
      row.views_to_global_decision = *last / (cfg.delta * static_cast<Time>(len)) + 1;
  }

  std::optional<BinValue> value;
  bool agree = true;
  for (const auto& [idx, d] : trace.decisions) {
    if (trace.is_corrupted(NodeId{idx})) continue;
    if (!value)
      value = d.value;
    else if (*value != d.value)
      agree = false;
  }
  if (value && agree && trace.all_honest_decided()) row.decided_value = bit_of(*value);

  std::int64_t max_round = -1;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::send || !e.message) continue;
    if (trace.is_corrupted(e.message->sender)) continue;
    if (const auto* est = std::get_if<msg::Est>(&e.message->payload))
      max_round = std::max<std::int64_t>(max_round, est->round);
    if (const auto* aux = std::get_if<msg::Aux>(&e.message->payload))
      max_round = std::max<std::int64_t>(max_round, aux->round);
  }
  row.rounds = max_round + 1;
  return row;
}

// ---- fitting ----

double fit_through_origin(const std::vector<std::pair<double, double>>& xy) {
  double sxy = 0, sxx = 0;
  for (const auto& [x, y] : xy) {
    sxy += x * y;
    sxx += x * x;
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

TwoTermFit fit_two_terms(const std::vector<std::array<double, 3>>& rows) {
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  for (const auto& [x1, x2, y] : rows) {
    a11 += x1 * x1;
    a12 += x1 * x2;
    a22 += x2 * x2;
    b1 += x1 * y;
    b2 += x2 * y;
  }
  double det = a11 * a22 - a12 * a12;
  if (std::abs(det) < 1e-12) {
    // Degenerate design (e.g. every cell has f = 0): fit the first term only.
    return {a11 > 0 ? b1 / a11 : 0.0, 0.0};
  }
  return {(b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det};
}

// ---- sweeps ----

SweepSpec parse_sweep(std::istream& in) {
  auto kv = read_kv(in);
  SweepSpec spec;
  auto get = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  if (auto v = get("protocol")) {
    auto p = protocol_from(*v);
    if (!p) throw std::invalid_argument("unknown protocol: " + *v);
    spec.protocol = *p;
  }
  if (auto v = get("n"))
    for (const auto& token : split_list(*v)) spec.ns.push_back(std::stoul(token));
  if (auto v = get("t")) spec.ts = split_list(*v);
  if (auto v = get("f")) spec.fs = split_list(*v);
  if (auto v = get("seeds")) spec.seeds = static_cast<std::uint32_t>(std::stoul(*v));
  if (auto v = get("seed0")) spec.seed0 = std::stoull(*v);
  if (auto v = get("delta")) spec.delta = std::stoll(*v);
  if (auto v = get("gst")) spec.gst = std::stoll(*v);
  if (auto v = get("behavior")) spec.behavior = *v;
  if (auto v = get("inputs")) spec.inputs = *v;
  if (auto v = get("scheduler")) {
    spec.scheduler = scheduler_from(*v);
    spec.scheduler_set = true;
  }
  if (auto v = get("expander_c")) spec.expander_c = std::stod(*v);
  if (auto v = get("relayer_cap_factor")) spec.relayer_cap_factor = std::stod(*v);
  if (auto v = get("model")) spec.model = *v;
  if (auto v = get("bound_c")) spec.bound_c = std::stod(*v);
  if (auto v = get("bound_c1")) spec.bound_c1 = std::stod(*v);
  if (auto v = get("bound_c2")) spec.bound_c2 = std::stod(*v);
  if (spec.ns.empty()) spec.ns.push_back(4);
  if (spec.ts.empty()) spec.ts.push_back("max3");
  if (spec.fs.empty()) spec.fs.push_back("0");
  return spec;
}

namespace {

std::uint32_t resolve_t(const std::string& token, std::uint32_t n) {
  if (token == "max3") return (n - 1) / 3;
  return static_cast<std::uint32_t>(std::stoul(token));
}

std::uint32_t resolve_f(const std::string& token, std::uint32_t t) {
  if (token == "half") return t / 2;
  if (token == "t") return t;
  return static_cast<std::uint32_t>(std::stoul(token));
}

std::string behaviors_string(const std::string& kind, std::uint32_t f) {
  std::string out;
  for (std::uint32_t i = 0; i < f; ++i) {
    if (i) out += ",";
    out += std::to_string(i) + ":" + kind;
  }
  return out;
}

}  // namespace

SweepOutcome run_sweep(const SweepSpec& spec) {
  SweepOutcome outcome;
  struct CellAgg {
    double words_sum{0};
    std::uint32_t n, t, f;
    std::uint32_t count{0};
  };
  std::vector<CellAgg> cells;

  for (auto n : spec.ns) {
    for (const auto& t_token : spec.ts) {
      std::uint32_t t = resolve_t(t_token, n);
      for (const auto& f_token : spec.fs) {
        std::uint32_t f = resolve_f(f_token, t);
        CellAgg agg{0, n, t, f, 0};
        for (std::uint32_t s = 0; s < spec.seeds; ++s) {
          ScenarioConfig cfg;
          cfg.protocol = spec.protocol;
          cfg.n = n;
          cfg.t = t;
          cfg.f = f;
          cfg.delta = spec.delta;
          cfg.gst = spec.gst;
          cfg.seed = spec.seed0 + s;
          cfg.inputs = spec.inputs;
          cfg.expander_c = spec.expander_c;
          cfg.relayer_cap_factor = spec.relayer_cap_factor;
          if (spec.scheduler_set) {
            cfg.scheduler = spec.scheduler;
            cfg.scheduler_set = true;
          }
          if (f > 0) cfg.behaviors = behaviors_string(spec.behavior, f);

          auto result = run_scenario(cfg);
          auto row = make_metrics(cfg, result.trace, result.report);
          outcome.rows.push_back(row);
          agg.words_sum += static_cast<double>(row.words_after_gst);
          ++agg.count;

          if (!row.safety_ok) {
            outcome.exit_code = 3;
            outcome.failure = "safety violation in cell n=" + std::to_string(n) +
                              " t=" + std::to_string(t) + " f=" + std::to_string(f) +
                              " seed=" + std::to_string(cfg.seed);
            return outcome;
          }
          if (!row.liveness_ok) {
            outcome.exit_code = 4;
            outcome.failure = "liveness failure in cell n=" + std::to_string(n) +
                              " t=" + std::to_string(t) + " f=" + std::to_string(f) +
                              " seed=" + std::to_string(cfg.seed);
            return outcome;
          }
        }
        cells.push_back(agg);
      }
    }
  }

  // Fit the per-cell mean words against the protocol's complexity model.
  std::string model = spec.model;
  if (model == "auto") {
    switch (spec.protocol) {
      case Protocol::ba_psync: model = "n_plus_nf"; break;
      case Protocol::qab_psync:
      case Protocol::composed_psync: model = "n_plus_tf"; break;
      default: model = "nt2logn"; break;
    }
  }
  std::ostringstream summary;
  if (model == "n_plus_nf" || model == "n_plus_tf") {
    std::vector<std::array<double, 3>> rows;
    for (const auto& c : cells) {
      double x2 = model == "n_plus_nf" ? static_cast<double>(c.n) * c.f
                                       : static_cast<double>(c.t) * c.f;
      rows.push_back({static_cast<double>(c.n), x2, c.words_sum / c.count});
    }
    auto fit = fit_two_terms(rows);
    double max_resid = 0;
    for (const auto& [x1, x2, y] : rows) {
      double pred = fit.c1 * x1 + fit.c2 * x2;
      if (y > 0) max_resid = std::max(max_resid, std::abs(y - pred) / y);
    }
    summary << "# model=" << model << " C1=" << fit.c1 << " C2=" << fit.c2
            << " max_residual_ratio=" << max_resid << "\n";
    if (spec.bound_c1 && spec.bound_c2) {
      for (const auto& c : cells) {
        double x2 = model == "n_plus_nf" ? static_cast<double>(c.n) * c.f
                                         : static_cast<double>(c.t) * c.f;
        double bound = *spec.bound_c1 * c.n + *spec.bound_c2 * x2;
        if (c.words_sum / c.count > bound) {
          outcome.exit_code = 5;
          outcome.failure = "word bound breach in cell n=" + std::to_string(c.n) +
                            " t=" + std::to_string(c.t) + " f=" + std::to_string(c.f);
        }
      }
    }
  } else if (model == "nt2logn") {
    std::vector<std::pair<double, double>> xy;
    for (const auto& c : cells) {
      double x = (static_cast<double>(c.n) + static_cast<double>(c.t) * c.t) *
                 std::log2(std::max<double>(c.n, 2));
      xy.push_back({x, c.words_sum / c.count});
    }
    double fit = fit_through_origin(xy);
    double max_ratio = 0;
    for (const auto& [x, y] : xy)
      if (x > 0) max_ratio = std::max(max_ratio, y / x);
    summary << "# model=nt2logn C=" << fit << " max_cell_ratio=" << max_ratio << "\n";
    if (spec.bound_c) {
      for (const auto& [x, y] : xy)
        if (y > *spec.bound_c * x) {
          outcome.exit_code = 5;
          outcome.failure = "word bound breach (nt2logn model)";
        }
    }
  }
  outcome.summary = summary.str();
  return outcome;
}

}  // namespace abq::scenario

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

#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "abq/audit.hpp"
#include "abq/sim.hpp"
#include "abq/trace.hpp"

namespace abq::scenario {

enum class Protocol {
  ba_psync,
  qab_async,
  qab_psync,
  quorum_ba,
  composed_psync,
  composed_async,
};

const char* protocol_name(Protocol p);
std::optional<Protocol> protocol_from(const std::string& name);
bool protocol_is_async(Protocol p);

/// One seeded run: protocol, sizes, fault behaviors, network parameters.
/// Parsed from a flat key=value text file.
struct ScenarioConfig {
  Protocol protocol{Protocol::ba_psync};
  std::uint32_t n{4};
  std::uint32_t t{1};
  std::uint32_t f{0};
  Time delta{1000};
  Time gst{0};
  std::uint64_t seed{1};
  std::uint64_t horizon{0};  // 0 = default (time ticks for psync, events for async)
  sim::SchedulerKind scheduler{sim::SchedulerKind::random_psync};
  bool scheduler_set{false};
  std::string inputs{"mixed"};  // unanimous0 | unanimous1 | mixed | explicit bitstring
  std::string behaviors;        // "0:crash@0,1:equivocator"; empty = first f nodes crash@0
  double expander_c{2.0};
  double relayer_cap_factor{2.0};
  std::optional<std::uint32_t> override_degree;
  std::optional<std::uint32_t> override_relayers;
  std::uint32_t sched_t{0};  // main_lb schedule parameter; 0 = use t
  std::uint64_t fairness{64};
  std::uint32_t quorum_size{0};  // 0 = 3t+1

  void validate() const;  // throws std::invalid_argument
};

ScenarioConfig parse_config(std::istream& in);
ScenarioConfig parse_config_file(const std::string& path);
std::string serialize_config(const ScenarioConfig& cfg);

/// Trusted setup: schemes, quorum, graph, coin, inputs — everything a run
/// needs. Exposed so tests can build custom adversaries around it.
sim::RunSetup make_setup(const ScenarioConfig& cfg);
sim::AdversaryPolicy make_adversary(const ScenarioConfig& cfg);
sim::NodeFactory factory_for(Protocol p);
sim::RunOptions run_options_for(const ScenarioConfig& cfg);
audit::AuditOptions audit_options_for(const ScenarioConfig& cfg, const sim::RunSetup& setup);

struct RunResult {
  sim::RunSetup setup;  // keeps schemes/graph alive for re-audits
  Trace trace;
  audit::AuditReport report;
};

RunResult run_scenario(const ScenarioConfig& cfg);

/// One CSV row of the measurement harness.
struct MetricsRow {
  std::string protocol;
  std::uint32_t n{0}, t{0}, f{0};
  std::uint64_t seed{0};
  std::int64_t words_total{0};
  std::int64_t words_after_gst{0};
  std::int64_t views_to_global_decision{0};
  std::int64_t rounds{0};
  int decided_value{-1};
  bool safety_ok{false};
  bool liveness_ok{false};

  static const char* csv_header();
  std::string csv_line() const;
};

MetricsRow make_metrics(const ScenarioConfig& cfg, const Trace& trace,
                        const audit::AuditReport& report);

/// Least squares y ~ C*x through the origin.
double fit_through_origin(const std::vector<std::pair<double, double>>& xy);
/// Least squares y ~ c1*x1 + c2*x2 (normal equations).
struct TwoTermFit {
  double c1{0}, c2{0};
};
TwoTermFit fit_two_terms(const std::vector<std::array<double, 3>>& rows);  // x1, x2, y

/// Parameter sweep: ranges over n, t, f with several seeds per cell.
struct SweepSpec {
  Protocol protocol{Protocol::ba_psync};
  std::vector<std::uint32_t> ns;
  std::vector<std::string> ts;  // number | "max3" (= floor((n-1)/3))
  std::vector<std::string> fs;  // number | "half" (= t/2) | "t"
  std::uint32_t seeds{10};
  std::uint64_t seed0{1};
  Time delta{1000};
  Time gst{0};
  std::string behavior{"crash"};  // applied to the first f nodes of each cell
  std::string inputs{"mixed"};
  sim::SchedulerKind scheduler{sim::SchedulerKind::random_psync};
  bool scheduler_set{false};
  double expander_c{2.0};
  double relayer_cap_factor{2.0};
  std::string model{"auto"};  // n_plus_nf | n_plus_tf | nt2logn | auto | none
  std::optional<double> bound_c;        // single-predictor word bound (exit 5 on breach)
  std::optional<double> bound_c1, bound_c2;  // two-term word bound
};

SweepSpec parse_sweep(std::istream& in);

struct SweepOutcome {
  std::vector<MetricsRow> rows;
  std::string summary;
  int exit_code{0};  // 0 ok, 3 safety, 4 liveness, 5 bound breach
  std::string failure;
};

SweepOutcome run_sweep(const SweepSpec& spec);

}  // namespace abq::scenario

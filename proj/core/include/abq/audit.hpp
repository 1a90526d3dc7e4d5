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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "abq/expander.hpp"
#include "abq/sim.hpp"
#include "abq/trace.hpp"

namespace abq::audit {

/// What to check; everything is re-derived from the trace, never taken from
/// protocol self-reports.
struct AuditOptions {
  const crypto::SchemeSet* schemes{nullptr};  // enables the capability audit

  bool check_psync_bound{false};  // Deliver(m) <= max(send, gst) + delta

  /// Liveness deadline: all honest decide by (ceil(gst/(L*delta)) + views) *
  /// L*delta. Unset = only completion is required.
  std::optional<std::uint32_t> view_len;
  std::optional<std::uint32_t> liveness_views;

  /// QAB checks: expected decision value, and (graph mode) the Theorem-5
  /// termination decomposition.
  std::optional<BinValue> qab_expected;
  const expander::BipartiteGraph* graph{nullptr};

  /// main_lb schedule verification (value = the schedule's own t parameter).
  std::optional<std::uint32_t> main_sched_t;

  /// async fairness bound to verify (async_random scheduler runs).
  std::optional<std::uint64_t> fairness_bound;
};

struct AuditReport {
  bool agreement{true};
  bool unanimity{true};
  bool liveness{true};
  bool delivery{true};
  bool psync_bound{true};
  bool capability{true};
  bool proof_unique{true};  // per-view and whole-run commit uniqueness
  bool qab_value{true};
  bool qab_decomposition{true};
  bool main_delays{true};
  bool fairness{true};
  std::vector<std::string> violations;
  std::map<std::uint32_t, std::uint32_t> main_withheld_counts;  // per C-member

  bool safety_ok() const {
    return agreement && unanimity && capability && proof_unique && qab_value;
  }
  bool liveness_ok() const { return liveness; }
  bool all_ok() const {
    return safety_ok() && liveness && delivery && psync_bound && qab_decomposition && main_delays &&
           fairness;
  }
};

AuditReport audit_trace(const Trace& trace, const AuditOptions& options);

/// File-level audit over a JSONL event stream: agreement over decide tags,
/// at most one decision per node, send/deliver matching, and (when delta is
/// positive) the psync delivery bound.
struct FileAuditResult {
  bool agreement{true};
  bool single_decision{true};
  bool delivery{true};
  bool psync_bound{true};
  std::vector<std::string> violations;
  bool ok() const { return agreement && single_decision && delivery && psync_bound; }
};
FileAuditResult audit_jsonl(const std::vector<JsonlEvent>& events, Time delta = 0, Time gst = 0);

}  // namespace abq::audit

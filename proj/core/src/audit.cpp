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

#include "abq/audit.hpp"

#include <algorithm>
#include <sstream>

#include "abq/qab.hpp"

namespace abq::audit {

namespace {

void fail(AuditReport& report, bool AuditReport::*flag, std::string message) {
  report.*flag = false;
  report.violations.push_back(std::move(message));
}

std::string node_str(NodeId p) { return "p" + std::to_string(p.index); }

// ---- agreement / unanimity / liveness ----

void check_decisions(const Trace& trace, const AuditOptions& opts, AuditReport& report) {
  std::optional<BinValue> first;
  for (const auto& [idx, d] : trace.decisions) {
    if (trace.is_corrupted(NodeId{idx})) continue;
    if (!first) {
      first = d.value;
    } else if (*first != d.value) {
      fail(report, &AuditReport::agreement, "agreement: conflicting honest decisions");
    }
  }

  std::optional<BinValue> common_input;
  bool unanimous = true;
  for (std::size_t i = 0; i < trace.inputs.size(); ++i) {
    if (trace.is_corrupted(NodeId{static_cast<std::uint32_t>(i)})) continue;
    if (!common_input)
      common_input = trace.inputs[i];
    else if (*common_input != trace.inputs[i])
      unanimous = false;
  }
  if (unanimous && common_input) {
    for (const auto& [idx, d] : trace.decisions) {
      if (trace.is_corrupted(NodeId{idx})) continue;
      if (d.value != *common_input)
        fail(report, &AuditReport::unanimity, "unanimity: decision differs from unanimous input");
    }
  }

  if (opts.qab_expected) {
    for (const auto& [idx, d] : trace.decisions) {
      if (trace.is_corrupted(NodeId{idx})) continue;
      if (d.value != *opts.qab_expected)
        fail(report, &AuditReport::qab_value, "qab: honest decision differs from v_in");
    }
  }

  if (!trace.all_honest_decided() || trace.horizon_exceeded) {
    fail(report, &AuditReport::liveness, "liveness: run did not complete with all honest decided");
    return;
  }
  if (opts.view_len && opts.liveness_views) {
    Time period = trace.params.delta * static_cast<Time>(*opts.view_len);
    Time gst_boundary = ((trace.params.gst + period - 1) / period) * period;
    Time deadline = gst_boundary + static_cast<Time>(*opts.liveness_views) * period;
    for (const auto& [idx, d] : trace.decisions) {
      if (trace.is_corrupted(NodeId{idx})) continue;
      if (d.time > deadline)
        fail(report, &AuditReport::liveness,
             "liveness: " + node_str(NodeId{idx}) + " decided after the view deadline");
    }
  }
}

// ---- per-message bookkeeping shared by several checks ----

struct MessageLog {
  struct Entry {
    Time send_time{-1};
    Time deliver_time{-1};
    std::uint64_t send_seq{0};
    std::uint64_t deliver_seq{0};
    NodeId sender;
    NodeId receiver;
    const msg::ProtocolMessage* message{nullptr};
  };
  std::map<std::uint64_t, Entry> by_id;

  explicit MessageLog(const Trace& trace) {
    for (const auto& e : trace.events) {
      if (!e.message) continue;
      auto& entry = by_id[e.message->id];
      if (e.kind == EventKind::send) {
        entry.send_time = e.time;
        entry.send_seq = e.seq;
        entry.sender = e.message->sender;
        entry.receiver = e.message->receiver;
        entry.message = &*e.message;
      } else if (e.kind == EventKind::deliver) {
        entry.deliver_time = e.time;
        entry.deliver_seq = e.seq;
      }
    }
  }
};

void check_delivery(const Trace& trace, const AuditOptions& opts, const MessageLog& log,
                    AuditReport& report) {
  for (const auto& [id, m] : log.by_id) {
    bool honest_sender = !trace.is_corrupted(m.sender);
    if (m.deliver_time < 0) {
      if (honest_sender && trace.completed)
        fail(report, &AuditReport::delivery,
             "delivery: honest message #" + std::to_string(id) + " from " + node_str(m.sender) +
                 " never delivered");
      continue;
    }
    if (opts.check_psync_bound) {
      Time bound = std::max(m.send_time, trace.params.gst) + trace.params.delta;
      if (m.deliver_time > bound)
        fail(report, &AuditReport::psync_bound,
             "psync bound: message #" + std::to_string(id) + " delivered past max(s,gst)+delta");
    }
  }
}

// ---- capability audit ----

void check_capability(const Trace& trace, const AuditOptions& opts, AuditReport& report) {
  if (!opts.schemes || !trace.signing_log) return;
  const auto& log = *trace.signing_log;

  auto check_partial = [&](const crypto::PartialSig& p) {
    if (trace.is_corrupted(p.signer)) return;
    if (!log.contains(p.signer, p.scheme, p.digest))
      fail(report, &AuditReport::capability,
           "capability: partial signature of honest " + node_str(p.signer) + " on scheme " + p.scheme +
               " without a signing event");
  };
  auto check_threshold = [&](const crypto::ThresholdSig& sig) {
    const auto* scheme = opts.schemes->by_label(sig.scheme);
    if (!scheme) {
      fail(report, &AuditReport::capability, "capability: unknown scheme label " + sig.scheme);
      return;
    }
    if (!crypto::tverify(*scheme, sig.digest, sig)) {
      fail(report, &AuditReport::capability, "capability: non-verifying threshold signature in trace");
      return;
    }
    for (auto s : sig.signers) {
      if (trace.is_corrupted(s)) continue;
      if (!log.contains(s, sig.scheme, sig.digest))
        fail(report, &AuditReport::capability,
             "capability: threshold signature names honest " + node_str(s) +
                 " who never signed (scheme " + sig.scheme + ")");
    }
  };

  for (const auto& e : trace.events) {
    if (e.kind != EventKind::send || !e.message) continue;
    msg::for_each_signature(e.message->payload, check_partial, check_threshold);
  }
}

// ---- per-view and whole-run proof uniqueness ----

void note_proof(std::map<std::pair<int, std::uint64_t>, BinValue>& seen, AuditReport& report, int phase,
                ViewNumber view, BinValue value) {
  auto key = std::make_pair(phase, view.value);
  auto [it, inserted] = seen.emplace(key, value);
  if (!inserted && it->second != value)
    fail(report, &AuditReport::proof_unique, "proofs: two values proven in one view, phase " +
                                                 std::to_string(phase) + " view " +
                                                 std::to_string(view.value));
}

void check_proofs(const Trace& trace, AuditReport& report) {
  std::map<std::pair<int, std::uint64_t>, BinValue> seen;  // (phase, view) -> value
  std::optional<BinValue> commit_value;

  auto note_commit = [&](const CommitProof& proof) {
    note_proof(seen, report, 2, proof.view, proof.value);
    if (!commit_value)
      commit_value = proof.value;
    else if (*commit_value != proof.value)
      fail(report, &AuditReport::proof_unique, "proofs: two distinct committed values in one run");
  };
  auto note_evidence = [&](const Evidence& ev) {
    if (const auto* c = std::get_if<CommitProof>(&ev)) note_commit(*c);
  };

  for (const auto& e : trace.events) {
    if (e.kind != EventKind::send || !e.message) continue;
    const auto& payload = e.message->payload;
    ViewNumber view = e.message->view;
    if (const auto* sg = std::get_if<msg::Suggest>(&payload)) {
      if (const auto* c = std::get_if<msg::SuggestCommit>(&sg->body)) note_commit(c->proof);
      if (const auto* k = std::get_if<msg::SuggestKey>(&sg->body))
        note_proof(seen, report, 0, k->proof.view, k->proof.value);
    } else if (const auto* pk = std::get_if<msg::ProposeKey>(&payload)) {
      if (const auto* kj = std::get_if<msg::KeyJust>(&pk->just))
        note_proof(seen, report, 0, kj->key.view, kj->key.value);
    } else if (const auto* pl = std::get_if<msg::ProposeLock>(&payload)) {
      note_proof(seen, report, 0, view, pl->value);  // key proof formed in this view
    } else if (const auto* pc = std::get_if<msg::ProposeCommit>(&payload)) {
      note_proof(seen, report, 1, view, pc->value);  // lock proof formed in this view
    } else if (const auto* sc = std::get_if<msg::SendCommit>(&payload)) {
      note_commit(sc->proof);
    } else if (const auto* qv = std::get_if<msg::QabValue>(&payload)) {
      note_evidence(qv->value.evidence);
    } else if (const auto* qd = std::get_if<msg::QabDirect>(&payload)) {
      note_evidence(qd->value.evidence);
    } else if (const auto* qr = std::get_if<msg::QabReply>(&payload)) {
      note_evidence(qr->value.evidence);
    } else if (const auto* qb = std::get_if<msg::QabBroadcast>(&payload)) {
      note_evidence(qb->value.evidence);
    }
  }
}

// ---- QAB termination decomposition (the three proof steps) ----

void check_qab_decomposition(const Trace& trace, const AuditOptions& opts, AuditReport& report) {
  if (!opts.graph) return;
  const auto& g = *opts.graph;
  std::set<NodeId> faulty(trace.corrupted.begin(), trace.corrupted.end());

  auto blocked = expander::blocked_relayers(g, faulty);
  auto disconnected = expander::disconnected_parties(g, faulty);
  if (disconnected.size() > 2 * trace.params.t)
    fail(report, &AuditReport::qab_decomposition,
         "qab: " + std::to_string(disconnected.size()) + " disconnected parties exceeds 2t");

  if (!trace.completed) return;

  // (II) every connected honest party eventually hears the value from an
  // unblocked relayer; (III) every honest quorum node accumulates
  // certificates covering at least n-2t parties by run end.
  std::set<std::uint32_t> heard_from_unblocked;
  std::map<std::uint32_t, std::set<std::uint32_t>> certs_delivered;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::deliver || !e.message) continue;
    if (const auto* qv = std::get_if<msg::QabValue>(&e.message->payload)) {
      if (!qv->from_quorum && !blocked.count(qv->relayer))
        heard_from_unblocked.insert(e.message->receiver.index);
    } else if (const auto* cert = std::get_if<msg::QabCert>(&e.message->payload)) {
      certs_delivered[e.message->receiver.index].insert(cert->relayer);
    }
  }
  for (std::uint32_t p = 0; p < trace.params.n; ++p) {
    NodeId id{p};
    if (trace.is_corrupted(id) || disconnected.count(id)) continue;
    if (!heard_from_unblocked.count(p))
      fail(report, &AuditReport::qab_decomposition,
           "qab: connected honest " + node_str(id) + " never heard from an unblocked relayer");
  }

  std::uint32_t threshold = trace.params.n - 2 * trace.params.t;
  for (const auto& [qidx, relayers] : certs_delivered) {
    if (trace.is_corrupted(NodeId{qidx})) continue;
    std::set<std::uint32_t> covered;
    for (auto r : relayers)
      for (auto p : qab::committee_of(g, r)) covered.insert(p.index);
    if (covered.size() < threshold)
      fail(report, &AuditReport::qab_decomposition,
           "qab: quorum node " + std::to_string(qidx) + " covered only " +
               std::to_string(covered.size()) + " parties");
  }
}

// ---- main_lb schedule verification ----

void check_main_delays(const Trace& trace, const AuditOptions& opts, const MessageLog& log,
                       AuditReport& report) {
  if (!opts.main_sched_t) return;
  auto c_set = sim::main_schedule_c_set(trace.params.n, *opts.main_sched_t);
  std::uint32_t quota = *opts.main_sched_t / 2;

  auto last_decision = trace.last_honest_decision();
  if (!last_decision) {
    fail(report, &AuditReport::main_delays, "main: run did not reach a global decision");
    return;
  }
  for (const auto& note : trace.notes)
    if (note == "main-early-release")
      fail(report, &AuditReport::main_delays, "main: withheld messages released before the decision");

  // Replay the schedule's classification in event order.
  std::set<std::uint64_t> withheld;
  std::map<std::uint32_t, std::uint32_t> b_to_c;
  std::size_t honest_total = trace.honest_count();
  std::set<std::uint32_t> decided;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::decide && !trace.is_corrupted(e.node)) decided.insert(e.node.index);
    if (e.kind != EventKind::send || !e.message) continue;
    if (decided.size() >= honest_total) break;
    const auto& m = *e.message;
    if (m.sender == m.receiver) continue;
    bool from_c = c_set.count(m.sender) > 0;
    bool to_c = c_set.count(m.receiver) > 0;
    if (from_c && to_c) {
      withheld.insert(m.id);
    } else if (!from_c && to_c) {
      auto& count = b_to_c[m.receiver.index];
      if (count < quota) {
        ++count;
        withheld.insert(m.id);
      }
    }
  }
  report.main_withheld_counts = b_to_c;

  for (auto id : withheld) {
    auto it = log.by_id.find(id);
    if (it == log.by_id.end()) continue;
    if (it->second.deliver_time >= 0 && it->second.deliver_time <= *last_decision)
      fail(report, &AuditReport::main_delays,
           "main: withheld message #" + std::to_string(id) + " delivered before the global decision");
  }
}

// ---- async fairness ----

void check_fairness(const AuditOptions& opts, const MessageLog& log,
                    AuditReport& report) {
  if (!opts.fairness_bound) return;
  // Deliveries in trace order, tagged with the send index of the delivered
  // message. For each message, the number of deliveries of newer messages
  // (higher send index) between its send and its delivery must stay within
  // the bound.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> delivers;  // (deliver_seq, msg id)
  for (const auto& [id, m] : log.by_id)
    if (m.deliver_time >= 0) delivers.push_back({m.deliver_seq, id});
  std::sort(delivers.begin(), delivers.end());

  for (const auto& [id, m] : log.by_id) {
    if (m.deliver_time < 0) continue;
    std::uint64_t newer = 0;
    for (const auto& [dseq, did] : delivers) {
      if (dseq <= m.send_seq) continue;
      if (dseq >= m.deliver_seq) break;
      if (did > id) ++newer;
    }
    if (newer > *opts.fairness_bound)
      fail(report, &AuditReport::fairness,
           "fairness: message #" + std::to_string(id) + " overtaken by " + std::to_string(newer) +
               " newer deliveries");
  }
}

}  // namespace

AuditReport audit_trace(const Trace& trace, const AuditOptions& opts) {
  AuditReport report;
  MessageLog log(trace);
  check_decisions(trace, opts, report);
  check_delivery(trace, opts, log, report);
  check_capability(trace, opts, report);
  check_proofs(trace, report);
  check_qab_decomposition(trace, opts, report);
  check_main_delays(trace, opts, log, report);
  check_fairness(opts, log, report);
  return report;
}

FileAuditResult audit_jsonl(const std::vector<JsonlEvent>& events, Time delta, Time gst) {
  FileAuditResult result;
  std::map<std::uint32_t, std::string> decisions;
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::string>, std::vector<Time>> sends, delivers;

  for (const auto& e : events) {
    if (e.kind == "Decide") {
      auto [it, inserted] = decisions.emplace(e.from, e.tag);
      if (!inserted) {
        result.single_decision = false;
        result.violations.push_back("node " + std::to_string(e.from) + " decided twice");
      }
    } else if (e.kind == "Send") {
      sends[{e.from, e.to, e.tag}].push_back(e.time);
    } else if (e.kind == "Deliver") {
      delivers[{e.from, e.to, e.tag}].push_back(e.time);
    }
  }
  std::optional<std::string> value;
  for (const auto& [node, tag] : decisions) {
    if (!value)
      value = tag;
    else if (*value != tag) {
      result.agreement = false;
      result.violations.push_back("conflicting decide tags");
      break;
    }
  }
  for (auto& [key, s] : sends) {
    auto& d = delivers[key];
    if (d.size() < s.size()) {
      result.delivery = false;
      result.violations.push_back("unmatched sends on a channel");
    }
    if (delta > 0) {
      std::sort(s.begin(), s.end());
      std::sort(d.begin(), d.end());
      for (std::size_t i = 0; i < std::min(s.size(), d.size()); ++i)
        if (d[i] > std::max(s[i], gst) + delta) {
          result.psync_bound = false;
          result.violations.push_back("delivery past max(s,gst)+delta");
          break;
        }
    }
  }
  return result;
}

}  // namespace abq::audit

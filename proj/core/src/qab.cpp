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

#include "abq/qab.hpp"

#include <algorithm>

namespace abq::qab {

std::vector<NodeId> committee_of(const expander::BipartiteGraph& g, std::uint32_t relayer) {
  std::vector<NodeId> committee;
  for (std::uint32_t p = 0; p < g.n_left; ++p)
    if (std::binary_search(g.adj[p].begin(), g.adj[p].end(), relayer)) committee.push_back(NodeId{p});
  NodeId host = g.host(relayer);
  if (!std::binary_search(committee.begin(), committee.end(), host)) {
    committee.push_back(host);
    std::sort(committee.begin(), committee.end());
  }
  return committee;
}

// ---------------------------------------------------------------------------

QabAsyncNode::QabAsyncNode(NodeId self, const sim::RunSetup& setup)
    : self_(self), is_quorum_(setup.in_quorum(self)) {
  if (setup.graph) {
    for (std::uint32_t r = self.index; r < setup.graph->n_right; r += setup.graph->n_left)
      hosted_.emplace(r, RelayerRole{});
  }
}

void QabAsyncNode::on_start(sim::Context& ctx) {
  if (is_quorum_ && ctx.setup().qab_input) initiate(ctx, *ctx.setup().qab_input);
}

void QabAsyncNode::initiate(sim::Context& ctx, CertifiedValue v) {
  if (!is_quorum_ || initiated_) return;
  initiated_ = true;
  value_ = v;
  decide_local(ctx, v);
  const auto& setup = ctx.setup();
  if (!setup.graph) {
    // Direct fallback: the relayer layer would be larger than the cap, so
    // the quorum disseminates point-to-point at O(q*n) words.
    for (std::uint32_t p = 0; p < setup.params.n; ++p)
      ctx.send(NodeId{p}, ViewNumber{}, msg::QabDirect{v});
    return;
  }
  for (std::uint32_t r = 0; r < setup.graph->n_right; ++r)
    ctx.send(setup.graph->host(r), ViewNumber{}, msg::QabValue{v, r, true});
}

void QabAsyncNode::decide_local(sim::Context& ctx, const CertifiedValue& v) {
  if (decided_) return;
  decided_ = v.value;
  ctx.decide(v.value);
}

void QabAsyncNode::on_message(sim::Context& ctx, const msg::ProtocolMessage& m) {
  const auto& setup = ctx.setup();
  const auto verify_fn = setup.qab_verify;
  auto verified = [&](const CertifiedValue& v) { return verify_fn && verify_fn(v); };

  if (const auto* qv = std::get_if<msg::QabValue>(&m.payload)) {
    if (qv->from_quorum) {
      // Relayer side of stage 1: first verified value is forwarded to the
      // committee, later receipts are no-ops.
      auto it = hosted_.find(qv->relayer);
      if (it == hosted_.end() || !setup.in_quorum(m.sender)) return;
      if (!verified(qv->value)) return;  // sender Byzantine: drop silently
      auto& role = it->second;
      if (role.value) return;
      role.value = qv->value;
      for (auto p : committee_of(*setup.graph, qv->relayer))
        ctx.send(p, ViewNumber{}, msg::QabValue{qv->value, qv->relayer, false});
    } else {
      // Party side of stage 2: decide, then ack to this relayer, once per
      // relayer.
      if (!setup.graph || qv->relayer >= setup.graph->n_right) return;
      if (m.sender != setup.graph->host(qv->relayer)) return;
      if (!verified(qv->value)) return;
      decide_local(ctx, qv->value);
      if (!acked_relayers_.insert(qv->relayer).second) return;
      const auto* scheme = setup.schemes.by_label("AGG" + std::to_string(qv->relayer));
      if (!scheme || !scheme->is_participant(self_)) return;
      auto partial = ctx.keychain().tsign(*scheme, crypto::digest_ack(qv->value.value));
      ctx.send(m.sender, ViewNumber{}, msg::QabAck{qv->value.value, qv->relayer, partial});
    }
    return;
  }

  if (const auto* ack = std::get_if<msg::QabAck>(&m.payload)) {
    auto it = hosted_.find(ack->relayer);
    if (it == hosted_.end()) return;
    auto& role = it->second;
    if (!role.value || role.cert_sent) return;
    if (ack->value != role.value->value) return;
    if (ack->partial.signer != m.sender) return;
    const auto* scheme = setup.schemes.by_label("AGG" + std::to_string(ack->relayer));
    if (!scheme || !crypto::verify_partial(*scheme, crypto::digest_ack(ack->value), ack->partial))
      return;
    role.acks.emplace(m.sender.index, ack->partial);
    if (role.acks.size() < scheme->k) return;  // needs every committee member
    std::vector<crypto::PartialSig> partials;
    for (const auto& [idx, p] : role.acks) partials.push_back(p);
    auto sig = crypto::tcombine(*scheme, crypto::digest_ack(ack->value), partials);
    role.cert_sent = true;
    for (auto q : setup.quorum)
      ctx.send(q, ViewNumber{}, msg::QabCert{ack->value, ack->relayer, sig});
    return;
  }

  if (const auto* cert = std::get_if<msg::QabCert>(&m.payload)) {
    // Stage 3, quorum side: a verified full-committee certificate proves the
    // whole committee knows the value.
    if (!is_quorum_ || !initiated_ || !setup.graph) return;
    if (cert->relayer >= setup.graph->n_right) return;
    if (m.sender != setup.graph->host(cert->relayer)) return;
    if (cert->value != value_->value) return;
    const auto* scheme = setup.schemes.by_label("AGG" + std::to_string(cert->relayer));
    if (!scheme || !crypto::tverify(*scheme, crypto::digest_ack(cert->value), cert->sig)) return;
    for (auto p : committee_of(*setup.graph, cert->relayer)) acknowledged_.insert(p.index);
    std::uint32_t threshold = setup.params.n - 2 * setup.params.t;
    if (!direct_fired_ && acknowledged_.size() >= threshold) {
      direct_fired_ = true;
      for (std::uint32_t p = 0; p < setup.params.n; ++p)
        if (!acknowledged_.count(p)) ctx.send(NodeId{p}, ViewNumber{}, msg::QabDirect{*value_});
    }
    return;
  }

  if (const auto* direct = std::get_if<msg::QabDirect>(&m.payload)) {
    if (!setup.in_quorum(m.sender)) return;
    if (!verified(direct->value)) return;
    decide_local(ctx, direct->value);
    return;
  }
}

// ---------------------------------------------------------------------------

QabPsyncNode::QabPsyncNode(NodeId self, const sim::RunSetup& setup, Options opts)
    : self_(self), is_quorum_(setup.in_quorum(self)), opts_(opts) {}

void QabPsyncNode::on_start(sim::Context& ctx) {
  if (is_quorum_ && ctx.setup().qab_input) initiate(ctx, *ctx.setup().qab_input);
  maybe_enter_view(ctx);
}

void QabPsyncNode::initiate(sim::Context& ctx, CertifiedValue v) {
  if (!is_quorum_ || initiated_) return;
  initiated_ = true;
  value_ = v;
  decide_local(ctx, v);
}

void QabPsyncNode::decide_local(sim::Context& ctx, const CertifiedValue& v) {
  if (decided_) return;
  decided_ = v.value;
  ctx.decide(v.value);
}

void QabPsyncNode::maybe_enter_view(sim::Context& ctx) {
  auto v = sim::view_at(ctx.now(), ctx.setup().params.delta, sim::kQabViewLen);
  if (started_ && v == view_) return;
  started_ = true;
  view_ = v;
  ctx.note_view(v);
  ctx.schedule_wakeup(sim::next_view_boundary(ctx.now(), ctx.setup().params.delta, sim::kQabViewLen));
  if (!decided_ && opts_.act_as_leader && leader_of(v, ctx.setup().params.n) == self_) {
    for (auto q : ctx.setup().quorum) ctx.send(q, v, msg::QabRequest{});
  }
}

void QabPsyncNode::on_wakeup(sim::Context& ctx) { maybe_enter_view(ctx); }

void QabPsyncNode::on_message(sim::Context& ctx, const msg::ProtocolMessage& m) {
  maybe_enter_view(ctx);
  const auto verify_fn = ctx.setup().qab_verify;
  auto verified = [&](const CertifiedValue& v) { return verify_fn && verify_fn(v); };

  if (std::holds_alternative<msg::QabRequest>(m.payload)) {
    // A quorum node answers each requester at most once, ever. Requests that
    // arrive before the value is held are dropped; a later view repeats them.
    if (!is_quorum_ || !initiated_) return;
    if (!served_.insert(m.sender.index).second) return;
    ctx.send(m.sender, view_, msg::QabReply{*value_});
    return;
  }
  if (const auto* reply = std::get_if<msg::QabReply>(&m.payload)) {
    if (!ctx.setup().in_quorum(m.sender)) return;
    if (!verified(reply->value)) return;
    decide_local(ctx, reply->value);
    if (!broadcast_done_) {
      broadcast_done_ = true;
      for (std::uint32_t p = 0; p < ctx.setup().params.n; ++p)
        ctx.send(NodeId{p}, view_, msg::QabBroadcast{reply->value});
    }
    return;
  }
  if (const auto* bc = std::get_if<msg::QabBroadcast>(&m.payload)) {
    if (!verified(bc->value)) return;
    decide_local(ctx, bc->value);
    return;
  }
}

// ---------------------------------------------------------------------------

sim::NodeFactory qab_async_factory() {
  return [](NodeId id, const sim::RunSetup& setup, const sim::ByzantineBehavior&)
             -> std::unique_ptr<sim::INode> { return std::make_unique<QabAsyncNode>(id, setup); };
}

sim::NodeFactory qab_psync_factory() {
  return [](NodeId id, const sim::RunSetup& setup, const sim::ByzantineBehavior& behavior)
             -> std::unique_ptr<sim::INode> {
    QabPsyncNode::Options opts;
    if (behavior.kind == sim::BehaviorKind::silent_leader) opts.act_as_leader = false;
    return std::make_unique<QabPsyncNode>(id, setup, opts);
  };
}

}  // namespace abq::qab

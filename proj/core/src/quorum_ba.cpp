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

#include "abq/quorum_ba.hpp"

namespace abq::qba {

QuorumBaNode::QuorumBaNode(NodeId self, BinValue input, std::vector<NodeId> quorum,
                           crypto::SchemeId quorum_scheme, std::uint32_t t, Hooks hooks)
    : self_(self),
      est_(input),
      quorum_(std::move(quorum)),
      scheme_(std::move(quorum_scheme)),
      t_(t),
      hooks_(std::move(hooks)) {}

void QuorumBaNode::broadcast(sim::Context& ctx, msg::Payload payload) {
  for (auto q : quorum_) ctx.send(q, ViewNumber{round_}, payload);
}

void QuorumBaNode::on_start(sim::Context& ctx) { enter_round(ctx, 0); }

void QuorumBaNode::enter_round(sim::Context& ctx, std::uint32_t round) {
  if (halted_) return;
  round_ = round;
  auto& t = tally(round);
  if (!t.echoed[bit_of(est_)]) {
    t.echoed[bit_of(est_)] = true;
    broadcast(ctx, msg::Est{round, est_});
  }
  try_progress(ctx, round);
}

void QuorumBaNode::on_message(sim::Context& ctx, const msg::ProtocolMessage& m) {
  if (halted_) return;
  if (const auto* est = std::get_if<msg::Est>(&m.payload)) return handle_est(ctx, m.sender, *est);
  if (const auto* aux = std::get_if<msg::Aux>(&m.payload)) return handle_aux(ctx, m.sender, *aux);
  if (const auto* share = std::get_if<msg::DecShare>(&m.payload)) {
    if (share->partial.signer != m.sender) return;
    if (!crypto::verify_partial(scheme_, crypto::digest_decide(share->value), share->partial)) return;
    auto& pool = share_pool_[bit_of(share->value)];
    pool.emplace(m.sender.index, share->partial);
    if (pool.size() >= scheme_.k) {
      std::vector<crypto::PartialSig> partials;
      for (const auto& [idx, p] : pool) partials.push_back(p);
      DecisionCert cert{share->value,
                        crypto::tcombine(scheme_, crypto::digest_decide(share->value), partials)};
      hold_cert(ctx, cert, true);
    }
    return;
  }
  if (const auto* dc = std::get_if<msg::DecCert>(&m.payload)) {
    if (verify_decision_cert(scheme_, dc->cert)) hold_cert(ctx, dc->cert, false);
    return;
  }
}

void QuorumBaNode::handle_est(sim::Context& ctx, NodeId from, const msg::Est& est) {
  auto& t = tally(est.round);
  auto& senders = t.est_from[bit_of(est.value)];
  if (!senders.insert(from.index).second) return;

  // Echo after t+1 receipts, admit to bin_values after 2t+1. Both apply to
  // any round: a node can support a round it has not reached yet.
  if (senders.size() >= t_ + 1 && !t.echoed[bit_of(est.value)]) {
    t.echoed[bit_of(est.value)] = true;
    ViewNumber saved_round{est.round};
    for (auto q : quorum_) ctx.send(q, saved_round, msg::Est{est.round, est.value});
  }
  if (senders.size() >= 2 * t_ + 1 && !t.bin_values.count(bit_of(est.value))) {
    t.bin_values.insert(bit_of(est.value));
    if (est.round == round_) try_progress(ctx, est.round);
  }
}

void QuorumBaNode::handle_aux(sim::Context& ctx, NodeId from, const msg::Aux& aux) {
  auto& t = tally(aux.round);
  t.aux_from.emplace(from.index, bit_of(aux.value));
  if (aux.round == round_) try_progress(ctx, aux.round);
}

void QuorumBaNode::try_progress(sim::Context& ctx, std::uint32_t round) {
  if (halted_ || round != round_) return;
  auto& t = tally(round);

  if (!t.aux_sent && !t.bin_values.empty()) {
    t.aux_sent = true;
    broadcast(ctx, msg::Aux{round, make_bin(*t.bin_values.begin())});
  }
  if (t.advanced || t.bin_values.empty()) return;

  // Rule (c): q-t AUX messages whose values all lie in bin_values.
  std::set<int> values;
  std::size_t supporting = 0;
  for (const auto& [sender, v] : t.aux_from) {
    if (t.bin_values.count(v)) {
      ++supporting;
      values.insert(v);
    }
  }
  if (supporting < scheme_.k) return;

  t.advanced = true;
  BinValue coin = ctx.setup().coin->bit(round);
  if (values.size() == 1) {
    BinValue v = make_bin(*values.begin());
    est_ = v;
    if (v == coin && !decided_) decide(ctx, v);
  } else {
    est_ = coin;
  }
  enter_round(ctx, round + 1);
}

void QuorumBaNode::decide(sim::Context& ctx, BinValue v) {
  decided_ = v;
  if (hooks_.on_decide)
    hooks_.on_decide(ctx, v);
  else
    ctx.decide(v);
  if (!share_sent_) {
    share_sent_ = true;
    broadcast(ctx, msg::DecShare{v, ctx.keychain().tsign(scheme_, crypto::digest_decide(v))});
  }
}

void QuorumBaNode::hold_cert(sim::Context& ctx, const DecisionCert& cert, bool rebroadcast) {
  if (halted_) return;
  halted_ = true;
  if (!decided_) {
    decided_ = cert.value;
    if (hooks_.on_decide)
      hooks_.on_decide(ctx, cert.value);
    else
      ctx.decide(cert.value);
  }
  if (rebroadcast) broadcast(ctx, msg::DecCert{cert});
  if (hooks_.on_halt) hooks_.on_halt(ctx, cert.value, cert);
}

sim::NodeFactory quorum_ba_factory() {
  return [](NodeId id, const sim::RunSetup& setup, const sim::ByzantineBehavior& behavior)
             -> std::unique_ptr<sim::INode> {
    std::vector<NodeId> quorum;
    quorum.reserve(setup.params.n);
    for (std::uint32_t i = 0; i < setup.params.n; ++i) quorum.push_back(NodeId{i});
    BinValue input = behavior.forced_input.value_or(setup.inputs[id.index]);
    // Corrupted kinds other than crash/scripted_ignore run the honest logic;
    // quorum faults in the test matrix are silence-style.
    return std::make_unique<QuorumBaNode>(id, input, quorum, *setup.schemes.quorum, setup.params.t);
  };
}

}  // namespace abq::qba

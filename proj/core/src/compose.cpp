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

#include "abq/compose.hpp"

namespace abq::compose {

std::vector<NodeId> default_quorum(std::uint32_t n, std::uint32_t t) {
  std::uint32_t q = 3 * t + 1;
  if (q > n) throw std::invalid_argument("quorum 3t+1 exceeds n");
  std::vector<NodeId> quorum;
  quorum.reserve(q);
  for (std::uint32_t i = 0; i < q; ++i) quorum.push_back(NodeId{i});
  return quorum;
}

std::function<bool(const CertifiedValue&)> commit_verify_predicate(crypto::SchemeId inner_global) {
  return [scheme = std::move(inner_global)](const CertifiedValue& v) {
    const auto* proof = std::get_if<CommitProof>(&v.evidence);
    return proof && proof->value == v.value && verify_commit(scheme, *proof);
  };
}

std::function<bool(const CertifiedValue&)> cert_verify_predicate(crypto::SchemeId quorum_scheme) {
  return [scheme = std::move(quorum_scheme)](const CertifiedValue& v) {
    const auto* cert = std::get_if<DecisionCert>(&v.evidence);
    return cert && cert->value == v.value && verify_decision_cert(scheme, *cert);
  };
}

namespace {

bool is_agreement_payload(const msg::Payload& p) {
  return std::holds_alternative<msg::ReqSuggestion>(p) || std::holds_alternative<msg::Suggest>(p) ||
         std::holds_alternative<msg::ProposeKey>(p) || std::holds_alternative<msg::CheckedKey>(p) ||
         std::holds_alternative<msg::ProposeLock>(p) || std::holds_alternative<msg::CheckedLock>(p) ||
         std::holds_alternative<msg::ProposeCommit>(p) ||
         std::holds_alternative<msg::CheckedCommit>(p) || std::holds_alternative<msg::SendCommit>(p);
}

bool is_quorum_ba_payload(const msg::Payload& p) {
  return std::holds_alternative<msg::Est>(p) || std::holds_alternative<msg::Aux>(p) ||
         std::holds_alternative<msg::DecShare>(p) || std::holds_alternative<msg::DecCert>(p);
}

}  // namespace

ComposedPsyncNode::ComposedPsyncNode(NodeId self, const sim::RunSetup& setup,
                                     const sim::ByzantineBehavior& behavior)
    : outer_(self, setup,
             qab::QabPsyncNode::Options{behavior.kind != sim::BehaviorKind::silent_leader}) {
  if (!setup.in_quorum(self)) return;

  if (behavior.kind == sim::BehaviorKind::equivocator) {
    inner_ = std::make_unique<psync::EquivocatorNode>(self, setup.quorum, *setup.schemes.global,
                                                      *setup.schemes.suggest);
    return;
  }
  BinValue input = behavior.forced_input.value_or(setup.inputs[self.index]);
  psync::AgreementNode::Options opts;
  if (behavior.kind == sim::BehaviorKind::silent_leader) opts.act_as_leader = false;
  auto node = std::make_unique<psync::AgreementNode>(self, input, setup.quorum, *setup.schemes.global,
                                                     *setup.schemes.suggest, opts);
  // The inner decision is not the node's decision; it seeds the
  // dissemination stage with the commit proof as transferable evidence.
  node->set_decide_hook([this](sim::Context& ctx, BinValue v, const CommitProof& proof) {
    outer_.initiate(ctx, CertifiedValue{v, proof});
  });
  inner_ = std::move(node);
}

void ComposedPsyncNode::on_start(sim::Context& ctx) {
  if (inner_) inner_->on_start(ctx);
  outer_.on_start(ctx);
}

void ComposedPsyncNode::on_wakeup(sim::Context& ctx) {
  if (inner_) inner_->on_wakeup(ctx);
  outer_.on_wakeup(ctx);
}

void ComposedPsyncNode::on_message(sim::Context& ctx, const msg::ProtocolMessage& m) {
  if (is_agreement_payload(m.payload)) {
    if (inner_) inner_->on_message(ctx, m);
    return;
  }
  outer_.on_message(ctx, m);
}

ComposedAsyncNode::ComposedAsyncNode(NodeId self, const sim::RunSetup& setup,
                                     const sim::ByzantineBehavior& behavior)
    : outer_(self, setup) {
  if (!setup.in_quorum(self)) return;
  BinValue input = behavior.forced_input.value_or(setup.inputs[self.index]);
  qba::QuorumBaNode::Hooks hooks;
  hooks.on_decide = [](sim::Context&, BinValue) {};  // inner decisions are internal
  hooks.on_halt = [this](sim::Context& ctx, BinValue v, const DecisionCert& cert) {
    outer_.initiate(ctx, CertifiedValue{v, cert});
  };
  inner_ = std::make_unique<qba::QuorumBaNode>(self, input, setup.quorum, *setup.schemes.quorum,
                                               setup.params.t, std::move(hooks));
}

void ComposedAsyncNode::on_start(sim::Context& ctx) {
  if (inner_) inner_->on_start(ctx);
  outer_.on_start(ctx);
}

void ComposedAsyncNode::on_message(sim::Context& ctx, const msg::ProtocolMessage& m) {
  if (is_quorum_ba_payload(m.payload)) {
    if (inner_) inner_->on_message(ctx, m);
    return;
  }
  outer_.on_message(ctx, m);
}

sim::NodeFactory composed_psync_factory() {
  return [](NodeId id, const sim::RunSetup& setup, const sim::ByzantineBehavior& behavior)
             -> std::unique_ptr<sim::INode> {
    return std::make_unique<ComposedPsyncNode>(id, setup, behavior);
  };
}

sim::NodeFactory composed_async_factory() {
  return [](NodeId id, const sim::RunSetup& setup, const sim::ByzantineBehavior& behavior)
             -> std::unique_ptr<sim::INode> {
    return std::make_unique<ComposedAsyncNode>(id, setup, behavior);
  };
}

}  // namespace abq::compose

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

#include <functional>
#include <memory>

#include "abq/ba_psync.hpp"
#include "abq/qab.hpp"
#include "abq/quorum_ba.hpp"
#include "abq/sim.hpp"

namespace abq::compose {

/// The first 3t+1 node ids; the dedicated subset that runs the inner
/// agreement.
std::vector<NodeId> default_quorum(std::uint32_t n, std::uint32_t t);

/// Predicate accepting exactly values carried by a valid commit proof under
/// the inner agreement's global scheme.
std::function<bool(const CertifiedValue&)> commit_verify_predicate(crypto::SchemeId inner_global);

/// Predicate accepting exactly values carried by a valid quorum decision
/// certificate.
std::function<bool(const CertifiedValue&)> cert_verify_predicate(crypto::SchemeId quorum_scheme);

/// End-to-end partially synchronous agreement: the quorum runs the view-based
/// agreement among itself (9*delta views); a decided quorum member holds a
/// commit proof and hands (value, proof) to the view-based QAB (3*delta
/// views), which delivers it to all n parties.
class ComposedPsyncNode : public sim::INode {
 public:
  ComposedPsyncNode(NodeId self, const sim::RunSetup& setup, const sim::ByzantineBehavior& behavior);

  void on_start(sim::Context& ctx) override;
  void on_wakeup(sim::Context& ctx) override;
  void on_message(sim::Context& ctx, const msg::ProtocolMessage& m) override;

 private:
  std::unique_ptr<sim::INode> inner_;  // quorum members only (agreement or equivocator)
  qab::QabPsyncNode outer_;
};

/// End-to-end asynchronous agreement: the quorum runs the randomized inner
/// agreement; once a member halts with a decision certificate it hands
/// (value, cert) to the expander-based QAB.
class ComposedAsyncNode : public sim::INode {
 public:
  ComposedAsyncNode(NodeId self, const sim::RunSetup& setup, const sim::ByzantineBehavior& behavior);

  void on_start(sim::Context& ctx) override;
  void on_message(sim::Context& ctx, const msg::ProtocolMessage& m) override;

 private:
  std::unique_ptr<qba::QuorumBaNode> inner_;  // quorum members only
  qab::QabAsyncNode outer_;
};

sim::NodeFactory composed_psync_factory();
sim::NodeFactory composed_async_factory();

}  // namespace abq::compose

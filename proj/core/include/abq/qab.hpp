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
#include <map>
#include <optional>
#include <set>

#include "abq/expander.hpp"
#include "abq/messages.hpp"
#include "abq/proofs.hpp"
#include "abq/sim.hpp"

namespace abq::qab {

/// Committee of a relayer role: its graph neighborhood plus the hosting node
/// (a node holding both roles has its party in its own committee).
std::vector<NodeId> committee_of(const expander::BipartiteGraph& g, std::uint32_t relayer);

/// Asynchronous quorum-to-all broadcast over the bipartite dissemination
/// graph: quorum -> relayers -> committees, acks back, full-committee
/// aggregate certificates to the quorum, then direct fanout to whoever is not
/// provably covered once n-2t parties are. With a null graph the node runs
/// the direct fallback: every quorum node sends the value straight to all n.
class QabAsyncNode : public sim::INode {
 public:
  QabAsyncNode(NodeId self, const sim::RunSetup& setup);

  /// Quorum-role entry point; standalone runs call it from on_start with the
  /// setup's common input, compositions call it when the inner agreement
  /// hands over a certified value.
  void initiate(sim::Context& ctx, CertifiedValue v);

  void on_start(sim::Context& ctx) override;
  void on_message(sim::Context& ctx, const msg::ProtocolMessage& m) override;

  std::optional<BinValue> decided() const { return decided_; }

 private:
  struct RelayerRole {
    std::optional<CertifiedValue> value;
    std::map<std::uint32_t, crypto::PartialSig> acks;
    bool cert_sent{false};
  };

  void decide_local(sim::Context& ctx, const CertifiedValue& v);

  NodeId self_;
  bool is_quorum_;
  std::map<std::uint32_t, RelayerRole> hosted_;  // relayer roles this node hosts

  // quorum state
  bool initiated_{false};
  std::optional<CertifiedValue> value_;
  std::set<std::uint32_t> acknowledged_;
  bool direct_fired_{false};

  // party state
  std::optional<BinValue> decided_;
  std::set<std::uint32_t> acked_relayers_;
};

/// View-based quorum-to-all broadcast for partial synchrony: undecided view
/// leaders request the value from the quorum, quorum nodes answer each party
/// at most once ever, and the first verified reply is broadcast to everyone.
struct QabPsyncOptions {
  bool act_as_leader{true};
};

class QabPsyncNode : public sim::INode {
 public:
  using Options = QabPsyncOptions;

  QabPsyncNode(NodeId self, const sim::RunSetup& setup, Options opts = {});

  void initiate(sim::Context& ctx, CertifiedValue v);

  void on_start(sim::Context& ctx) override;
  void on_wakeup(sim::Context& ctx) override;
  void on_message(sim::Context& ctx, const msg::ProtocolMessage& m) override;

  std::optional<BinValue> decided() const { return decided_; }

 private:
  void maybe_enter_view(sim::Context& ctx);
  void decide_local(sim::Context& ctx, const CertifiedValue& v);

  NodeId self_;
  bool is_quorum_;
  Options opts_;

  bool initiated_{false};
  std::optional<CertifiedValue> value_;
  std::set<std::uint32_t> served_;

  std::optional<BinValue> decided_;
  bool broadcast_done_{false};
  ViewNumber view_{};
  bool started_{false};
};

sim::NodeFactory qab_async_factory();
sim::NodeFactory qab_psync_factory();

}  // namespace abq::qab

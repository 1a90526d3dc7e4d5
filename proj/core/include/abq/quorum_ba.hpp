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

#include "abq/messages.hpp"
#include "abq/proofs.hpp"
#include "abq/sim.hpp"

namespace abq::qba {

/// Reference randomized asynchronous binary agreement for the quorum slot:
/// per round, BV-broadcast of estimates, an AUX exchange, then comparison
/// against the common coin. Decisions are sealed by a transferable
/// DecisionCert under the (q, q-t) quorum scheme; a node halts when it holds
/// a valid certificate. Decided nodes keep participating in later rounds
/// until then, which is what lets certificates (k = q-t) complete even when
/// every honest share is needed.
class QuorumBaNode : public sim::INode {
 public:
  struct Hooks {
    /// Fired at local decision (rule (c) or certificate receipt).
    std::function<void(sim::Context&, BinValue)> on_decide;
    /// Fired once when a valid certificate is first held.
    std::function<void(sim::Context&, BinValue, const DecisionCert&)> on_halt;
  };

  QuorumBaNode(NodeId self, BinValue input, std::vector<NodeId> quorum, crypto::SchemeId quorum_scheme,
               std::uint32_t t, Hooks hooks = {});

  void on_start(sim::Context& ctx) override;
  void on_message(sim::Context& ctx, const msg::ProtocolMessage& m) override;

  std::optional<BinValue> decided() const { return decided_; }
  bool halted() const { return halted_; }
  std::uint32_t round() const { return round_; }

 private:
  struct RoundTally {
    std::map<int, std::set<std::uint32_t>> est_from;  // value bit -> senders
    bool echoed[2] = {false, false};
    std::set<int> bin_values;
    std::map<std::uint32_t, int> aux_from;  // sender -> value bit (first one kept)
    bool aux_sent{false};
    bool advanced{false};
  };

  void broadcast(sim::Context& ctx, msg::Payload payload);
  void handle_est(sim::Context& ctx, NodeId from, const msg::Est& est);
  void handle_aux(sim::Context& ctx, NodeId from, const msg::Aux& aux);
  void try_progress(sim::Context& ctx, std::uint32_t round);
  void enter_round(sim::Context& ctx, std::uint32_t round);
  void decide(sim::Context& ctx, BinValue v);
  void hold_cert(sim::Context& ctx, const DecisionCert& cert, bool rebroadcast);
  RoundTally& tally(std::uint32_t round) { return rounds_[round]; }

  NodeId self_;
  BinValue est_;
  std::vector<NodeId> quorum_;
  crypto::SchemeId scheme_;
  std::uint32_t t_;
  Hooks hooks_;

  std::uint32_t round_{0};
  std::map<std::uint32_t, RoundTally> rounds_;
  std::optional<BinValue> decided_;
  bool halted_{false};
  bool share_sent_{false};
  std::map<std::uint32_t, crypto::PartialSig> share_pool_[2];  // per value: signer -> share
};

/// Factory for standalone runs where the quorum is all n nodes. Behaviors:
/// honest and mirror_input map to the reference node; every other corrupted
/// kind is effectively silent (crash/ignore wrappers apply on top).
sim::NodeFactory quorum_ba_factory();

}  // namespace abq::qba

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
#include <vector>

#include "abq/messages.hpp"
#include "abq/proofs.hpp"
#include "abq/sim.hpp"

namespace abq::psync {

/// View-based leader-driven binary agreement with suggestion/key/lock/commit
/// phases. Views are fixed 9*delta intervals under perfect clocks; the leader
/// of view i is participants[i mod |participants|].
///
/// Thresholds come from the schemes: `global.k` is the n-t response quorum,
/// `suggest.k` is the t+1 input-signature quorum.
struct AgreementOptions {
  bool act_as_leader{true};  // silent-leader behavior sets this to false
};

/// Outcome of the leader's suggestion-collection phase: either a commit to
/// re-broadcast immediately, or a value proposal with its justification.
struct ProposalChoice {
  std::optional<CommitProof> commit;
  std::optional<msg::ProposeKey> proposal;
};

/// Pick what the leader proposes from n-t verified suggestions: any commit
/// wins; else the key with the highest view; else the majority input value
/// justified by t+1 combined signatures (ties go to zero).
ProposalChoice leader_select_proposal(const std::vector<msg::Suggestion>& suggestions,
                                      const crypto::SchemeId& suggest, ViewNumber view);

/// The lock rule a party applies to a proposal: accept when it holds no lock,
/// or when the proposal is justified by a key from a view at least as recent
/// as the lock's.
bool party_accepts_proposal(const std::optional<LockProof>& lock, const msg::ProposeKey& proposal);

class AgreementNode : public sim::INode {
 public:
  using Options = AgreementOptions;

  /// Called on decision instead of ctx.decide when set (the composition
  /// intercepts the inner decision this way).
  using DecideHook = std::function<void(sim::Context&, BinValue, const CommitProof&)>;

  AgreementNode(NodeId self, BinValue input, std::vector<NodeId> participants,
                crypto::SchemeId global, crypto::SchemeId suggest, Options opts = {});

  void set_decide_hook(DecideHook hook) { decide_hook_ = std::move(hook); }

  void on_start(sim::Context& ctx) override;
  void on_wakeup(sim::Context& ctx) override;
  void on_message(sim::Context& ctx, const msg::ProtocolMessage& m) override;

  const std::optional<KeyProof>& key() const { return key_; }
  const std::optional<LockProof>& lock() const { return lock_; }
  const std::optional<CommitProof>& commit() const { return commit_; }
  std::optional<BinValue> decided() const { return decided_; }

 private:
  // party side
  struct PartyView {
    bool got_req{false};
    std::optional<msg::ProposeKey> prop_key;
    std::optional<msg::ProposeLock> prop_lock;
    std::optional<msg::ProposeCommit> prop_commit;
    int phase{0};  // 0 awaiting request, 1..3 awaiting propose messages, 4 done
    bool idle{false};
  };
  // leader side
  struct LeaderView {
    bool running{false};
    int stage{0};  // 0 suggestions, 1 checked keys, 2 checked locks, 3 checked commits, 4 done
    std::map<std::uint32_t, msg::Suggestion> suggestions;
    BinValue value{BinValue::zero};
    std::map<std::uint32_t, crypto::PartialSig> checked_key;
    std::map<std::uint32_t, crypto::PartialSig> checked_lock;
    std::map<std::uint32_t, crypto::PartialSig> checked_commit;
  };

  void maybe_enter_view(sim::Context& ctx);
  void enter_view(sim::Context& ctx, ViewNumber v);
  NodeId leader() const { return leader_of(view_, participants_); }
  bool is_leader() const;
  std::size_t quorum_needed() const { return global_.k; }

  void broadcast(sim::Context& ctx, msg::Payload payload);

  // party handlers
  void party_progress(sim::Context& ctx);
  void respond_suggestion(sim::Context& ctx);
  bool proposal_valid(const msg::ProposeKey& p) const;
  void handle_send_commit(sim::Context& ctx, const msg::SendCommit& sc);

  // leader handlers
  void leader_on_suggest(sim::Context& ctx, NodeId from, const msg::Suggest& s);
  void leader_select_and_propose(sim::Context& ctx);
  void leader_on_checked(sim::Context& ctx, NodeId from, const crypto::PartialSig& partial, int stage);

  NodeId self_;
  BinValue input_;
  std::vector<NodeId> participants_;
  crypto::SchemeId global_;
  crypto::SchemeId suggest_;
  Options opts_;
  DecideHook decide_hook_;

  ViewNumber view_{};
  bool started_{false};
  std::optional<KeyProof> key_;
  std::optional<LockProof> lock_;
  std::optional<CommitProof> commit_;
  std::optional<BinValue> decided_;
  std::set<std::uint32_t> sent_commit_to_;
  bool commit_broadcast_done_{false};

  PartyView party_;
  LeaderView leader_view_;
};

/// Leader-side equivocator: splits proposals between party halves, justifies
/// both values when it can, and withholds the final commit from half the
/// parties. As a responder it signs whatever it is asked to sign.
class EquivocatorNode : public sim::INode {
 public:
  EquivocatorNode(NodeId self, std::vector<NodeId> participants, crypto::SchemeId global,
                  crypto::SchemeId suggest);

  void on_start(sim::Context& ctx) override;
  void on_wakeup(sim::Context& ctx) override;
  void on_message(sim::Context& ctx, const msg::ProtocolMessage& m) override;

 private:
  void maybe_enter_view(sim::Context& ctx);
  void send_half(sim::Context& ctx, bool even, msg::Payload payload);

  NodeId self_;
  std::vector<NodeId> participants_;
  crypto::SchemeId global_;
  crypto::SchemeId suggest_;

  ViewNumber view_{};
  bool started_{false};
  // leader-side per view: harvested input partials and response tallies per value
  std::map<std::uint32_t, crypto::PartialSig> inputs_zero_, inputs_one_;
  bool proposed_[2] = {false, false};
  std::map<std::uint32_t, crypto::PartialSig> ck_[2], cl_[2], cc_[2];
  int stage_[2] = {0, 0};
  // responder side dedup
  std::set<std::pair<std::uint64_t, int>> responded_;
};

/// Factory for standalone runs over all n parties. Handles honest,
/// silent_leader, equivocator, and mirror_input; crash and scripted_ignore
/// wrappers are applied by the engine on top of honest logic.
sim::NodeFactory agreement_factory();

}  // namespace abq::psync

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

#include "abq/ba_psync.hpp"

#include <algorithm>

namespace abq::psync {

using crypto::Phase;

ProposalChoice leader_select_proposal(const std::vector<msg::Suggestion>& suggestions,
                                      const crypto::SchemeId& suggest, ViewNumber view) {
  ProposalChoice choice;
  for (const auto& s : suggestions) {
    if (const auto* c = std::get_if<msg::SuggestCommit>(&s)) {
      choice.commit = c->proof;
      return choice;
    }
  }
  const KeyProof* best = nullptr;
  for (const auto& s : suggestions) {
    if (const auto* k = std::get_if<msg::SuggestKey>(&s))
      if (!best || k->proof.view > best->view) best = &k->proof;
  }
  msg::ProposeKey proposal;
  if (best) {
    proposal.value = best->value;
    proposal.just = msg::KeyJust{*best};
  } else {
    std::size_t count[2] = {0, 0};
    for (const auto& s : suggestions)
      if (const auto* i = std::get_if<msg::SuggestInput>(&s)) ++count[bit_of(i->value)];
    // Majority value; a tie goes to zero so runs are deterministic.
    BinValue value = count[1] > count[0] ? BinValue::one : BinValue::zero;
    std::vector<crypto::PartialSig> partials;
    for (const auto& s : suggestions)
      if (const auto* i = std::get_if<msg::SuggestInput>(&s))
        if (i->value == value) partials.push_back(i->partial);
    proposal.value = value;
    proposal.just =
        msg::CombineJust{crypto::tcombine(suggest, crypto::digest_input(value), partials), view};
  }
  choice.proposal = std::move(proposal);
  return choice;
}

bool party_accepts_proposal(const std::optional<LockProof>& lock, const msg::ProposeKey& proposal) {
  if (!lock) return true;
  const auto* kj = std::get_if<msg::KeyJust>(&proposal.just);
  return kj != nullptr && kj->key.view >= lock->view;
}

AgreementNode::AgreementNode(NodeId self, BinValue input, std::vector<NodeId> participants,
                             crypto::SchemeId global, crypto::SchemeId suggest, Options opts)
    : self_(self),
      input_(input),
      participants_(std::move(participants)),
      global_(std::move(global)),
      suggest_(std::move(suggest)),
      opts_(opts) {}

void AgreementNode::on_start(sim::Context& ctx) {
  started_ = true;
  enter_view(ctx, sim::view_at(ctx.now(), ctx.setup().params.delta, sim::kAgreementViewLen));
}

void AgreementNode::on_wakeup(sim::Context& ctx) { maybe_enter_view(ctx); }

bool AgreementNode::is_leader() const { return leader() == self_; }

void AgreementNode::maybe_enter_view(sim::Context& ctx) {
  auto v = sim::view_at(ctx.now(), ctx.setup().params.delta, sim::kAgreementViewLen);
  if (!started_ || v != view_) {
    started_ = true;
    enter_view(ctx, v);
  }
}

void AgreementNode::enter_view(sim::Context& ctx, ViewNumber v) {
  view_ = v;
  party_ = PartyView{};
  leader_view_ = LeaderView{};
  ctx.note_view(v);
  ctx.schedule_wakeup(sim::next_view_boundary(ctx.now(), ctx.setup().params.delta, sim::kAgreementViewLen));
  if (is_leader() && opts_.act_as_leader && !commit_) {
    leader_view_.running = true;
    broadcast(ctx, msg::ReqSuggestion{});
  }
}

void AgreementNode::broadcast(sim::Context& ctx, msg::Payload payload) {
  for (auto p : participants_) ctx.send(p, view_, payload);
}

void AgreementNode::on_message(sim::Context& ctx, const msg::ProtocolMessage& m) {
  maybe_enter_view(ctx);

  // Commit broadcasts are accepted in any view, as long as the proof is valid.
  if (const auto* sc = std::get_if<msg::SendCommit>(&m.payload)) {
    handle_send_commit(ctx, *sc);
    return;
  }

  if (const auto* sg = std::get_if<msg::Suggest>(&m.payload)) {
    if (m.view != view_) {
      // A suggestion carrying a valid commit proof is still useful when it
      // crosses a view boundary in flight: the sender has burned its
      // once-per-leader budget, so dropping it here would lose the commit
      // for good. Adopt and broadcast, mirroring the SendCommit exception.
      if (const auto* scm = std::get_if<msg::SuggestCommit>(&sg->body)) {
        if (!commit_ && !commit_broadcast_done_ && verify_commit(global_, scm->proof)) {
          commit_broadcast_done_ = true;
          broadcast(ctx, msg::SendCommit{scm->proof});
        }
      }
      return;
    }
    if (leader_view_.running) leader_on_suggest(ctx, m.sender, *sg);
    return;
  }

  if (m.view != view_) return;  // stale or future-view traffic is ignored

  if (const auto* ck = std::get_if<msg::CheckedKey>(&m.payload)) {
    if (leader_view_.running && m.sender == ck->partial.signer)
      leader_on_checked(ctx, m.sender, ck->partial, 1);
    return;
  }
  if (const auto* cl = std::get_if<msg::CheckedLock>(&m.payload)) {
    if (leader_view_.running && m.sender == cl->partial.signer)
      leader_on_checked(ctx, m.sender, cl->partial, 2);
    return;
  }
  if (const auto* cc = std::get_if<msg::CheckedCommit>(&m.payload)) {
    if (leader_view_.running && m.sender == cc->partial.signer)
      leader_on_checked(ctx, m.sender, cc->partial, 3);
    return;
  }

  // Party-side leader messages: only the current view's leader is listened to.
  if (m.sender != leader()) return;
  if (std::holds_alternative<msg::ReqSuggestion>(m.payload)) {
    party_.got_req = true;
  } else if (const auto* pk = std::get_if<msg::ProposeKey>(&m.payload)) {
    if (!party_.prop_key && proposal_valid(*pk)) party_.prop_key = *pk;
  } else if (const auto* pl = std::get_if<msg::ProposeLock>(&m.payload)) {
    if (!party_.prop_lock &&
        crypto::tverify(global_, crypto::digest_phase(Phase::key, pl->value, view_), pl->key_sig))
      party_.prop_lock = *pl;
  } else if (const auto* pc = std::get_if<msg::ProposeCommit>(&m.payload)) {
    if (!party_.prop_commit &&
        crypto::tverify(global_, crypto::digest_phase(Phase::lock, pc->value, view_), pc->lock_sig))
      party_.prop_commit = *pc;
  } else {
    return;
  }
  party_progress(ctx);
}

void AgreementNode::handle_send_commit(sim::Context& ctx, const msg::SendCommit& sc) {
  if (commit_) return;
  if (!verify_commit(global_, sc.proof)) return;
  commit_ = sc.proof;
  decided_ = sc.proof.value;
  if (decide_hook_)
    decide_hook_(ctx, sc.proof.value, sc.proof);
  else
    ctx.decide(sc.proof.value);
}

bool AgreementNode::proposal_valid(const msg::ProposeKey& p) const {
  if (const auto* kj = std::get_if<msg::KeyJust>(&p.just)) {
    return kj->key.value == p.value && verify_key(global_, kj->key);
  }
  const auto& cj = std::get<msg::CombineJust>(p.just);
  return crypto::tverify(suggest_, crypto::digest_input(p.value), cj.sig);
}

void AgreementNode::party_progress(sim::Context& ctx) {
  while (!party_.idle) {
    if (party_.phase == 0 && party_.got_req) {
      respond_suggestion(ctx);
      if (party_.idle) break;
      party_.phase = 1;
    } else if (party_.phase == 1 && party_.prop_key) {
      const auto& pk = *party_.prop_key;
      if (!party_accepts_proposal(lock_, pk)) {
        party_.idle = true;  // wait for the rest of the view
        break;
      }
      auto digest = crypto::digest_phase(Phase::key, pk.value, view_);
      ctx.send(leader(), view_, msg::CheckedKey{ctx.keychain().tsign(global_, digest)});
      party_.phase = 2;
    } else if (party_.phase == 2 && party_.prop_lock) {
      const auto& pl = *party_.prop_lock;
      key_ = KeyProof{pl.value, view_, pl.key_sig};
      auto digest = crypto::digest_phase(Phase::lock, pl.value, view_);
      ctx.send(leader(), view_, msg::CheckedLock{ctx.keychain().tsign(global_, digest)});
      party_.phase = 3;
    } else if (party_.phase == 3 && party_.prop_commit) {
      const auto& pc = *party_.prop_commit;
      lock_ = LockProof{pc.value, view_, pc.lock_sig};
      auto digest = crypto::digest_phase(Phase::commit, pc.value, view_);
      ctx.send(leader(), view_, msg::CheckedCommit{ctx.keychain().tsign(global_, digest)});
      party_.phase = 4;
    } else {
      break;
    }
  }
}

void AgreementNode::respond_suggestion(sim::Context& ctx) {
  if (commit_) {
    if (!sent_commit_to_.count(leader().index)) {
      sent_commit_to_.insert(leader().index);
      ctx.send(leader(), view_, msg::Suggest{msg::SuggestCommit{*commit_}});
    }
    party_.idle = true;  // wait for the rest of the view
    return;
  }
  if (key_) {
    ctx.send(leader(), view_, msg::Suggest{msg::SuggestKey{*key_}});
    return;
  }
  auto partial = ctx.keychain().tsign(suggest_, crypto::digest_input(input_));
  ctx.send(leader(), view_, msg::Suggest{msg::SuggestInput{input_, partial}});
}

void AgreementNode::leader_on_suggest(sim::Context& ctx, NodeId from, const msg::Suggest& s) {
  if (leader_view_.stage != 0) return;
  if (leader_view_.suggestions.count(from.index)) return;

  bool valid = false;
  if (const auto* c = std::get_if<msg::SuggestCommit>(&s.body)) {
    valid = verify_commit(global_, c->proof);
  } else if (const auto* k = std::get_if<msg::SuggestKey>(&s.body)) {
    valid = verify_key(global_, k->proof) && k->proof.view < view_;
  } else if (const auto* i = std::get_if<msg::SuggestInput>(&s.body)) {
    valid = i->partial.signer == from &&
            crypto::verify_partial(suggest_, crypto::digest_input(i->value), i->partial);
  }
  if (!valid) return;  // malformed suggestions are excluded before counting

  leader_view_.suggestions.emplace(from.index, s.body);
  if (leader_view_.suggestions.size() >= quorum_needed()) leader_select_and_propose(ctx);
}

void AgreementNode::leader_select_and_propose(sim::Context& ctx) {
  auto& lv = leader_view_;
  lv.stage = 1;

  std::vector<msg::Suggestion> suggestions;
  suggestions.reserve(lv.suggestions.size());
  for (const auto& [from, s] : lv.suggestions) suggestions.push_back(s);

  auto choice = leader_select_proposal(suggestions, suggest_, view_);
  if (choice.commit) {
    // A commit among the suggestions short-circuits the view.
    lv.stage = 4;
    commit_broadcast_done_ = true;
    broadcast(ctx, msg::SendCommit{*choice.commit});
    return;
  }
  lv.value = choice.proposal->value;
  broadcast(ctx, std::move(*choice.proposal));
}

void AgreementNode::leader_on_checked(sim::Context& ctx, NodeId from, const crypto::PartialSig& partial,
                                      int stage) {
  auto& lv = leader_view_;
  if (lv.stage != stage) return;

  Phase phase = stage == 1 ? Phase::key : stage == 2 ? Phase::lock : Phase::commit;
  auto digest = crypto::digest_phase(phase, lv.value, view_);
  if (!crypto::verify_partial(global_, digest, partial)) return;

  auto& pool = stage == 1 ? lv.checked_key : stage == 2 ? lv.checked_lock : lv.checked_commit;
  pool.emplace(from.index, partial);
  if (pool.size() < quorum_needed()) return;

  std::vector<crypto::PartialSig> partials;
  for (const auto& [idx, p] : pool) partials.push_back(p);
  auto sig = crypto::tcombine(global_, digest, partials);

  if (stage == 1) {
    lv.stage = 2;
    broadcast(ctx, msg::ProposeLock{lv.value, std::move(sig)});
  } else if (stage == 2) {
    lv.stage = 3;
    broadcast(ctx, msg::ProposeCommit{lv.value, std::move(sig)});
  } else {
    lv.stage = 4;
    commit_broadcast_done_ = true;
    broadcast(ctx, msg::SendCommit{CommitProof{lv.value, view_, std::move(sig)}});
  }
}

// ---------------------------------------------------------------------------

EquivocatorNode::EquivocatorNode(NodeId self, std::vector<NodeId> participants, crypto::SchemeId global,
                                 crypto::SchemeId suggest)
    : self_(self), participants_(std::move(participants)), global_(std::move(global)),
      suggest_(std::move(suggest)) {}

void EquivocatorNode::on_start(sim::Context& ctx) { maybe_enter_view(ctx); }
void EquivocatorNode::on_wakeup(sim::Context& ctx) { maybe_enter_view(ctx); }

void EquivocatorNode::maybe_enter_view(sim::Context& ctx) {
  auto v = sim::view_at(ctx.now(), ctx.setup().params.delta, sim::kAgreementViewLen);
  if (started_ && v == view_) return;
  started_ = true;
  view_ = v;
  inputs_zero_.clear();
  inputs_one_.clear();
  proposed_[0] = proposed_[1] = false;
  stage_[0] = stage_[1] = 0;
  for (int i = 0; i < 2; ++i) {
    ck_[i].clear();
    cl_[i].clear();
    cc_[i].clear();
  }
  ctx.note_view(v);
  ctx.schedule_wakeup(sim::next_view_boundary(ctx.now(), ctx.setup().params.delta, sim::kAgreementViewLen));
  if (leader_of(view_, participants_) == self_) {
    for (auto p : participants_) ctx.send(p, view_, msg::ReqSuggestion{});
    // Sign both values itself; harvested honest partials may complete either.
    inputs_zero_.emplace(self_.index,
                         ctx.keychain().tsign(suggest_, crypto::digest_input(BinValue::zero)));
    inputs_one_.emplace(self_.index,
                        ctx.keychain().tsign(suggest_, crypto::digest_input(BinValue::one)));
  }
}

void EquivocatorNode::send_half(sim::Context& ctx, bool even, msg::Payload payload) {
  for (auto p : participants_)
    if ((p.index % 2 == 0) == even) ctx.send(p, view_, payload);
}

void EquivocatorNode::on_message(sim::Context& ctx, const msg::ProtocolMessage& m) {
  maybe_enter_view(ctx);
  bool am_leader = leader_of(view_, participants_) == self_;

  if (const auto* sg = std::get_if<msg::Suggest>(&m.payload)) {
    if (!am_leader || m.view != view_) return;
    if (const auto* i = std::get_if<msg::SuggestInput>(&sg->body)) {
      if (i->partial.signer != m.sender) return;
      if (!crypto::verify_partial(suggest_, crypto::digest_input(i->value), i->partial)) return;
      auto& pool = i->value == BinValue::zero ? inputs_zero_ : inputs_one_;
      pool.emplace(m.sender.index, i->partial);
    }
    for (int b = 0; b < 2; ++b) {
      auto value = make_bin(b);
      auto& pool = b == 0 ? inputs_zero_ : inputs_one_;
      if (proposed_[b] || pool.size() < suggest_.k) continue;
      proposed_[b] = true;
      stage_[b] = 1;
      std::vector<crypto::PartialSig> partials;
      for (const auto& [idx, p] : pool) partials.push_back(p);
      msg::ProposeKey pk{value, msg::CombineJust{
                                    crypto::tcombine(suggest_, crypto::digest_input(value), partials),
                                    view_}};
      send_half(ctx, b == 0, std::move(pk));
    }
    return;
  }

  auto handle_checked = [&](const crypto::PartialSig& partial, int stage) {
    if (!am_leader || m.view != view_ || partial.signer != m.sender) return;
    for (int b = 0; b < 2; ++b) {
      auto value = make_bin(b);
      if (stage_[b] != stage) continue;
      Phase phase = stage == 1 ? Phase::key : stage == 2 ? Phase::lock : Phase::commit;
      auto digest = crypto::digest_phase(phase, value, view_);
      if (!crypto::verify_partial(global_, digest, partial)) continue;
      auto& pool = stage == 1 ? ck_[b] : stage == 2 ? cl_[b] : cc_[b];
      pool.emplace(m.sender.index, partial);
      if (pool.size() < global_.k) continue;
      std::vector<crypto::PartialSig> partials;
      for (const auto& [idx, p] : pool) partials.push_back(p);
      auto sig = crypto::tcombine(global_, digest, partials);
      stage_[b] = stage + 1;
      if (stage == 1) {
        send_half(ctx, b == 0, msg::ProposeLock{value, std::move(sig)});
      } else if (stage == 2) {
        send_half(ctx, b == 0, msg::ProposeCommit{value, std::move(sig)});
      } else {
        // Withhold the commit from the other half: stragglers must recover
        // through later views.
        send_half(ctx, b == 0, msg::SendCommit{CommitProof{value, view_, std::move(sig)}});
      }
    }
  };
  if (const auto* ck = std::get_if<msg::CheckedKey>(&m.payload)) return handle_checked(ck->partial, 1);
  if (const auto* cl = std::get_if<msg::CheckedLock>(&m.payload)) return handle_checked(cl->partial, 2);
  if (const auto* cc = std::get_if<msg::CheckedCommit>(&m.payload)) return handle_checked(cc->partial, 3);

  // Responder side: sign anything the current view's leader asks for, once.
  if (m.view != view_ || m.sender != leader_of(view_, participants_)) return;
  auto once = [&](int slot) { return responded_.insert({view_.value, slot}).second; };
  if (std::holds_alternative<msg::ReqSuggestion>(m.payload)) {
    if (!once(0)) return;
    auto value = make_bin(static_cast<int>(view_.value % 2));
    auto partial = ctx.keychain().tsign(suggest_, crypto::digest_input(value));
    ctx.send(m.sender, view_, msg::Suggest{msg::SuggestInput{value, partial}});
  } else if (const auto* pk = std::get_if<msg::ProposeKey>(&m.payload)) {
    if (!once(1)) return;
    auto digest = crypto::digest_phase(Phase::key, pk->value, view_);
    ctx.send(m.sender, view_, msg::CheckedKey{ctx.keychain().tsign(global_, digest)});
  } else if (const auto* pl = std::get_if<msg::ProposeLock>(&m.payload)) {
    if (!once(2)) return;
    auto digest = crypto::digest_phase(Phase::lock, pl->value, view_);
    ctx.send(m.sender, view_, msg::CheckedLock{ctx.keychain().tsign(global_, digest)});
  } else if (const auto* pc = std::get_if<msg::ProposeCommit>(&m.payload)) {
    if (!once(3)) return;
    auto digest = crypto::digest_phase(Phase::commit, pc->value, view_);
    ctx.send(m.sender, view_, msg::CheckedCommit{ctx.keychain().tsign(global_, digest)});
  }
}

// ---------------------------------------------------------------------------

sim::NodeFactory agreement_factory() {
  return [](NodeId id, const sim::RunSetup& setup, const sim::ByzantineBehavior& behavior)
             -> std::unique_ptr<sim::INode> {
    std::vector<NodeId> participants;
    participants.reserve(setup.params.n);
    for (std::uint32_t i = 0; i < setup.params.n; ++i) participants.push_back(NodeId{i});

    if (behavior.kind == sim::BehaviorKind::equivocator)
      return std::make_unique<EquivocatorNode>(id, participants, *setup.schemes.global,
                                               *setup.schemes.suggest);

    BinValue input = behavior.forced_input.value_or(setup.inputs[id.index]);
    AgreementNode::Options opts;
    if (behavior.kind == sim::BehaviorKind::silent_leader) opts.act_as_leader = false;
    return std::make_unique<AgreementNode>(id, input, participants, *setup.schemes.global,
                                           *setup.schemes.suggest, opts);
  };
}

}  // namespace abq::psync

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

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>

#include "abq/crypto.hpp"
#include "abq/proofs.hpp"
#include "abq/types.hpp"

namespace abq::msg {

// ---- view-based agreement ----

struct ReqSuggestion {};

struct SuggestCommit {
  CommitProof proof;
};
struct SuggestKey {
  KeyProof proof;
};
struct SuggestInput {
  BinValue value{BinValue::zero};
  crypto::PartialSig partial;  // over the bare value, suggestion scheme (k = t+1)
};
using Suggestion = std::variant<SuggestCommit, SuggestKey, SuggestInput>;

struct Suggest {
  Suggestion body;
};

/// Leader justification for the proposed value: either a key proof from an
/// earlier view, or t+1 combined input signatures formed in `formed_in`.
struct KeyJust {
  KeyProof key;
};
struct CombineJust {
  crypto::ThresholdSig sig;  // suggestion scheme over the bare value
  ViewNumber formed_in;
};
using Justification = std::variant<KeyJust, CombineJust>;

struct ProposeKey {
  BinValue value{BinValue::zero};
  Justification just;
};
struct CheckedKey {
  crypto::PartialSig partial;  // over (KEY, value, view)
};
struct ProposeLock {
  BinValue value{BinValue::zero};
  crypto::ThresholdSig key_sig;  // threshold over (KEY, value, view)
};
struct CheckedLock {
  crypto::PartialSig partial;  // over (LOCK, value, view)
};
struct ProposeCommit {
  BinValue value{BinValue::zero};
  crypto::ThresholdSig lock_sig;  // threshold over (LOCK, value, view)
};
struct CheckedCommit {
  crypto::PartialSig partial;  // over (COMMIT, value, view)
};
struct SendCommit {
  CommitProof proof;
};

// ---- quorum-to-all broadcast ----

/// Stage-1 value dissemination; used on both hops (quorum -> relayer role,
/// relayer role -> committee party). `relayer` is the role index.
struct QabValue {
  CertifiedValue value;
  std::uint32_t relayer{0};
  bool from_quorum{false};
};
struct QabAck {
  BinValue value{BinValue::zero};
  std::uint32_t relayer{0};
  crypto::PartialSig partial;  // committee aggregate scheme over (ACK, value)
};
struct QabCert {
  BinValue value{BinValue::zero};
  std::uint32_t relayer{0};
  crypto::ThresholdSig sig;  // full-committee aggregate over (ACK, value)
};
struct QabDirect {
  CertifiedValue value;
};
struct QabRequest {};
struct QabReply {
  CertifiedValue value;
};
struct QabBroadcast {
  CertifiedValue value;
};

// ---- quorum-internal randomized agreement ----

struct Est {
  std::uint32_t round{0};
  BinValue value{BinValue::zero};
};
struct Aux {
  std::uint32_t round{0};
  BinValue value{BinValue::zero};
};
struct DecShare {
  BinValue value{BinValue::zero};
  crypto::PartialSig partial;  // quorum scheme over (DECIDE, value)
};
struct DecCert {
  DecisionCert cert;
};

using Payload = std::variant<ReqSuggestion, Suggest, ProposeKey, CheckedKey, ProposeLock, CheckedLock,
                             ProposeCommit, CheckedCommit, SendCommit, QabValue, QabAck, QabCert,
                             QabDirect, QabRequest, QabReply, QabBroadcast, Est, Aux, DecShare, DecCert>;

/// Wire tag names, used in trace exports.
const char* tag_of(const Payload& p);

/// The unit of word accounting: every message carries a constant number of
/// signatures and bits, so it costs exactly one word, except self-addressed
/// copies which are local computation and cost zero. `id` is assigned by the
/// simulator in send order and ties a Deliver event to its Send.
struct ProtocolMessage {
  NodeId sender;
  NodeId receiver;
  ViewNumber view;
  Payload payload;
  std::uint64_t id{0};
};

inline int words(const ProtocolMessage& m) { return m.sender == m.receiver ? 0 : 1; }

/// Visit every signature embedded in a payload; used by the capability
/// auditor. `on_partial` / `on_threshold` receive each signature found.
void for_each_signature(const Payload& p, const std::function<void(const crypto::PartialSig&)>& on_partial,
                        const std::function<void(const crypto::ThresholdSig&)>& on_threshold);

}  // namespace abq::msg

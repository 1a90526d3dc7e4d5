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

#include <variant>

#include "abq/crypto.hpp"
#include "abq/types.hpp"

namespace abq {

/// A value made safe in some view: threshold signature over (KEY, value, view)
/// under the global (|P|, |P|-t) scheme.
struct KeyProof {
  BinValue value{BinValue::zero};
  ViewNumber view;
  crypto::ThresholdSig sig;

  auto operator<=>(const KeyProof&) const = default;
};

struct LockProof {
  BinValue value{BinValue::zero};
  ViewNumber view;
  crypto::ThresholdSig sig;

  auto operator<=>(const LockProof&) const = default;
};

struct CommitProof {
  BinValue value{BinValue::zero};
  ViewNumber view;
  crypto::ThresholdSig sig;

  auto operator<=>(const CommitProof&) const = default;
};

inline bool verify_key(const crypto::SchemeId& global, const KeyProof& p) {
  return crypto::tverify(global, crypto::digest_phase(crypto::Phase::key, p.value, p.view), p.sig);
}
inline bool verify_lock(const crypto::SchemeId& global, const LockProof& p) {
  return crypto::tverify(global, crypto::digest_phase(crypto::Phase::lock, p.value, p.view), p.sig);
}
inline bool verify_commit(const crypto::SchemeId& global, const CommitProof& p) {
  return crypto::tverify(global, crypto::digest_phase(crypto::Phase::commit, p.value, p.view), p.sig);
}

/// Transferable evidence that the quorum decided a value: threshold signature
/// over (DECIDE, value) under the (q, q-t) quorum scheme.
struct DecisionCert {
  BinValue value{BinValue::zero};
  crypto::ThresholdSig sig;

  auto operator<=>(const DecisionCert&) const = default;
};

inline bool verify_decision_cert(const crypto::SchemeId& quorum, const DecisionCert& c) {
  return crypto::tverify(quorum, crypto::digest_decide(c.value), c.sig);
}

/// The value a quorum disseminates, together with the evidence the embedding
/// uses as the QAB verify predicate. monostate evidence is the standalone-QAB
/// sentinel mode, where the predicate pins a fixed expected value instead.
using Evidence = std::variant<std::monostate, CommitProof, DecisionCert>;

struct CertifiedValue {
  BinValue value{BinValue::zero};
  Evidence evidence;

  auto operator<=>(const CertifiedValue&) const = default;
};

}  // namespace abq

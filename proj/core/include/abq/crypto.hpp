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
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "abq/types.hpp"

namespace abq::crypto {

/// Message digest of a canonical encoding. 128 bits of FNV-style mixing is
/// plenty for a deterministic test backend; unforgeability comes from the
/// capability discipline, not from hash hardness.
struct Digest {
  std::uint64_t a{0};
  std::uint64_t b{0};

  auto operator<=>(const Digest&) const = default;
};

/// Canonical encoding: length-prefixed concatenation of byte segments.
/// Protocol payloads are encoded as (tag bytes, value bit, view number LE),
/// in that order, each as its own segment.
class Encoder {
 public:
  Encoder& segment(std::string_view bytes);
  Encoder& bit(BinValue v);
  Encoder& view(ViewNumber v);
  Digest digest() const;
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

Digest hash_bytes(std::span<const std::uint8_t> bytes);

/// Phase labels bound into threshold-signed payloads.
enum class Phase : std::uint8_t { key, lock, commit };
std::string_view phase_name(Phase p);

Digest digest_input(BinValue v);                            // bare proposed value
Digest digest_phase(Phase p, BinValue v, ViewNumber view);  // (KEY|LOCK|COMMIT, v, view)
Digest digest_ack(BinValue v);                              // committee acknowledgement
Digest digest_decide(BinValue v);                           // quorum decision certificate

enum class CryptoErrc {
  not_participant,
  insufficient_shares,
  mixed_messages,
  foreign_share,
  empty_participants,
};

class CryptoError : public std::runtime_error {
 public:
  CryptoError(CryptoErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  CryptoErrc code() const { return code_; }

 private:
  CryptoErrc code_;
};

/// A (k, participants) threshold signature scheme instance. The label is
/// unique per run and is how signatures refer back to their scheme.
struct SchemeId {
  std::string label;
  std::vector<NodeId> participants;  // sorted, distinct
  std::uint32_t k{0};

  bool is_participant(NodeId p) const;
};

struct PartialSig {
  std::string scheme;
  NodeId signer;
  Digest digest;

  auto operator<=>(const PartialSig&) const = default;
};

/// Test-backend threshold signature: scheme label, digest, and the canonical
/// (sorted, truncated to k) signer set. Equal signatures compare equal.
struct ThresholdSig {
  std::string scheme;
  Digest digest;
  std::vector<NodeId> signers;

  auto operator<=>(const ThresholdSig&) const = default;
};

struct PlainSig {
  NodeId signer;
  Digest digest;

  auto operator<=>(const PlainSig&) const = default;
};

PartialSig tsign(const SchemeId& scheme, NodeId signer, Digest message);
ThresholdSig tcombine(const SchemeId& scheme, Digest message, const std::vector<PartialSig>& partials);
bool tverify(const SchemeId& scheme, Digest message, const ThresholdSig& sig);

// Raw-bytes forms; the digest forms above are what protocol code uses once
// it has computed a canonical encoding.
PartialSig tsign(const SchemeId& scheme, NodeId signer, std::span<const std::uint8_t> message);
ThresholdSig tcombine(const SchemeId& scheme, std::span<const std::uint8_t> message,
                      const std::vector<PartialSig>& partials);
bool tverify(const SchemeId& scheme, std::span<const std::uint8_t> message, const ThresholdSig& sig);

bool verify_partial(const SchemeId& scheme, Digest message, const PartialSig& sig);

/// Aggregate signature scheme: threshold scheme with k = |participants|.
SchemeId aggregate_scheme(std::string label, std::vector<NodeId> participants);

/// Record of an honest signing action, written by Keychain and consumed by
/// the capability auditor: a verifying signature naming an honest signer must
/// be backed by one of these.
struct SignEvent {
  NodeId signer;
  std::string scheme;
  Digest digest;

  auto operator<=>(const SignEvent&) const = default;
};

class SigningLog {
 public:
  void record(NodeId signer, std::string_view scheme, Digest d);
  bool contains(NodeId signer, std::string_view scheme, Digest d) const;
  std::size_t size() const { return events_.size(); }
  /// Count of distinct honest signers of (scheme, digest).
  std::size_t signer_count(std::string_view scheme, Digest d) const;

 private:
  std::set<SignEvent> events_;
};

/// Per-node signing capability. Trusted setup hands each node exactly one;
/// adversary code only ever receives the keychains of corrupted nodes, which
/// is what makes signatures of honest nodes unforgeable in this backend.
class Keychain {
 public:
  Keychain(NodeId self, std::shared_ptr<SigningLog> log) : self_(self), log_(std::move(log)) {}

  NodeId self() const { return self_; }

  PartialSig tsign(const SchemeId& scheme, Digest message) const;
  PlainSig sign(Digest message) const;

 private:
  NodeId self_;
  std::shared_ptr<SigningLog> log_;  // null for corrupted nodes: their actions are unconstrained
};

/// Scheme inventory for one run, created at trusted setup (models PKI).
struct SchemeSet {
  std::optional<SchemeId> global;   // (participants, |P| - t), key/lock/commit proofs
  std::optional<SchemeId> suggest;  // (participants, t + 1), input suggestions
  std::optional<SchemeId> quorum;   // (quorum, q - t), decision certificates
  std::vector<SchemeId> committees;  // aggregate, one per relayer committee

  const SchemeId* by_label(std::string_view label) const;
};

}  // namespace abq::crypto

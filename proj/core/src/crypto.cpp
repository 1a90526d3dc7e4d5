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

#include "abq/crypto.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace abq::crypto {

namespace {

constexpr std::uint64_t kFnvOffsetA = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvOffsetB = 0x9ae16a3b2f90404fULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h) {
  for (auto b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

Encoder& Encoder::segment(std::string_view bytes) {
  std::uint32_t len = static_cast<std::uint32_t>(bytes.size());
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>((len >> (8 * i)) & 0xff));
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  return *this;
}

Encoder& Encoder::bit(BinValue v) {
  std::uint8_t b = static_cast<std::uint8_t>(bit_of(v));
  std::uint32_t len = 1;
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>((len >> (8 * i)) & 0xff));
  buf_.push_back(b);
  return *this;
}

Encoder& Encoder::view(ViewNumber v) {
  std::uint32_t len = 8;
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>((len >> (8 * i)) & 0xff));
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>((v.value >> (8 * i)) & 0xff));
  return *this;
}

Digest Encoder::digest() const { return hash_bytes(buf_); }

Digest hash_bytes(std::span<const std::uint8_t> bytes) {
  return Digest{fnv1a(bytes, kFnvOffsetA), fnv1a(bytes, kFnvOffsetB)};
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::key: return "KEY";
    case Phase::lock: return "LOCK";
    case Phase::commit: return "COMMIT";
  }
  return "?";
}

Digest digest_input(BinValue v) { return Encoder{}.segment("INPUT").bit(v).digest(); }

Digest digest_phase(Phase p, BinValue v, ViewNumber view) {
  return Encoder{}.segment(phase_name(p)).bit(v).view(view).digest();
}

Digest digest_ack(BinValue v) { return Encoder{}.segment("ACK").bit(v).digest(); }

Digest digest_decide(BinValue v) { return Encoder{}.segment("DECIDE").bit(v).digest(); }

bool SchemeId::is_participant(NodeId p) const {
  return std::binary_search(participants.begin(), participants.end(), p);
}

PartialSig tsign(const SchemeId& scheme, NodeId signer, Digest message) {
  if (!scheme.is_participant(signer))
    throw CryptoError(CryptoErrc::not_participant,
                      "tsign: node " + std::to_string(signer.index) + " not in scheme " + scheme.label);
  return PartialSig{scheme.label, signer, message};
}

ThresholdSig tcombine(const SchemeId& scheme, Digest message, const std::vector<PartialSig>& partials) {
  std::set<NodeId> signers;
  for (const auto& p : partials) {
    if (p.scheme != scheme.label)
      throw CryptoError(CryptoErrc::foreign_share, "tcombine: share from scheme " + p.scheme);
    if (!scheme.is_participant(p.signer))
      throw CryptoError(CryptoErrc::foreign_share,
                        "tcombine: signer " + std::to_string(p.signer.index) + " not in " + scheme.label);
    if (p.digest != message)
      throw CryptoError(CryptoErrc::mixed_messages, "tcombine: shares over different messages");
    signers.insert(p.signer);
  }
  if (signers.size() < scheme.k)
    throw CryptoError(CryptoErrc::insufficient_shares,
                      "tcombine: " + std::to_string(signers.size()) + " shares, need " +
                          std::to_string(scheme.k));
  // Canonical form: the k lowest signer ids, sorted.
  std::vector<NodeId> kept(signers.begin(), signers.end());
  kept.resize(scheme.k);
  return ThresholdSig{scheme.label, message, std::move(kept)};
}

bool tverify(const SchemeId& scheme, Digest message, const ThresholdSig& sig) {
  if (sig.scheme != scheme.label) return false;
  if (sig.digest != message) return false;
  if (sig.signers.size() < scheme.k) return false;
  if (!std::is_sorted(sig.signers.begin(), sig.signers.end())) return false;
  if (std::adjacent_find(sig.signers.begin(), sig.signers.end()) != sig.signers.end()) return false;
  for (auto s : sig.signers)
    if (!scheme.is_participant(s)) return false;
  return true;
}

PartialSig tsign(const SchemeId& scheme, NodeId signer, std::span<const std::uint8_t> message) {
  return tsign(scheme, signer, hash_bytes(message));
}

ThresholdSig tcombine(const SchemeId& scheme, std::span<const std::uint8_t> message,
                      const std::vector<PartialSig>& partials) {
  return tcombine(scheme, hash_bytes(message), partials);
}

bool tverify(const SchemeId& scheme, std::span<const std::uint8_t> message, const ThresholdSig& sig) {
  return tverify(scheme, hash_bytes(message), sig);
}

bool verify_partial(const SchemeId& scheme, Digest message, const PartialSig& sig) {
  return sig.scheme == scheme.label && sig.digest == message && scheme.is_participant(sig.signer);
}

SchemeId aggregate_scheme(std::string label, std::vector<NodeId> participants) {
  if (participants.empty())
    throw CryptoError(CryptoErrc::empty_participants, "aggregate_scheme: empty participant set");
  std::sort(participants.begin(), participants.end());
  participants.erase(std::unique(participants.begin(), participants.end()), participants.end());
  std::uint32_t k = static_cast<std::uint32_t>(participants.size());
  return SchemeId{std::move(label), std::move(participants), k};
}

void SigningLog::record(NodeId signer, std::string_view scheme, Digest d) {
  events_.insert(SignEvent{signer, std::string(scheme), d});
}

bool SigningLog::contains(NodeId signer, std::string_view scheme, Digest d) const {
  return events_.count(SignEvent{signer, std::string(scheme), d}) > 0;
}

std::size_t SigningLog::signer_count(std::string_view scheme, Digest d) const {
  std::set<NodeId> seen;
  for (const auto& e : events_)
    if (e.digest == d && e.scheme == scheme) seen.insert(e.signer);
  return seen.size();
}

PartialSig Keychain::tsign(const SchemeId& scheme, Digest message) const {
  auto sig = crypto::tsign(scheme, self_, message);
  if (log_) log_->record(self_, scheme.label, message);
  return sig;
}

PlainSig Keychain::sign(Digest message) const {
  if (log_) log_->record(self_, "PKI", message);
  return PlainSig{self_, message};
}

const SchemeId* SchemeSet::by_label(std::string_view label) const {
  if (global && global->label == label) return &*global;
  if (suggest && suggest->label == label) return &*suggest;
  if (quorum && quorum->label == label) return &*quorum;
  for (const auto& c : committees)
    if (c.label == label) return &c;
  return nullptr;
}

}  // namespace abq::crypto

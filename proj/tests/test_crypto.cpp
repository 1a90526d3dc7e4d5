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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "abq/crypto.hpp"
#include "abq/rng.hpp"

using namespace abq;
using namespace abq::crypto;

namespace {

SchemeId scheme4(std::uint32_t k) {
  return SchemeId{"S", {NodeId{0}, NodeId{1}, NodeId{2}, NodeId{3}}, k};
}

Digest msg_digest() { return Encoder{}.segment("hello").digest(); }

}  // namespace

TEST_CASE("tsign basics") {
  auto s = scheme4(3);
  auto m = msg_digest();
  auto sig = tsign(s, NodeId{1}, m);
  CHECK(sig.scheme == "S");
  CHECK(sig.signer == NodeId{1});
  CHECK(sig.digest == m);
  CHECK(tsign(s, NodeId{1}, m) == sig);  // determinism
  CHECK_THROWS_AS(tsign(s, NodeId{9}, m), CryptoError);
  try {
    tsign(s, NodeId{9}, m);
  } catch (const CryptoError& e) {
    CHECK(e.code() == CryptoErrc::not_participant);
  }
}

TEST_CASE("tcombine thresholds and errors") {
  auto s = scheme4(3);
  auto m = msg_digest();
  std::vector<PartialSig> partials;
  for (std::uint32_t i = 0; i < 3; ++i) partials.push_back(tsign(s, NodeId{i}, m));

  auto sig = tcombine(s, m, partials);
  CHECK(sig.signers == std::vector<NodeId>{NodeId{0}, NodeId{1}, NodeId{2}});
  CHECK(tverify(s, m, sig));

  SUBCASE("insufficient shares") {
    partials.pop_back();
    CHECK_THROWS_AS(tcombine(s, m, partials), CryptoError);
  }
  SUBCASE("duplicate signers do not count twice") {
    partials.pop_back();
    partials.push_back(partials[0]);
    CHECK_THROWS_AS(tcombine(s, m, partials), CryptoError);
  }
  SUBCASE("mixed messages rejected") {
    partials.back() = tsign(s, NodeId{2}, Encoder{}.segment("other").digest());
    CHECK_THROWS_AS(tcombine(s, m, partials), CryptoError);
  }
  SUBCASE("foreign share rejected") {
    auto other = SchemeId{"T", {NodeId{0}, NodeId{1}, NodeId{2}, NodeId{3}}, 3};
    partials.back() = tsign(other, NodeId{2}, m);
    CHECK_THROWS_AS(tcombine(s, m, partials), CryptoError);
  }
}

TEST_CASE("extra shares allowed, canonical subset retained") {
  auto s = scheme4(3);
  auto m = msg_digest();
  std::vector<PartialSig> partials;
  for (std::uint32_t i = 0; i < 4; ++i) partials.push_back(tsign(s, NodeId{i}, m));
  auto sig = tcombine(s, m, partials);
  CHECK(sig.signers.size() == 3);
  CHECK(tverify(s, m, sig));

  // Oracle: combining any 3-subset verifies too.
  for (std::size_t skip = 0; skip < 4; ++skip) {
    std::vector<PartialSig> subset;
    for (std::size_t i = 0; i < 4; ++i)
      if (i != skip) subset.push_back(partials[i]);
    CHECK(tverify(s, m, tcombine(s, m, subset)));
  }
}

TEST_CASE("tverify rejects tampering") {
  auto s = scheme4(3);
  auto m = msg_digest();
  std::vector<PartialSig> partials;
  for (std::uint32_t i = 0; i < 3; ++i) partials.push_back(tsign(s, NodeId{i}, m));
  auto sig = tcombine(s, m, partials);

  CHECK_FALSE(tverify(s, Encoder{}.segment("other").digest(), sig));

  auto fewer = sig;
  fewer.signers.resize(2);
  CHECK_FALSE(tverify(s, m, fewer));

  auto foreign = sig;
  foreign.signers.back() = NodeId{17};
  CHECK_FALSE(tverify(s, m, foreign));

  auto unsorted = sig;
  std::swap(unsorted.signers[0], unsorted.signers[2]);
  CHECK_FALSE(tverify(s, m, unsorted));
}

TEST_CASE("aggregate scheme requires every participant") {
  auto s = aggregate_scheme("A", {NodeId{0}, NodeId{1}, NodeId{2}, NodeId{3}, NodeId{4}});
  CHECK(s.k == 5);
  auto one = aggregate_scheme("B", {NodeId{7}});
  CHECK(one.k == 1);
  CHECK_THROWS_AS(aggregate_scheme("C", {}), CryptoError);

  auto m = msg_digest();
  std::vector<PartialSig> partials;
  for (std::uint32_t i = 0; i < 4; ++i) partials.push_back(tsign(s, NodeId{i}, m));
  CHECK_THROWS_AS(tcombine(s, m, partials), CryptoError);
  partials.push_back(tsign(s, NodeId{4}, m));
  CHECK(tverify(s, m, tcombine(s, m, partials)));
}

TEST_CASE("round trip property over random schemes and messages") {
  Rng rng(1234);
  for (int trial = 0; trial < 500; ++trial) {
    std::uint32_t size = 1 + static_cast<std::uint32_t>(rng.below(12));
    std::vector<NodeId> participants;
    for (std::uint32_t i = 0; i < size; ++i) participants.push_back(NodeId{i * 2});
    std::uint32_t k = 1 + static_cast<std::uint32_t>(rng.below(size));
    SchemeId scheme{"R" + std::to_string(trial), participants, k};

    Encoder enc;
    enc.segment("m" + std::to_string(rng.next()));
    auto digest = enc.digest();

    std::uint32_t extra = static_cast<std::uint32_t>(rng.below(size - k + 1));
    std::vector<PartialSig> partials;
    for (std::uint32_t i = 0; i < k + extra; ++i)
      partials.push_back(tsign(scheme, participants[i], digest));
    CHECK(tverify(scheme, digest, tcombine(scheme, digest, partials)));
  }
}

TEST_CASE("canonical encoding distinguishes phases, values and views") {
  auto a = digest_phase(Phase::key, BinValue::zero, ViewNumber{1});
  auto b = digest_phase(Phase::key, BinValue::one, ViewNumber{1});
  auto c = digest_phase(Phase::key, BinValue::zero, ViewNumber{2});
  auto d = digest_phase(Phase::lock, BinValue::zero, ViewNumber{1});
  CHECK(a != b);
  CHECK(a != c);
  CHECK(a != d);
  CHECK(digest_input(BinValue::zero) != digest_input(BinValue::one));
  CHECK(digest_ack(BinValue::zero) != digest_decide(BinValue::zero));
  // identical inputs, identical outputs
  CHECK(a == digest_phase(Phase::key, BinValue::zero, ViewNumber{1}));
}

TEST_CASE("keychain records honest signing events") {
  auto log = std::make_shared<SigningLog>();
  auto s = scheme4(2);
  auto m = msg_digest();

  Keychain honest(NodeId{1}, log);
  honest.tsign(s, m);
  CHECK(log->contains(NodeId{1}, "S", m));
  CHECK_FALSE(log->contains(NodeId{2}, "S", m));

  Keychain corrupted(NodeId{2}, nullptr);
  corrupted.tsign(s, m);
  CHECK_FALSE(log->contains(NodeId{2}, "S", m));
  CHECK(log->signer_count("S", m) == 1);
}

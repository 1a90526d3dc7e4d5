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

#include "abq/messages.hpp"

namespace abq::msg {

namespace {

struct TagVisitor {
  const char* operator()(const ReqSuggestion&) const { return "REQ_SUGG"; }
  const char* operator()(const Suggest&) const { return "SUGGEST"; }
  const char* operator()(const ProposeKey&) const { return "PROP_KEY"; }
  const char* operator()(const CheckedKey&) const { return "CHK_KEY"; }
  const char* operator()(const ProposeLock&) const { return "PROP_LOCK"; }
  const char* operator()(const CheckedLock&) const { return "CHK_LOCK"; }
  const char* operator()(const ProposeCommit&) const { return "PROP_COMMIT"; }
  const char* operator()(const CheckedCommit&) const { return "CHK_COMMIT"; }
  const char* operator()(const SendCommit&) const { return "SEND_COMMIT"; }
  const char* operator()(const QabValue&) const { return "QAB_VAL"; }
  const char* operator()(const QabAck&) const { return "QAB_ACK"; }
  const char* operator()(const QabCert&) const { return "QAB_CERT"; }
  const char* operator()(const QabDirect&) const { return "QAB_DIRECT"; }
  const char* operator()(const QabRequest&) const { return "QAB_REQ"; }
  const char* operator()(const QabReply&) const { return "QAB_REPLY"; }
  const char* operator()(const QabBroadcast&) const { return "QAB_BCAST"; }
  const char* operator()(const Est&) const { return "EST"; }
  const char* operator()(const Aux&) const { return "AUX"; }
  const char* operator()(const DecShare&) const { return "DEC_SHARE"; }
  const char* operator()(const DecCert&) const { return "DEC_CERT"; }
};

using OnPartial = std::function<void(const crypto::PartialSig&)>;
using OnThreshold = std::function<void(const crypto::ThresholdSig&)>;

void visit_evidence(const Evidence& e, const OnThreshold& on_threshold) {
  if (const auto* c = std::get_if<CommitProof>(&e)) on_threshold(c->sig);
  if (const auto* d = std::get_if<DecisionCert>(&e)) on_threshold(d->sig);
}

struct SigVisitor {
  const OnPartial& on_partial;
  const OnThreshold& on_threshold;

  void operator()(const ReqSuggestion&) const {}
  void operator()(const Suggest& s) const {
    if (const auto* c = std::get_if<SuggestCommit>(&s.body)) on_threshold(c->proof.sig);
    if (const auto* k = std::get_if<SuggestKey>(&s.body)) on_threshold(k->proof.sig);
    if (const auto* i = std::get_if<SuggestInput>(&s.body)) on_partial(i->partial);
  }
  void operator()(const ProposeKey& p) const {
    if (const auto* kj = std::get_if<KeyJust>(&p.just)) on_threshold(kj->key.sig);
    if (const auto* cj = std::get_if<CombineJust>(&p.just)) on_threshold(cj->sig);
  }
  void operator()(const CheckedKey& c) const { on_partial(c.partial); }
  void operator()(const ProposeLock& p) const { on_threshold(p.key_sig); }
  void operator()(const CheckedLock& c) const { on_partial(c.partial); }
  void operator()(const ProposeCommit& p) const { on_threshold(p.lock_sig); }
  void operator()(const CheckedCommit& c) const { on_partial(c.partial); }
  void operator()(const SendCommit& s) const { on_threshold(s.proof.sig); }
  void operator()(const QabValue& v) const { visit_evidence(v.value.evidence, on_threshold); }
  void operator()(const QabAck& a) const { on_partial(a.partial); }
  void operator()(const QabCert& c) const { on_threshold(c.sig); }
  void operator()(const QabDirect& d) const { visit_evidence(d.value.evidence, on_threshold); }
  void operator()(const QabRequest&) const {}
  void operator()(const QabReply& r) const { visit_evidence(r.value.evidence, on_threshold); }
  void operator()(const QabBroadcast& b) const { visit_evidence(b.value.evidence, on_threshold); }
  void operator()(const Est&) const {}
  void operator()(const Aux&) const {}
  void operator()(const DecShare& d) const { on_partial(d.partial); }
  void operator()(const DecCert& d) const { on_threshold(d.cert.sig); }
};

}  // namespace

const char* tag_of(const Payload& p) { return std::visit(TagVisitor{}, p); }

void for_each_signature(const Payload& p, const OnPartial& on_partial, const OnThreshold& on_threshold) {
  std::visit(SigVisitor{on_partial, on_threshold}, p);
}

}  // namespace abq::msg

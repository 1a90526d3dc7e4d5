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
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "abq/crypto.hpp"
#include "abq/messages.hpp"
#include "abq/types.hpp"

namespace abq {

enum class EventKind : std::uint8_t { send, deliver, timer_fire, decide, view_enter };

const char* event_kind_name(EventKind k);

/// One entry in the totally ordered log of a simulated run. Total order is
/// (time, seq); a Deliver of a message always follows its Send.
struct Event {
  Time time{0};
  std::uint64_t seq{0};
  EventKind kind{EventKind::send};
  NodeId node;  // acting node: sender for send, receiver otherwise
  std::optional<msg::ProtocolMessage> message;
  std::optional<BinValue> decided;
  ViewNumber view;  // for view_enter; message events carry the envelope view
};

struct Decision {
  BinValue value{BinValue::zero};
  Time time{0};
};

/// Finalized log of one run, input to every meter and auditor.
struct Trace {
  SystemParams params;
  std::vector<NodeId> corrupted;
  std::vector<BinValue> inputs;
  std::vector<Event> events;
  std::map<std::uint32_t, Decision> decisions;  // node index -> decision
  bool completed{false};
  bool horizon_exceeded{false};
  std::vector<std::string> notes;  // engine flags, e.g. horizon or early-release markers
  std::shared_ptr<crypto::SigningLog> signing_log;

  bool is_corrupted(NodeId p) const {
    for (auto c : corrupted)
      if (c == p) return true;
    return false;
  }
  std::size_t honest_count() const { return params.n - corrupted.size(); }
  bool all_honest_decided() const;
  /// Latest honest decision time, or nullopt if some honest node is undecided.
  std::optional<Time> last_honest_decision() const;
};

/// Number of words over send events matching the filters. Self-addressed
/// messages are free; every other message costs exactly one word.
std::int64_t count_words(const Trace& trace, bool honest_only, Time after);

/// One event per line: time, seq, kind, from, to, view, tag. Byte-stable for
/// a given trace, which is what the determinism checks compare.
void write_jsonl(const Trace& trace, std::ostream& out);
std::string to_jsonl(const Trace& trace);

/// Minimal view of a trace re-read from JSONL (payloads are not round-tripped;
/// file-level audits work on the summary fields).
struct JsonlEvent {
  Time time{0};
  std::uint64_t seq{0};
  std::string kind;
  std::uint32_t from{0};
  std::uint32_t to{0};
  std::uint64_t view{0};
  std::string tag;
};
std::vector<JsonlEvent> read_jsonl(std::istream& in);

}  // namespace abq

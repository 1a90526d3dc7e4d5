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

#include "abq/trace.hpp"

#include <ostream>
#include <sstream>

namespace abq {

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::send: return "Send";
    case EventKind::deliver: return "Deliver";
    case EventKind::timer_fire: return "TimerFire";
    case EventKind::decide: return "Decide";
    case EventKind::view_enter: return "ViewEnter";
  }
  return "?";
}

bool Trace::all_honest_decided() const {
  std::size_t honest_decisions = 0;
  for (const auto& [idx, d] : decisions)
    if (!is_corrupted(NodeId{idx})) ++honest_decisions;
  return honest_decisions == honest_count();
}

std::optional<Time> Trace::last_honest_decision() const {
  if (!all_honest_decided()) return std::nullopt;
  Time last = 0;
  for (const auto& [idx, d] : decisions)
    if (!is_corrupted(NodeId{idx})) last = std::max(last, d.time);
  return last;
}

std::int64_t count_words(const Trace& trace, bool honest_only, Time after) {
  std::int64_t total = 0;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::send || !e.message) continue;
    if (e.time < after) continue;
    if (honest_only && trace.is_corrupted(e.message->sender)) continue;
    total += msg::words(*e.message);
  }
  return total;
}

namespace {

void write_event(const Event& e, std::ostream& out) {
  out << "{\"time\":" << e.time << ",\"seq\":" << e.seq << ",\"kind\":\"" << event_kind_name(e.kind)
      << "\"";
  if (e.message) {
    out << ",\"from\":" << e.message->sender.index << ",\"to\":" << e.message->receiver.index
        << ",\"view\":" << e.message->view.value << ",\"tag\":\"" << msg::tag_of(e.message->payload)
        << "\"";
  } else {
    out << ",\"from\":" << e.node.index << ",\"to\":" << e.node.index << ",\"view\":" << e.view.value
        << ",\"tag\":\"";
    if (e.kind == EventKind::decide)
      out << (e.decided && *e.decided == BinValue::one ? "DECIDE1" : "DECIDE0");
    else if (e.kind == EventKind::view_enter)
      out << "VIEW";
    else
      out << "TIMER";
    out << "\"";
  }
  out << "}\n";
}

}  // namespace

void write_jsonl(const Trace& trace, std::ostream& out) {
  for (const auto& e : trace.events) write_event(e, out);
}

std::string to_jsonl(const Trace& trace) {
  std::ostringstream ss;
  write_jsonl(trace, ss);
  return ss.str();
}

namespace {

// Tiny purpose-built parser for the fixed JSONL schema above.
bool parse_field(const std::string& line, const std::string& key, std::string& out) {
  auto pos = line.find("\"" + key + "\":");
  if (pos == std::string::npos) return false;
  pos += key.size() + 3;
  if (pos >= line.size()) return false;
  if (line[pos] == '"') {
    auto end = line.find('"', pos + 1);
    if (end == std::string::npos) return false;
    out = line.substr(pos + 1, end - pos - 1);
  } else {
    auto end = line.find_first_of(",}", pos);
    if (end == std::string::npos) return false;
    out = line.substr(pos, end - pos);
  }
  return true;
}

}  // namespace

std::vector<JsonlEvent> read_jsonl(std::istream& in) {
  std::vector<JsonlEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    JsonlEvent e;
    std::string v;
    if (parse_field(line, "time", v)) e.time = std::stoll(v);
    if (parse_field(line, "seq", v)) e.seq = std::stoull(v);
    if (parse_field(line, "kind", v)) e.kind = v;
    if (parse_field(line, "from", v)) e.from = static_cast<std::uint32_t>(std::stoul(v));
    if (parse_field(line, "to", v)) e.to = static_cast<std::uint32_t>(std::stoul(v));
    if (parse_field(line, "view", v)) e.view = std::stoull(v);
    if (parse_field(line, "tag", v)) e.tag = v;
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace abq

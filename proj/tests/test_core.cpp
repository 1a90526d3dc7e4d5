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

#include <set>

#include "abq/rng.hpp"
#include "abq/trace.hpp"
#include "abq/types.hpp"

using namespace abq;

TEST_CASE("leader_of round robin") {
  CHECK(leader_of(ViewNumber{0}, 4) == NodeId{0});
  CHECK(leader_of(ViewNumber{5}, 4) == NodeId{1});
  CHECK(leader_of(ViewNumber{4}, 4) == NodeId{0});
  CHECK_THROWS_AS(leader_of(ViewNumber{0}, 0), std::invalid_argument);
}

TEST_CASE("leader_of is a bijection on any window of n consecutive views") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    std::uint32_t n = 1 + static_cast<std::uint32_t>(rng.below(40));
    std::uint64_t start = rng.below(1000);
    std::set<std::uint32_t> hit;
    for (std::uint64_t v = start; v < start + n; ++v) hit.insert(leader_of(ViewNumber{v}, n).index);
    CHECK(hit.size() == n);
    CHECK(*hit.begin() == 0);
    CHECK(*hit.rbegin() == n - 1);
  }
}

TEST_CASE("leader_of over an explicit participant list") {
  std::vector<NodeId> quorum{NodeId{3}, NodeId{5}, NodeId{9}};
  CHECK(leader_of(ViewNumber{0}, quorum) == NodeId{3});
  CHECK(leader_of(ViewNumber{4}, quorum) == NodeId{5});
}

TEST_CASE("system params validation") {
  SystemParams p{4, 1, 2, 1000, 0};
  CHECK_THROWS_AS(p.validate_basic(), std::invalid_argument);  // f > t
  SystemParams ok{4, 1, 1, 1000, 0};
  CHECK_NOTHROW(ok.validate_basic());
  CHECK(ok.third_resilient());
  SystemParams tight{9, 3, 0, 1000, 0};
  CHECK_FALSE(tight.third_resilient());
}

namespace {

Event send_event(Time time, std::uint64_t seq, NodeId from, NodeId to, std::uint64_t id) {
  Event e;
  e.time = time;
  e.seq = seq;
  e.kind = EventKind::send;
  e.node = from;
  e.message = msg::ProtocolMessage{from, to, ViewNumber{0}, msg::ReqSuggestion{}, id};
  return e;
}

}  // namespace

TEST_CASE("count_words filter semantics") {
  Trace trace;
  trace.params = SystemParams{4, 1, 1, 1000, 100};
  trace.corrupted = {NodeId{3}};

  SUBCASE("empty trace") { CHECK(count_words(trace, true, 0) == 0); }

  // 3 honest sends at/after gst, 2 before
  trace.events.push_back(send_event(100, 0, NodeId{0}, NodeId{1}, 0));
  trace.events.push_back(send_event(150, 1, NodeId{1}, NodeId{2}, 1));
  trace.events.push_back(send_event(200, 2, NodeId{2}, NodeId{0}, 2));
  trace.events.push_back(send_event(10, 3, NodeId{0}, NodeId{2}, 3));
  trace.events.push_back(send_event(99, 4, NodeId{1}, NodeId{0}, 4));
  CHECK(count_words(trace, true, trace.params.gst) == 3);
  CHECK(count_words(trace, true, 0) == 5);

  SUBCASE("corrupted senders are excluded when honest_only") {
    trace.events.push_back(send_event(300, 5, NodeId{3}, NodeId{0}, 5));
    CHECK(count_words(trace, true, 0) == 5);
    CHECK(count_words(trace, false, 0) == 6);
  }

  SUBCASE("self-addressed messages are free") {
    trace.events.push_back(send_event(300, 5, NodeId{1}, NodeId{1}, 5));
    CHECK(count_words(trace, true, 0) == 5);
  }
}

TEST_CASE("every non-self message costs exactly one word") {
  msg::ProtocolMessage m{NodeId{0}, NodeId{1}, ViewNumber{7}, msg::ReqSuggestion{}, 0};
  CHECK(msg::words(m) == 1);
  m.receiver = NodeId{0};
  CHECK(msg::words(m) == 0);
}

TEST_CASE("jsonl round trip of the summary fields") {
  Trace trace;
  trace.params = SystemParams{2, 0, 0, 1000, 0};
  trace.events.push_back(send_event(5, 0, NodeId{0}, NodeId{1}, 0));
  Event decide;
  decide.time = 9;
  decide.seq = 1;
  decide.kind = EventKind::decide;
  decide.node = NodeId{1};
  decide.decided = BinValue::one;
  trace.events.push_back(decide);

  auto text = to_jsonl(trace);
  CHECK(text.find("\"kind\":\"Send\"") != std::string::npos);
  CHECK(text.find("\"tag\":\"DECIDE1\"") != std::string::npos);

  std::istringstream in(text);
  auto events = read_jsonl(in);
  REQUIRE(events.size() == 2);
  CHECK(events[0].kind == "Send");
  CHECK(events[0].from == 0);
  CHECK(events[0].to == 1);
  CHECK(events[0].tag == "REQ_SUGG");
  CHECK(events[1].kind == "Decide");
  CHECK(events[1].tag == "DECIDE1");
}

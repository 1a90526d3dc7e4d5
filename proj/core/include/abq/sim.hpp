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
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "abq/crypto.hpp"
#include "abq/expander.hpp"
#include "abq/messages.hpp"
#include "abq/proofs.hpp"
#include "abq/rng.hpp"
#include "abq/trace.hpp"
#include "abq/types.hpp"

namespace abq::sim {

/// Ideal common-coin functionality: all quorum nodes querying a round see the
/// same uniform bit. Hash-based, so the value is fixed by (seed, round) and
/// independent of query order, and revealed only when first queried.
class CoinOracle {
 public:
  explicit CoinOracle(std::uint64_t seed) : seed_(seed) {}

  BinValue bit(std::uint32_t round) const {
    return make_bin(static_cast<int>(splitmix64(seed_ ^ (0xc01ull << 32) ^ round) & 1));
  }

 private:
  std::uint64_t seed_;
};

enum class BehaviorKind : std::uint8_t {
  honest,
  crash,           // follows the protocol until crash_at, then goes silent
  silent_leader,   // follows the protocol but never acts as leader
  equivocator,     // leader splits proposals/values between party halves
  mirror_input,    // honest protocol with a forced input value
  scripted_ignore  // honest protocol, but drops inbound messages per rules
};

struct IgnoreRule {
  NodeId from;
  std::int64_t first_k{-1};  // ignore the first k messages from `from`; -1 = all
};

struct ByzantineBehavior {
  BehaviorKind kind{BehaviorKind::honest};
  Time crash_at{0};
  std::optional<BinValue> forced_input;
  std::vector<IgnoreRule> rules;
};

enum class SchedulerKind : std::uint8_t {
  immediate,     // every message delivered one tick after it is sent
  random_psync,  // adversarial-but-bounded: deliver in (s, max(s, gst) + delta]
  async_random,  // arbitrary reordering, bounded by the fairness rule
  main_lb        // the lower-bound stress schedule (C<->C and first-k withheld)
};

struct AdversaryPolicy {
  std::map<std::uint32_t, ByzantineBehavior> behaviors;  // corrupted index -> behavior
  SchedulerKind scheduler{SchedulerKind::immediate};
  /// async_random: a pending message must be delivered before this many newer
  /// deliveries happen.
  std::uint64_t fairness_bound{64};
  /// main_lb: the schedule's own fault parameter; |C| = floor(sched_t / 2).
  std::uint32_t sched_t{0};

  std::vector<NodeId> corrupted() const {
    std::vector<NodeId> out;
    for (const auto& [idx, b] : behaviors) out.push_back(NodeId{idx});
    return out;
  }
};

/// Everything trusted setup provides to every node before the run: schemes,
/// identities, quorum membership, the dissemination graph, the coin.
struct RunSetup {
  SystemParams params;
  std::vector<BinValue> inputs;
  crypto::SchemeSet schemes;
  std::vector<NodeId> quorum;
  std::shared_ptr<const expander::BipartiteGraph> graph;  // null = direct-fanout fallback
  std::shared_ptr<CoinOracle> coin;
  std::shared_ptr<crypto::SigningLog> log = std::make_shared<crypto::SigningLog>();
  std::uint64_t seed{1};

  /// QAB embedding: the verify predicate and (standalone mode) the common
  /// quorum input value.
  std::function<bool(const CertifiedValue&)> qab_verify;
  std::optional<CertifiedValue> qab_input;

  bool in_quorum(NodeId p) const {
    for (auto q : quorum)
      if (q == p) return true;
    return false;
  }
};

/// Per-node handle into the running simulation.
class Context {
 public:
  virtual ~Context() = default;
  virtual Time now() const = 0;
  virtual NodeId self() const = 0;
  virtual void send(NodeId to, ViewNumber view, msg::Payload payload) = 0;
  virtual void decide(BinValue v) = 0;
  virtual void schedule_wakeup(Time at) = 0;
  virtual void note_view(ViewNumber v) = 0;
  virtual const crypto::Keychain& keychain() const = 0;
  virtual const RunSetup& setup() const = 0;
};

/// Event-driven protocol instance. Handlers are pure with respect to the
/// context: all effects flow through it.
struct INode {
  virtual ~INode() = default;
  virtual void on_start(Context&) {}
  virtual void on_message(Context&, const msg::ProtocolMessage&) = 0;
  virtual void on_wakeup(Context&) {}
};

using NodeFactory =
    std::function<std::unique_ptr<INode>(NodeId, const RunSetup&, const ByzantineBehavior&)>;

/// Generic behavior wrappers usable for any protocol.
std::unique_ptr<INode> wrap_crash(std::unique_ptr<INode> inner, Time crash_at);
std::unique_ptr<INode> wrap_scripted_ignore(std::unique_ptr<INode> inner, std::vector<IgnoreRule> rules);

struct RunOptions {
  std::uint64_t max_events{1'000'000};
  Time horizon_time{0};  // 0 = no time horizon (async pool runs cap on events)
};

/// Execute one deterministic run. The returned trace is a pure function of
/// (setup, adversary, options).
Trace run_simulation(const RunSetup& setup, const AdversaryPolicy& adversary, const NodeFactory& factory,
                     const RunOptions& opts = {});

/// Perfect-clock view computation: a node is in view i during
/// [i*len*delta, (i+1)*len*delta).
inline ViewNumber view_at(Time now, Time delta, std::uint32_t len) {
  if (now < 0) return ViewNumber{0};
  return ViewNumber{static_cast<std::uint64_t>(now / (delta * static_cast<Time>(len)))};
}
inline Time view_start(ViewNumber v, Time delta, std::uint32_t len) {
  return static_cast<Time>(v.value) * delta * static_cast<Time>(len);
}
inline Time next_view_boundary(Time now, Time delta, std::uint32_t len) {
  return view_start(ViewNumber{view_at(now, delta, len).value + 1}, delta, len);
}

/// View lengths (in multiples of delta) used by the view-based protocols.
constexpr std::uint32_t kAgreementViewLen = 9;
constexpr std::uint32_t kQabViewLen = 3;

/// Delivery-time policy for partial synchrony: strictly after s, no later
/// than max(s, gst) + delta. The immediate policy is s + 1.
Time psync_delivery(Time sent_at, Time delta, Time gst, bool immediate, Rng& rng);

/// Nodes of the main_lb schedule's delayed class C (the highest-indexed
/// floor(sched_t/2) nodes).
std::set<NodeId> main_schedule_c_set(std::uint32_t n, std::uint32_t sched_t);

}  // namespace abq::sim

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

#include "abq/sim.hpp"

#include <algorithm>
#include <cassert>
#include <queue>

namespace abq::sim {

namespace {

class CrashNode : public INode {
 public:
  CrashNode(std::unique_ptr<INode> inner, Time at) : inner_(std::move(inner)), at_(at) {}

  void on_start(Context& ctx) override {
    if (ctx.now() < at_) inner_->on_start(ctx);
  }
  void on_message(Context& ctx, const msg::ProtocolMessage& m) override {
    if (ctx.now() < at_) inner_->on_message(ctx, m);
  }
  void on_wakeup(Context& ctx) override {
    if (ctx.now() < at_) inner_->on_wakeup(ctx);
  }

 private:
  std::unique_ptr<INode> inner_;
  Time at_;
};

class ScriptedIgnoreNode : public INode {
 public:
  ScriptedIgnoreNode(std::unique_ptr<INode> inner, std::vector<IgnoreRule> rules)
      : inner_(std::move(inner)), rules_(std::move(rules)) {}

  void on_start(Context& ctx) override { inner_->on_start(ctx); }
  void on_wakeup(Context& ctx) override { inner_->on_wakeup(ctx); }

  void on_message(Context& ctx, const msg::ProtocolMessage& m) override {
    for (const auto& rule : rules_) {
      if (rule.from != m.sender) continue;
      if (rule.first_k < 0) return;  // ignore all
      auto& seen = seen_[m.sender.index];
      if (seen < rule.first_k) {
        ++seen;
        return;
      }
    }
    inner_->on_message(ctx, m);
  }

 private:
  std::unique_ptr<INode> inner_;
  std::vector<IgnoreRule> rules_;
  std::map<std::uint32_t, std::int64_t> seen_;
};

}  // namespace

std::unique_ptr<INode> wrap_crash(std::unique_ptr<INode> inner, Time crash_at) {
  return std::make_unique<CrashNode>(std::move(inner), crash_at);
}

std::unique_ptr<INode> wrap_scripted_ignore(std::unique_ptr<INode> inner, std::vector<IgnoreRule> rules) {
  return std::make_unique<ScriptedIgnoreNode>(std::move(inner), std::move(rules));
}

Time psync_delivery(Time sent_at, Time delta, Time gst, bool immediate, Rng& rng) {
  if (immediate) return sent_at + 1;
  Time latest = std::max(sent_at, gst) + delta;
  return rng.between(sent_at + 1, latest);
}

std::set<NodeId> main_schedule_c_set(std::uint32_t n, std::uint32_t sched_t) {
  std::set<NodeId> c;
  std::uint32_t size = sched_t / 2;
  for (std::uint32_t i = 0; i < size && i < n; ++i) c.insert(NodeId{n - 1 - i});
  return c;
}

namespace {

class Engine;

class NodeContext final : public Context {
 public:
  NodeContext(Engine* engine, NodeId self, crypto::Keychain keychain)
      : engine_(engine), self_(self), keychain_(std::move(keychain)) {}

  Time now() const override;
  NodeId self() const override { return self_; }
  void send(NodeId to, ViewNumber view, msg::Payload payload) override;
  void decide(BinValue v) override;
  void schedule_wakeup(Time at) override;
  void note_view(ViewNumber v) override;
  const crypto::Keychain& keychain() const override { return keychain_; }
  const RunSetup& setup() const override;

 private:
  Engine* engine_;
  NodeId self_;
  crypto::Keychain keychain_;
};

class Engine {
 public:
  Engine(const RunSetup& setup, const AdversaryPolicy& adversary, const NodeFactory& factory,
         const RunOptions& opts)
      : setup_(setup),
        adversary_(adversary),
        opts_(opts),
        rng_(derive_seed(setup.seed, 0x5ced)),
        pool_mode_(adversary.scheduler == SchedulerKind::async_random ||
                   adversary.scheduler == SchedulerKind::main_lb) {
    const auto& p = setup_.params;
    p.validate_basic();
    if (adversary_.behaviors.size() != p.f)
      throw std::invalid_argument("adversary behaviors must cover exactly f nodes");
    for (const auto& [idx, b] : adversary_.behaviors)
      if (idx >= p.n) throw std::invalid_argument("corrupted node index out of range");

    trace_.params = p;
    trace_.inputs = setup_.inputs;
    trace_.corrupted = adversary_.corrupted();
    trace_.signing_log = setup_.log;
    honest_undecided_ = p.n - static_cast<std::uint32_t>(adversary_.behaviors.size());

    if (adversary_.scheduler == SchedulerKind::main_lb) {
      std::uint32_t st = adversary_.sched_t ? adversary_.sched_t : p.t;
      c_set_ = main_schedule_c_set(p.n, st);
      withhold_quota_ = st / 2;
    }

    contexts_.reserve(p.n);
    nodes_.reserve(p.n);
    for (std::uint32_t i = 0; i < p.n; ++i) {
      NodeId id{i};
      auto it = adversary_.behaviors.find(i);
      bool corrupted = it != adversary_.behaviors.end();
      // Corrupted keychains do not write the signing log: the log is the
      // record of honest signing actions the capability audit checks against.
      crypto::Keychain chain(id, corrupted ? nullptr : setup_.log);
      contexts_.push_back(std::make_unique<NodeContext>(this, id, std::move(chain)));
      ByzantineBehavior behavior = corrupted ? it->second : ByzantineBehavior{};
      auto node = factory(id, setup_, behavior);
      if (behavior.kind == BehaviorKind::crash) node = wrap_crash(std::move(node), behavior.crash_at);
      if (behavior.kind == BehaviorKind::scripted_ignore)
        node = wrap_scripted_ignore(std::move(node), behavior.rules);
      nodes_.push_back(std::move(node));
    }
  }

  Trace run() {
    for (std::uint32_t i = 0; i < setup_.params.n; ++i) nodes_[i]->on_start(*contexts_[i]);
    if (pool_mode_)
      run_pool();
    else
      run_timed();
    trace_.completed = trace_.all_honest_decided() && !trace_.horizon_exceeded;
    return std::move(trace_);
  }

  // ---- context operations ----

  Time now() const { return now_; }
  const RunSetup& setup() const { return setup_; }

  void do_send(NodeId from, NodeId to, ViewNumber view, msg::Payload payload) {
    std::uint64_t id = next_send_index_++;
    msg::ProtocolMessage m{from, to, view, std::move(payload), id};
    record(EventKind::send, from, m);
    if (pool_mode_) {
      Pending p;
      p.msg = std::move(m);
      p.send_index = id;
      p.deadline = deliveries_done_ + adversary_.fairness_bound;
      p.withheld = classify_withheld(p.msg);
      pool_.push_back(std::move(p));
    } else {
      Time at;
      if (from == to) {
        at = now_;  // self copies are local computation, delivered in place
      } else {
        bool immediate = adversary_.scheduler == SchedulerKind::immediate;
        at = psync_delivery(now_, setup_.params.delta, setup_.params.gst, immediate, rng_);
      }
      queue_.push(QItem{at, next_order_++, false, std::move(m), to});
      ++in_flight_;
    }
  }

  void do_decide(NodeId who, BinValue v) {
    if (trace_.decisions.count(who.index)) return;
    trace_.decisions.emplace(who.index, Decision{v, now_});
    Event e;
    e.time = now_;
    e.seq = next_seq_++;
    e.kind = EventKind::decide;
    e.node = who;
    e.decided = v;
    trace_.events.push_back(std::move(e));
    if (!trace_.is_corrupted(who) && honest_undecided_ > 0) --honest_undecided_;
  }

  void do_schedule_wakeup(NodeId who, Time at) {
    if (pool_mode_) return;  // asynchronous protocols are message-driven
    if (at < now_) at = now_;
    if (!scheduled_wakeups_.insert({who.index, at}).second) return;
    queue_.push(QItem{at, next_order_++, true, {}, who});
  }

  void do_note_view(NodeId who, ViewNumber v) {
    Event e;
    e.time = now_;
    e.seq = next_seq_++;
    e.kind = EventKind::view_enter;
    e.node = who;
    e.view = v;
    trace_.events.push_back(std::move(e));
  }

 private:
  struct QItem {
    Time time{0};
    std::uint64_t order{0};
    bool is_wakeup{false};
    msg::ProtocolMessage msg;
    NodeId node;
  };
  struct QItemCmp {
    bool operator()(const QItem& a, const QItem& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.order > b.order;
    }
  };
  struct Pending {
    msg::ProtocolMessage msg;
    std::uint64_t send_index{0};
    std::uint64_t deadline{0};
    bool withheld{false};
  };

  void record(EventKind kind, NodeId node, const msg::ProtocolMessage& m) {
    Event e;
    e.time = now_;
    e.seq = next_seq_++;
    e.kind = kind;
    e.node = node;
    e.message = m;
    e.view = m.view;
    trace_.events.push_back(std::move(e));
  }

  void record_timer(NodeId node) {
    Event e;
    e.time = now_;
    e.seq = next_seq_++;
    e.kind = EventKind::timer_fire;
    e.node = node;
    trace_.events.push_back(std::move(e));
  }

  bool all_honest_decided() const { return honest_undecided_ == 0; }

  bool classify_withheld(const msg::ProtocolMessage& m) {
    if (adversary_.scheduler != SchedulerKind::main_lb) return false;
    if (all_honest_decided()) return false;
    if (m.sender == m.receiver) return false;  // local computation, not a message
    bool from_c = c_set_.count(m.sender) > 0;
    bool to_c = c_set_.count(m.receiver) > 0;
    if (from_c && to_c) return true;
    if (!from_c && to_c) {
      auto& count = b_to_c_count_[m.receiver.index];
      if (count < withhold_quota_) {
        ++count;
        return true;
      }
    }
    return false;
  }

  void run_timed() {
    while (!queue_.empty()) {
      if (trace_.events.size() > opts_.max_events) {
        trace_.horizon_exceeded = true;
        trace_.notes.push_back("event-horizon");
        break;
      }
      QItem item = queue_.top();
      if (opts_.horizon_time > 0 && item.time > opts_.horizon_time) {
        trace_.horizon_exceeded = true;
        trace_.notes.push_back("time-horizon");
        break;
      }
      queue_.pop();
      if (item.is_wakeup) {
        scheduled_wakeups_.erase({item.node.index, item.time});
        if (all_honest_decided()) continue;  // only deliveries matter post-decision
        now_ = std::max(now_, item.time);
        record_timer(item.node);
        nodes_[item.node.index]->on_wakeup(*contexts_[item.node.index]);
      } else {
        --in_flight_;
        now_ = std::max(now_, item.time);
        record(EventKind::deliver, item.node, item.msg);
        nodes_[item.node.index]->on_message(*contexts_[item.node.index], item.msg);
      }
      if (all_honest_decided() && in_flight_ == 0) break;
    }
  }

  void run_pool() {
    while (true) {
      if (trace_.events.size() > opts_.max_events) {
        trace_.horizon_exceeded = true;
        trace_.notes.push_back("event-horizon");
        if (has_withheld()) release_withheld();
        break;
      }
      if (all_honest_decided() && has_withheld()) release_withheld();

      // Select the next message to deliver among non-withheld pending ones.
      std::size_t chosen = pool_.size();
      if (adversary_.scheduler == SchedulerKind::main_lb) {
        // FIFO among the immediately-delivered class.
        std::uint64_t best = UINT64_MAX;
        for (std::size_t i = 0; i < pool_.size(); ++i)
          if (!pool_[i].withheld && pool_[i].send_index < best) {
            best = pool_[i].send_index;
            chosen = i;
          }
      } else {
        // Fairness rule: any message pending past its deadline goes first;
        // otherwise the adversary (rng) picks freely.
        std::size_t overdue = pool_.size();
        std::uint64_t best_deadline = UINT64_MAX, best_index = UINT64_MAX;
        std::vector<std::size_t> candidates;
        candidates.reserve(pool_.size());
        for (std::size_t i = 0; i < pool_.size(); ++i) {
          if (pool_[i].withheld) continue;
          candidates.push_back(i);
          if (pool_[i].deadline < best_deadline ||
              (pool_[i].deadline == best_deadline && pool_[i].send_index < best_index)) {
            best_deadline = pool_[i].deadline;
            best_index = pool_[i].send_index;
            overdue = i;
          }
        }
        if (!candidates.empty()) {
          if (best_deadline <= deliveries_done_)
            chosen = overdue;
          else
            chosen = candidates[rng_.below(candidates.size())];
        }
      }

      if (chosen == pool_.size()) {
        if (has_withheld()) {
          if (!all_honest_decided()) {
            // The protocol stalled with only withheld traffic left; the
            // schedule's "until after everyone decides" is ill-defined here.
            // Release at the horizon and flag the run.
            trace_.horizon_exceeded = true;
            trace_.notes.push_back("main-early-release");
          }
          release_withheld();
          continue;
        }
        break;  // quiescent
      }

      Pending p = std::move(pool_[chosen]);
      // Swap-remove: selection goes by the stored send_index/deadline fields,
      // so vector position carries no meaning.
      pool_[chosen] = std::move(pool_.back());
      pool_.pop_back();
      ++deliveries_done_;
      now_ += 1;
      record(EventKind::deliver, p.msg.receiver, p.msg);
      nodes_[p.msg.receiver.index]->on_message(*contexts_[p.msg.receiver.index], p.msg);
    }
  }

  bool has_withheld() const {
    for (const auto& p : pool_)
      if (p.withheld) return true;
    return false;
  }

  void release_withheld() {
    for (auto& p : pool_)
      if (p.withheld) {
        p.withheld = false;
        p.deadline = deliveries_done_ + adversary_.fairness_bound;
      }
  }

  friend class NodeContext;

  const RunSetup& setup_;
  AdversaryPolicy adversary_;
  RunOptions opts_;
  Rng rng_;
  bool pool_mode_{false};

  Trace trace_;
  Time now_{0};
  std::uint64_t next_seq_{0};
  std::uint64_t next_order_{0};
  std::uint64_t next_send_index_{0};
  std::uint64_t deliveries_done_{0};
  std::uint64_t in_flight_{0};
  std::uint32_t honest_undecided_{0};

  std::priority_queue<QItem, std::vector<QItem>, QItemCmp> queue_;
  std::set<std::pair<std::uint32_t, Time>> scheduled_wakeups_;
  std::vector<Pending> pool_;

  std::set<NodeId> c_set_;
  std::uint32_t withhold_quota_{0};
  std::map<std::uint32_t, std::uint32_t> b_to_c_count_;

  std::vector<std::unique_ptr<NodeContext>> contexts_;
  std::vector<std::unique_ptr<INode>> nodes_;
};

Time NodeContext::now() const { return engine_->now(); }
void NodeContext::send(NodeId to, ViewNumber view, msg::Payload payload) {
  engine_->do_send(self_, to, view, std::move(payload));
}
void NodeContext::decide(BinValue v) { engine_->do_decide(self_, v); }
void NodeContext::schedule_wakeup(Time at) { engine_->do_schedule_wakeup(self_, at); }
void NodeContext::note_view(ViewNumber v) { engine_->do_note_view(self_, v); }
const RunSetup& NodeContext::setup() const { return engine_->setup(); }

}  // namespace

Trace run_simulation(const RunSetup& setup, const AdversaryPolicy& adversary, const NodeFactory& factory,
                     const RunOptions& opts) {
  Engine engine(setup, adversary, factory, opts);
  return engine.run();
}

}  // namespace abq::sim

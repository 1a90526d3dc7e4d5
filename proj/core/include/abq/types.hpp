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

#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace abq {

/// Simulated time in integer ticks. The network bound delta is itself an
/// integer number of ticks, so every deadline derived from it is exact and
/// runs are bit-reproducible.
using Time = std::int64_t;

/// Identity of one of the n parties. Total order by index.
struct NodeId {
  std::uint32_t index{0};

  auto operator<=>(const NodeId&) const = default;
};

struct ViewNumber {
  std::uint64_t value{0};

  auto operator<=>(const ViewNumber&) const = default;
};

/// A binary agreement value.
enum class BinValue : std::uint8_t { zero = 0, one = 1 };

constexpr BinValue make_bin(int b) { return b ? BinValue::one : BinValue::zero; }
constexpr int bit_of(BinValue v) { return v == BinValue::one ? 1 : 0; }
constexpr BinValue flip(BinValue v) { return v == BinValue::one ? BinValue::zero : BinValue::one; }

/// Run-wide parameters: n parties, up to t tolerated faults, f actual faults,
/// the known bound delta and the (unknown to the protocol) stabilization time.
struct SystemParams {
  std::uint32_t n{0};
  std::uint32_t t{0};
  std::uint32_t f{0};
  Time delta{1000};
  Time gst{0};

  void validate_basic() const {
    if (n == 0) throw std::invalid_argument("SystemParams: n must be positive");
    if (f > t) throw std::invalid_argument("SystemParams: f must not exceed t");
    if (t > n) throw std::invalid_argument("SystemParams: t must not exceed n");
    if (delta <= 0) throw std::invalid_argument("SystemParams: delta must be positive");
    if (gst < 0) throw std::invalid_argument("SystemParams: gst must be non-negative");
  }

  /// Resilience bound shared by the view-based agreement and the async
  /// composition: t < n/3.
  bool third_resilient() const { return 3ull * t < n; }
};

/// Round-robin leader of a view among n parties.
inline NodeId leader_of(ViewNumber view, std::uint32_t n) {
  if (n == 0) throw std::invalid_argument("leader_of: n must be positive");
  return NodeId{static_cast<std::uint32_t>(view.value % n)};
}

/// Round-robin leader among an explicit participant list (used when a
/// protocol runs on a subset such as the quorum).
inline NodeId leader_of(ViewNumber view, std::span<const NodeId> participants) {
  if (participants.empty()) throw std::invalid_argument("leader_of: empty participant set");
  return participants[static_cast<std::size_t>(view.value % participants.size())];
}

}  // namespace abq

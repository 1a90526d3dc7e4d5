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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "abq/types.hpp"

namespace abq::expander {

/// Left-regular bipartite graph: left side = the n parties, right side =
/// relayer roles. Relayer role r is hosted by physical node (r mod n).
struct BipartiteGraph {
  std::uint32_t n_left{0};
  std::uint32_t n_right{0};
  std::uint32_t degree{0};
  std::uint32_t t{0};
  double c{2.0};
  std::uint64_t seed{0};
  std::vector<std::vector<std::uint32_t>> adj;  // per left vertex, sorted distinct right ids

  /// Physical node hosting relayer role r (round-robin role assignment).
  NodeId host(std::uint32_t relayer) const { return NodeId{relayer % n_left}; }

  /// Right-side neighborhoods (committees, before the host convention).
  std::vector<std::vector<std::uint32_t>> right_adjacency() const;
};

struct Overrides {
  std::optional<std::uint32_t> degree;
  std::optional<std::uint32_t> relayers;
};

/// Degree and relayer-count formulas: D = ceil(c*log2 n), R = ceil(8*c*t*log2 n).
std::uint32_t default_degree(std::uint32_t n, double c);
std::uint32_t default_relayers(std::uint32_t n, std::uint32_t t, double c);

/// Seeded uniform construction: each left vertex draws `degree` distinct
/// right vertices without replacement. Deterministic per seed.
/// Throws std::invalid_argument ("degree exceeds relayers") if D > R.
BipartiteGraph build_graph(std::uint32_t n, std::uint32_t t, double c, std::uint64_t seed,
                           Overrides overrides = {});

struct ExpansionCertificate {
  enum class Mode { exhaustive, sampled };
  Mode mode{Mode::exhaustive};
  bool verified{false};
  std::uint64_t subsets_checked{0};
  double worst_ratio{0.0};  // min over checked S of |N(S)| / (t*D + 1)
  std::vector<std::uint32_t> counterexample;  // a violating S, when verified=false
};

/// Check property: every left subset S with |S| = 2t+1 has |N(S)| > t*D
/// (sufficient for all larger S by monotonicity of N under inclusion).
/// Exhaustive when C(n, 2t+1) <= exhaustive_limit, else sampled.
ExpansionCertificate verify_expansion(const BipartiteGraph& g, std::uint32_t t,
                                      std::uint64_t exhaustive_limit = 1'000'000,
                                      std::uint64_t samples = 2000, std::uint64_t sample_seed = 7);

/// Relayers adjacent to at least one faulty party, plus roles hosted by a
/// faulty node (a node holding both roles links its own party to its own
/// relayer role).
std::set<std::uint32_t> blocked_relayers(const BipartiteGraph& g, const std::set<NodeId>& faulty);

/// Parties whose relayers (graph neighbors plus self-hosted roles) are all
/// blocked.
std::set<NodeId> disconnected_parties(const BipartiteGraph& g, const std::set<NodeId>& faulty);

/// Number of size-k subsets of an n-set, saturating at `cap`.
std::uint64_t subset_count(std::uint32_t n, std::uint32_t k, std::uint64_t cap);

/// Text format: header "n R D t c seed", then one adjacency line per left vertex.
std::string export_text(const BipartiteGraph& g);
BipartiteGraph import_text(std::istream& in);

}  // namespace abq::expander

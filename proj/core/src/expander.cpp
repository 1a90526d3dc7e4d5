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

#include "abq/expander.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "abq/rng.hpp"

namespace abq::expander {

std::vector<std::vector<std::uint32_t>> BipartiteGraph::right_adjacency() const {
  std::vector<std::vector<std::uint32_t>> radj(n_right);
  for (std::uint32_t p = 0; p < n_left; ++p)
    for (auto r : adj[p]) radj[r].push_back(p);
  return radj;
}

std::uint32_t default_degree(std::uint32_t n, double c) {
  double d = c * std::log2(std::max<std::uint32_t>(n, 2));
  return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(d)));
}

std::uint32_t default_relayers(std::uint32_t n, std::uint32_t t, double c) {
  double r = 8.0 * c * static_cast<double>(t) * std::log2(std::max<std::uint32_t>(n, 2));
  return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(r)));
}

BipartiteGraph build_graph(std::uint32_t n, std::uint32_t t, double c, std::uint64_t seed,
                           Overrides overrides) {
  if (n == 0) throw std::invalid_argument("build_graph: n must be positive");
  std::uint32_t degree = overrides.degree.value_or(default_degree(n, c));
  std::uint32_t relayers = overrides.relayers.value_or(default_relayers(n, t, c));
  if (degree > relayers) throw std::invalid_argument("build_graph: degree exceeds relayers");

  BipartiteGraph g;
  g.n_left = n;
  g.n_right = relayers;
  g.degree = degree;
  g.t = t;
  g.c = c;
  g.seed = seed;
  g.adj.resize(n);

  Rng rng(derive_seed(seed, 0x9a9));
  std::vector<std::uint32_t> pool(relayers);
  for (std::uint32_t p = 0; p < n; ++p) {
    // Partial Fisher-Yates: the first `degree` entries form a uniform sample
    // without replacement.
    for (std::uint32_t i = 0; i < relayers; ++i) pool[i] = i;
    for (std::uint32_t i = 0; i < degree; ++i) {
      auto j = i + static_cast<std::uint32_t>(rng.below(relayers - i));
      std::swap(pool[i], pool[j]);
    }
    g.adj[p].assign(pool.begin(), pool.begin() + degree);
    std::sort(g.adj[p].begin(), g.adj[p].end());
  }
  return g;
}

std::uint64_t subset_count(std::uint32_t n, std::uint32_t k, std::uint64_t cap) {
  if (k > n) return 0;
  long double acc = 1.0L;
  for (std::uint32_t i = 0; i < k; ++i) {
    acc = acc * static_cast<long double>(n - i) / static_cast<long double>(i + 1);
    if (acc > static_cast<long double>(cap) * 2.0L) return cap + 1;
  }
  return static_cast<std::uint64_t>(acc + 0.5L);
}

namespace {

std::uint32_t neighborhood_size(const BipartiteGraph& g, const std::vector<std::uint32_t>& subset,
                                std::vector<std::uint32_t>& mark, std::uint32_t stamp) {
  std::uint32_t count = 0;
  for (auto p : subset)
    for (auto r : g.adj[p])
      if (mark[r] != stamp) {
        mark[r] = stamp;
        ++count;
      }
  return count;
}

}  // namespace

ExpansionCertificate verify_expansion(const BipartiteGraph& g, std::uint32_t t,
                                      std::uint64_t exhaustive_limit, std::uint64_t samples,
                                      std::uint64_t sample_seed) {
  ExpansionCertificate cert;
  const std::uint32_t k = 2 * t + 1;
  const std::uint64_t threshold = static_cast<std::uint64_t>(t) * g.degree;  // need |N(S)| > threshold
  cert.worst_ratio = static_cast<double>(g.n_right) / static_cast<double>(threshold + 1);

  if (k > g.n_left) {
    // No subset of the required size exists; the property is vacuous.
    cert.mode = ExpansionCertificate::Mode::exhaustive;
    cert.verified = true;
    return cert;
  }

  std::vector<std::uint32_t> mark(g.n_right, 0);
  std::uint32_t stamp = 0;

  auto check = [&](const std::vector<std::uint32_t>& subset) {
    ++stamp;
    ++cert.subsets_checked;
    std::uint32_t ns = neighborhood_size(g, subset, mark, stamp);
    double ratio = static_cast<double>(ns) / static_cast<double>(threshold + 1);
    cert.worst_ratio = std::min(cert.worst_ratio, ratio);
    if (ns <= threshold && cert.counterexample.empty()) cert.counterexample = subset;
    return ns > threshold;
  };

  if (subset_count(g.n_left, k, exhaustive_limit) <= exhaustive_limit) {
    cert.mode = ExpansionCertificate::Mode::exhaustive;
    cert.verified = true;
    std::vector<std::uint32_t> subset(k);
    for (std::uint32_t i = 0; i < k; ++i) subset[i] = i;
    while (true) {
      if (!check(subset)) cert.verified = false;
      // next k-combination in lexicographic order
      int i = static_cast<int>(k) - 1;
      while (i >= 0 && subset[static_cast<std::size_t>(i)] ==
                           g.n_left - k + static_cast<std::uint32_t>(i))
        --i;
      if (i < 0) break;
      ++subset[static_cast<std::size_t>(i)];
      for (auto j = static_cast<std::uint32_t>(i) + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
    }
    return cert;
  }

  cert.mode = ExpansionCertificate::Mode::sampled;
  cert.verified = true;
  Rng rng(derive_seed(sample_seed, 0x5a3));
  std::vector<std::uint32_t> pool(g.n_left);
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (std::uint32_t i = 0; i < g.n_left; ++i) pool[i] = i;
    for (std::uint32_t i = 0; i < k; ++i) {
      auto j = i + static_cast<std::uint32_t>(rng.below(g.n_left - i));
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::uint32_t> subset(pool.begin(), pool.begin() + k);
    if (!check(subset)) cert.verified = false;
  }
  return cert;
}

std::set<std::uint32_t> blocked_relayers(const BipartiteGraph& g, const std::set<NodeId>& faulty) {
  std::set<std::uint32_t> blocked;
  for (auto p : faulty) {
    if (p.index >= g.n_left) throw std::invalid_argument("blocked_relayers: faulty id out of range");
    for (auto r : g.adj[p.index]) blocked.insert(r);
    // Self-link: a faulty node blocks the relayer roles it hosts.
    for (std::uint32_t r = p.index; r < g.n_right; r += g.n_left) blocked.insert(r);
  }
  return blocked;
}

std::set<NodeId> disconnected_parties(const BipartiteGraph& g, const std::set<NodeId>& faulty) {
  auto blocked = blocked_relayers(g, faulty);
  std::set<NodeId> out;
  for (std::uint32_t p = 0; p < g.n_left; ++p) {
    bool connected = false;
    for (auto r : g.adj[p])
      if (!blocked.count(r)) {
        connected = true;
        break;
      }
    // Self-link works for the party side too: a hosted unblocked role keeps
    // its host connected.
    if (!connected)
      for (std::uint32_t r = p; r < g.n_right; r += g.n_left)
        if (!blocked.count(r)) {
          connected = true;
          break;
        }
    if (!connected) out.insert(NodeId{p});
  }
  return out;
}

std::string export_text(const BipartiteGraph& g) {
  std::ostringstream out;
  out << g.n_left << " " << g.n_right << " " << g.degree << " " << g.t << " " << g.c << " " << g.seed
      << "\n";
  for (const auto& row : g.adj) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << row[i];
    out << "\n";
  }
  return out.str();
}

BipartiteGraph import_text(std::istream& in) {
  BipartiteGraph g;
  if (!(in >> g.n_left >> g.n_right >> g.degree >> g.t >> g.c >> g.seed))
    throw std::runtime_error("import_text: malformed header");
  g.adj.resize(g.n_left);
  for (std::uint32_t p = 0; p < g.n_left; ++p) {
    g.adj[p].resize(g.degree);
    for (std::uint32_t i = 0; i < g.degree; ++i)
      if (!(in >> g.adj[p][i])) throw std::runtime_error("import_text: truncated adjacency");
    if (!std::is_sorted(g.adj[p].begin(), g.adj[p].end()))
      throw std::runtime_error("import_text: adjacency not sorted");
  }
  return g;
}

}  // namespace abq::expander

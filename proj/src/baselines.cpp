// Copyright 2026 The permsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "permsynth/baselines.hpp"

#include <algorithm>
#include <limits>
#include <utility>

#include "permsynth/errors.hpp"

namespace permsynth {

namespace {

struct LocalEdge {
  NodeId a;
  NodeId b;
  int index;  // lattice edge index
};

// Sequential trial state for token_swap, reused across trials.
class TokenSwapTrial {
 public:
  TokenSwapTrial(const Permutation& perm, const TopologyMask& mask)
      : perm_(perm), mask_(mask), dist_(mask) {
    const Lattice& lat = mask.lattice();
    for (int e : mask.active_edges()) {
      edges_.push_back({lat.edge(e).a, lat.edge(e).b, e});
    }
    neighbours_.resize(lat.num_nodes());
    for (const LocalEdge& e : edges_) {
      neighbours_[e.a].emplace_back(e.b, e.index);
      neighbours_[e.b].emplace_back(e.a, e.index);
    }
  }

  // Returns the reducing edge sequence for one randomized trial.
  const std::vector<int>& run(Rng& rng) {
    tokens_.assign(perm_.destinations().begin(), perm_.destinations().end());
    moved_.assign(tokens_.size(), 0);
    swaps_.clear();
    int phi = 0;
    for (NodeId v : mask_.active_nodes()) phi += dist_(v, tokens_[v]);
    const int limit = 2 * phi + 2 * mask_.num_active_nodes();

    while (phi > 0) {
      if (static_cast<int>(swaps_.size()) > limit) {
        finish_by_leaf_elimination();
        return swaps_;
      }
      happy_.clear();
      for (const LocalEdge& e : edges_) {
        if (delta(e.a, e.b) == -2) happy_.push_back(&e);
      }
      if (!happy_.empty()) {
        const LocalEdge& e =
            *happy_[uniform_index(rng, static_cast<int>(happy_.size()))];
        apply(e.a, e.b, e.index);
        phi -= 2;
        std::fill(moved_.begin(), moved_.end(), 0);
        continue;
      }
      candidates_.clear();
      for (NodeId v : mask_.active_nodes()) {
        if (tokens_[v] != v && !moved_[tokens_[v]]) candidates_.push_back(v);
      }
      if (candidates_.empty()) {
        // Every unfinished token already took an unhappy step since the last
        // happy swap: open a new window.
        std::fill(moved_.begin(), moved_.end(), 0);
        continue;
      }
      const NodeId v =
          candidates_[uniform_index(rng, static_cast<int>(candidates_.size()))];
      const NodeId target = tokens_[v];
      steps_.clear();
      for (const auto& [w, e] : neighbours_[v]) {
        if (dist_(w, target) + 1 == dist_(v, target)) steps_.emplace_back(w, e);
      }
      const auto [w, e] =
          steps_[uniform_index(rng, static_cast<int>(steps_.size()))];
      phi += delta(v, w);
      // Both tokens of an unhappy swap count as moved; otherwise the
      // displaced token could step straight back.
      moved_[target] = 1;
      moved_[tokens_[w]] = 1;
      apply(v, w, e);
    }
    return swaps_;
  }

 private:
  int delta(NodeId a, NodeId b) const {
    return dist_(b, tokens_[a]) + dist_(a, tokens_[b]) - dist_(a, tokens_[a]) -
           dist_(b, tokens_[b]);
  }

  void apply(NodeId a, NodeId b, int edge) {
    std::swap(tokens_[a], tokens_[b]);
    swaps_.push_back(edge);
  }

  // Deterministic completion: repeatedly take the last node of a BFS order
  // over the remaining nodes (a spanning-tree leaf, so the rest stays
  // connected), route its token home along a shortest path, and retire it.
  void finish_by_leaf_elimination() {
    const int n = static_cast<int>(tokens_.size());
    std::vector<std::uint8_t> alive(n, 0);
    for (NodeId v : mask_.active_nodes()) alive[v] = 1;
    int remaining = mask_.num_active_nodes();
    std::vector<NodeId> order;
    std::vector<NodeId> parent(n);
    std::vector<int> parent_edge(n);
    while (remaining > 1) {
      NodeId root = -1;
      for (NodeId v : mask_.active_nodes()) {
        if (alive[v]) {
          root = v;
          break;
        }
      }
      order.assign(1, root);
      std::vector<std::uint8_t> seen(n, 0);
      seen[root] = 1;
      for (std::size_t h = 0; h < order.size(); ++h) {
        for (const auto& [w, e] : neighbours_[order[h]]) {
          if (alive[w] && !seen[w]) {
            seen[w] = 1;
            order.push_back(w);
          }
        }
      }
      const NodeId leaf = order.back();
      // BFS from the leaf gives shortest paths towards it.
      std::fill(seen.begin(), seen.end(), 0);
      order.assign(1, leaf);
      seen[leaf] = 1;
      for (std::size_t h = 0; h < order.size(); ++h) {
        for (const auto& [w, e] : neighbours_[order[h]]) {
          if (alive[w] && !seen[w]) {
            seen[w] = 1;
            parent[w] = order[h];
            parent_edge[w] = e;
            order.push_back(w);
          }
        }
      }
      NodeId at = -1;
      for (NodeId v : order) {
        if (tokens_[v] == leaf) at = v;
      }
      while (at != leaf) {
        apply(at, parent[at], parent_edge[at]);
        at = parent[at];
      }
      alive[leaf] = 0;
      --remaining;
    }
  }

  const Permutation& perm_;
  const TopologyMask& mask_;
  DistanceMatrix dist_;
  std::vector<LocalEdge> edges_;
  std::vector<std::vector<std::pair<NodeId, int>>> neighbours_;
  std::vector<NodeId> tokens_;
  std::vector<std::uint8_t> moved_;  // indexed by token (= its destination)
  std::vector<int> swaps_;
  std::vector<const LocalEdge*> happy_;
  std::vector<NodeId> candidates_;
  std::vector<std::pair<NodeId, int>> steps_;
};

void check_instance(const Permutation& perm, const TopologyMask& mask) {
  if (perm.size() != mask.lattice().num_nodes()) {
    throw InvalidArgument("permutation size does not match lattice");
  }
  if (!perm.fixes_inactive(mask)) {
    throw InvalidArgument("permutation moves tokens on inactive nodes");
  }
}

std::uint32_t factorial(int k) {
  std::uint32_t f = 1;
  for (int i = 2; i <= k; ++i) f *= static_cast<std::uint32_t>(i);
  return f;
}

// Active nodes renumbered 0..k-1 with edges in local ids.
struct LocalGraph {
  std::vector<NodeId> nodes;
  std::vector<int> local_of;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> edge_index;

  explicit LocalGraph(const TopologyMask& mask)
      : nodes(mask.active_nodes()),
        local_of(mask.lattice().num_nodes(), -1) {
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      local_of[nodes[i]] = i;
    }
    for (int e : mask.active_edges()) {
      const Edge& edge = mask.lattice().edge(e);
      edges.emplace_back(local_of[edge.a], local_of[edge.b]);
      edge_index.push_back(e);
    }
  }

  std::vector<int> localize(const Permutation& perm) const {
    std::vector<int> p(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      p[i] = local_of[perm[nodes[i]]];
    }
    return p;
  }
};

}  // namespace

SwapCircuit token_swap(const Permutation& perm, const TopologyMask& mask,
                       const TokenSwapOptions& options, Rng& rng) {
  check_instance(perm, mask);
  if (options.trials < 1) throw InvalidArgument("trials must be >= 1");
  if (perm.is_identity()) return SwapCircuit{mask, perm, {}};

  TokenSwapTrial trial(perm, mask);
  std::vector<int> best;
  int best_depth = std::numeric_limits<int>::max();
  std::vector<Edge> gates;
  for (int t = 0; t < options.trials; ++t) {
    const std::vector<int>& swaps = trial.run(rng);
    if (t > 0 && swaps.size() > best.size()) continue;
    gates.clear();
    for (int e : swaps) gates.push_back(mask.lattice().edge(e));
    const int depth = circuit_depth(gates);
    if (t == 0 || swaps.size() < best.size() || depth < best_depth) {
      best = swaps;
      best_depth = depth;
    }
  }
  SwapCircuit out = circuit_from_reduction(mask, perm, best);
  if (!verify(out)) throw ContractViolation("token swap produced a bad circuit");
  return out;
}

std::uint32_t permutation_rank(const std::vector<int>& p) {
  const int k = static_cast<int>(p.size());
  std::uint32_t rank = 0;
  for (int i = 0; i < k; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < k; ++j) smaller += p[j] < p[i];
    rank = rank * static_cast<std::uint32_t>(k - i) + smaller;
  }
  return rank;
}

std::vector<int> permutation_unrank(std::uint32_t rank, int k) {
  std::vector<int> digits(k);
  for (int i = k - 1; i >= 0; --i) {
    const auto base = static_cast<std::uint32_t>(k - i);
    digits[i] = static_cast<int>(rank % base);
    rank /= base;
  }
  std::vector<int> pool(k);
  for (int i = 0; i < k; ++i) pool[i] = i;
  std::vector<int> p(k);
  for (int i = 0; i < k; ++i) {
    p[i] = pool[digits[i]];
    pool.erase(pool.begin() + digits[i]);
  }
  return p;
}

OptimalResult bfs_optimal(const Permutation& perm, const TopologyMask& mask) {
  check_instance(perm, mask);
  const int k = mask.num_active_nodes();
  if (k > kMaxOracleNodes) {
    throw CapacityError("exact search supports at most " +
                        std::to_string(kMaxOracleNodes) +
                        " active nodes (topology has " + std::to_string(k) +
                        ")");
  }
  if (perm.is_identity()) return {0, SwapCircuit{mask, perm, {}}};

  const LocalGraph g(mask);
  const std::uint32_t states = factorial(k);
  constexpr std::int8_t kUnseen = -1;
  constexpr std::int8_t kRoot = -2;

  struct Side {
    std::vector<std::int8_t> via;
    std::vector<std::uint8_t> depth;
    std::vector<std::uint32_t> frontier;
    int level = 0;
  };
  Side sides[2];
  for (Side& s : sides) {
    s.via.assign(states, kUnseen);
    s.depth.assign(states, 0);
  }
  const std::uint32_t start = permutation_rank(g.localize(perm));
  sides[0].via[start] = kRoot;
  sides[0].frontier = {start};
  sides[1].via[0] = kRoot;  // rank 0 is the identity
  sides[1].frontier = {0};

  int best = std::numeric_limits<int>::max();
  std::uint32_t meet = 0;
  std::vector<std::uint32_t> next;
  while (best == std::numeric_limits<int>::max()) {
    const int x = sides[0].frontier.size() <= sides[1].frontier.size() ? 0 : 1;
    Side& self = sides[x];
    const Side& other = sides[1 - x];
    if (self.frontier.empty()) {
      throw ContractViolation("exact search exhausted a connected topology");
    }
    next.clear();
    for (std::uint32_t r : self.frontier) {
      std::vector<int> p = permutation_unrank(r, k);
      for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const auto [i, j] = g.edges[e];
        std::swap(p[i], p[j]);
        const std::uint32_t q = permutation_rank(p);
        std::swap(p[i], p[j]);
        if (self.via[q] != kUnseen) continue;
        self.via[q] = static_cast<std::int8_t>(e);
        self.depth[q] = static_cast<std::uint8_t>(self.level + 1);
        next.push_back(q);
        if (other.via[q] != kUnseen) {
          const int total = self.level + 1 + other.depth[q];
          if (total < best) {
            best = total;
            meet = q;
          }
        }
      }
    }
    self.frontier.swap(next);
    ++self.level;
  }

  auto walk = [&](const Side& side, std::uint32_t from) {
    std::vector<int> path;
    std::uint32_t r = from;
    while (side.via[r] != kRoot) {
      const int e = side.via[r];
      path.push_back(e);
      std::vector<int> p = permutation_unrank(r, k);
      std::swap(p[g.edges[e].first], p[g.edges[e].second]);
      r = permutation_rank(p);
    }
    return path;
  };
  std::vector<int> to_start = walk(sides[0], meet);
  std::vector<int> to_goal = walk(sides[1], meet);
  std::vector<int> reduction;
  for (auto it = to_start.rbegin(); it != to_start.rend(); ++it) {
    reduction.push_back(g.edge_index[*it]);
  }
  for (int e : to_goal) reduction.push_back(g.edge_index[e]);

  OptimalResult out{best, circuit_from_reduction(mask, perm, reduction)};
  if (out.witness.gate_count() != best || !verify(out.witness)) {
    throw ContractViolation("exact search witness is inconsistent");
  }
  return out;
}

OptimalSwapTable::OptimalSwapTable(const TopologyMask& mask)
    : nodes_(mask.active_nodes()), local_of_(mask.lattice().num_nodes(), -1) {
  const int k = mask.num_active_nodes();
  if (k > kMaxOracleNodes) {
    throw CapacityError("swap table supports at most " +
                        std::to_string(kMaxOracleNodes) + " active nodes");
  }
  const LocalGraph g(mask);
  local_of_ = g.local_of;
  dist_.assign(factorial(k), 0xff);
  dist_[0] = 0;
  std::vector<std::uint32_t> frontier = {0};
  std::vector<std::uint32_t> next;
  int level = 0;
  while (!frontier.empty()) {
    next.clear();
    for (std::uint32_t r : frontier) {
      std::vector<int> p = permutation_unrank(r, k);
      for (const auto& [i, j] : g.edges) {
        std::swap(p[i], p[j]);
        const std::uint32_t q = permutation_rank(p);
        std::swap(p[i], p[j]);
        if (dist_[q] == 0xff) {
          dist_[q] = static_cast<std::uint8_t>(level + 1);
          next.push_back(q);
        }
      }
    }
    if (!next.empty()) max_distance_ = level + 1;
    frontier.swap(next);
    ++level;
  }
}

int OptimalSwapTable::distance(const Permutation& perm) const {
  if (perm.size() != static_cast<int>(local_of_.size())) {
    throw InvalidArgument("permutation size does not match lattice");
  }
  std::vector<int> p(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const int l = local_of_[perm[nodes_[i]]];
    if (l < 0) throw InvalidArgument("permutation moves tokens on inactive nodes");
    p[i] = l;
  }
  return dist_[permutation_rank(p)];
}

}  // namespace permsynth

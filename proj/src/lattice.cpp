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

#include "permsynth/lattice.hpp"

#include <algorithm>
#include <queue>

#include "permsynth/errors.hpp"

namespace permsynth {

Lattice::Lattice(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1 || rows * cols < 2) {
    throw InvalidArgument("lattice needs rows >= 1, cols >= 1 and at least 2 "
                          "nodes (got " + std::to_string(rows) + "x" +
                          std::to_string(cols) + ")");
  }
  edges_.reserve(rows * (cols - 1) + (rows - 1) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) {
      edges_.push_back({node(r, c), node(r, c + 1)});
    }
  }
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      edges_.push_back({node(r, c), node(r + 1, c)});
    }
  }
  incident_.resize(num_nodes());
  for (int e = 0; e < num_edges(); ++e) {
    incident_[edges_[e].a].push_back(e);
    incident_[edges_[e].b].push_back(e);
  }
}

std::optional<int> Lattice::edge_index(NodeId a, NodeId b) const {
  if (a < 0 || b < 0 || a >= num_nodes() || b >= num_nodes()) {
    return std::nullopt;
  }
  for (int e : incident_[a]) {
    const Edge& edge = edges_[e];
    if ((edge.a == a && edge.b == b) || (edge.a == b && edge.b == a)) {
      return e;
    }
  }
  return std::nullopt;
}

std::shared_ptr<const Lattice> build_lattice(int rows, int cols) {
  return std::make_shared<const Lattice>(rows, cols);
}

TopologyMask::TopologyMask(std::shared_ptr<const Lattice> lattice,
                           std::vector<std::uint8_t> active_nodes,
                           std::vector<std::uint8_t> active_edges)
    : lattice_(std::move(lattice)),
      active_nodes_(std::move(active_nodes)),
      active_edges_(std::move(active_edges)) {
  if (!lattice_) throw InvalidArgument("topology mask without a lattice");
  const int n = lattice_->num_nodes();
  const int m = lattice_->num_edges();
  if (static_cast<int>(active_nodes_.size()) != n ||
      static_cast<int>(active_edges_.size()) != m) {
    throw InvalidArgument("topology mask size does not match lattice");
  }
  for (auto& f : active_nodes_) f = f ? 1 : 0;
  for (auto& f : active_edges_) f = f ? 1 : 0;
  for (NodeId v = 0; v < n; ++v) {
    if (active_nodes_[v]) node_list_.push_back(v);
  }
  for (int e = 0; e < m; ++e) {
    if (!active_edges_[e]) continue;
    const Edge& edge = lattice_->edge(e);
    if (!active_nodes_[edge.a] || !active_nodes_[edge.b]) {
      throw InvalidTopology("active edge " + std::to_string(edge.a) + "-" +
                            std::to_string(edge.b) +
                            " has an inactive endpoint");
    }
    edge_list_.push_back(e);
  }
  if (node_list_.empty()) throw InvalidTopology("topology has no active node");

  std::vector<std::uint8_t> seen(n, 0);
  std::queue<NodeId> frontier;
  frontier.push(node_list_.front());
  seen[node_list_.front()] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop();
    for (int e : lattice_->incident_edges(v)) {
      if (!active_edges_[e]) continue;
      const Edge& edge = lattice_->edge(e);
      const NodeId w = edge.a == v ? edge.b : edge.a;
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        frontier.push(w);
      }
    }
  }
  if (reached != num_active_nodes()) {
    throw InvalidTopology("topology is not connected (" +
                          std::to_string(reached) + " of " +
                          std::to_string(num_active_nodes()) +
                          " nodes reachable)");
  }
}

TopologyMask TopologyMask::full(std::shared_ptr<const Lattice> lattice) {
  const int n = lattice->num_nodes();
  const int m = lattice->num_edges();
  return TopologyMask(std::move(lattice), std::vector<std::uint8_t>(n, 1),
                      std::vector<std::uint8_t>(m, 1));
}

TopologyMask TopologyMask::induced(std::shared_ptr<const Lattice> lattice,
                                   std::span<const NodeId> nodes) {
  std::vector<std::uint8_t> on(lattice->num_nodes(), 0);
  for (NodeId v : nodes) {
    if (v < 0 || v >= lattice->num_nodes()) {
      throw InvalidArgument("node id " + std::to_string(v) +
                            " outside lattice");
    }
    on[v] = 1;
  }
  std::vector<std::uint8_t> edges(lattice->num_edges(), 0);
  for (int e = 0; e < lattice->num_edges(); ++e) {
    const Edge& edge = lattice->edge(e);
    edges[e] = on[edge.a] && on[edge.b];
  }
  return TopologyMask(std::move(lattice), std::move(on), std::move(edges));
}

TopologyMask sample_connected_mask(std::shared_ptr<const Lattice> lattice,
                                   int min_nodes, int max_nodes, Rng& rng) {
  const int n = lattice->num_nodes();
  if (min_nodes < 1 || min_nodes > max_nodes || max_nodes > n) {
    throw InvalidArgument("size range [" + std::to_string(min_nodes) + ", " +
                          std::to_string(max_nodes) + "] invalid for " +
                          std::to_string(n) + " nodes");
  }
  const int target = min_nodes + uniform_index(rng, max_nodes - min_nodes + 1);
  std::vector<std::uint8_t> on(n, 0);
  std::vector<NodeId> chosen;
  chosen.reserve(target);
  const NodeId start = uniform_index(rng, n);
  on[start] = 1;
  chosen.push_back(start);

  std::vector<int> frontier;
  while (static_cast<int>(chosen.size()) < target) {
    frontier.clear();
    for (int e = 0; e < lattice->num_edges(); ++e) {
      const Edge& edge = lattice->edge(e);
      if (on[edge.a] != on[edge.b]) frontier.push_back(e);
    }
    const Edge& pick = lattice->edge(frontier[uniform_index(
        rng, static_cast<int>(frontier.size()))]);
    const NodeId added = on[pick.a] ? pick.b : pick.a;
    on[added] = 1;
    chosen.push_back(added);
  }
  return TopologyMask::induced(std::move(lattice), chosen);
}

int TopologyPreset::min_rows() const {
  int r = 0;
  for (const Coord& c : nodes) r = std::max(r, c.row + 1);
  return r;
}

int TopologyPreset::min_cols() const {
  int k = 0;
  for (const Coord& c : nodes) k = std::max(k, c.col + 1);
  return k;
}

TopologyMask resolve_preset(const TopologyPreset& preset,
                            std::shared_ptr<const Lattice> lattice) {
  if (preset.nodes.empty()) {
    throw InvalidTopology("preset '" + preset.name + "' has no nodes");
  }
  std::vector<NodeId> ids;
  ids.reserve(preset.nodes.size());
  for (const Coord& c : preset.nodes) {
    if (!lattice->contains(c)) {
      throw InvalidArgument("preset '" + preset.name + "' coordinate (" +
                            std::to_string(c.row) + "," +
                            std::to_string(c.col) + ") outside " +
                            std::to_string(lattice->rows()) + "x" +
                            std::to_string(lattice->cols()) + " lattice");
    }
    ids.push_back(lattice->node(c));
  }
  if (preset.induced()) return TopologyMask::induced(std::move(lattice), ids);

  std::vector<std::uint8_t> on(lattice->num_nodes(), 0);
  for (NodeId v : ids) on[v] = 1;
  std::vector<std::uint8_t> edges(lattice->num_edges(), 0);
  for (const auto& [p, q] : preset.edges) {
    if (!lattice->contains(p) || !lattice->contains(q)) {
      throw InvalidArgument("preset '" + preset.name +
                            "' edge endpoint outside lattice");
    }
    const auto e = lattice->edge_index(lattice->node(p), lattice->node(q));
    if (!e) {
      throw InvalidArgument("preset '" + preset.name + "' edge (" +
                            std::to_string(p.row) + "," +
                            std::to_string(p.col) + ")-(" +
                            std::to_string(q.row) + "," +
                            std::to_string(q.col) + ") is not a lattice edge");
    }
    edges[*e] = 1;
  }
  return TopologyMask(std::move(lattice), std::move(on), std::move(edges));
}

namespace {

std::vector<Coord> block_perimeter(int size) {
  std::vector<Coord> out;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      if (r == 0 || c == 0 || r == size - 1 || c == size - 1) {
        out.push_back({r, c});
      }
    }
  }
  return out;
}

std::vector<TopologyPreset> make_builtin_presets() {
  std::vector<TopologyPreset> p;
  p.push_back({"7qL", {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {4, 1}, {4, 2}}, {}});
  p.push_back({"7qF", {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {2, 0}, {2, 1}, {3, 0}}, {}});
  p.push_back({"7qH", {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {2, 0}, {2, 1}, {2, 2}}, {}});
  p.push_back({"7qT", {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {2, 1}, {3, 1}, {4, 1}}, {}});
  p.push_back({"8qF",
               {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {2, 0}, {2, 1}, {3, 0}, {4, 0}},
               {}});
  p.push_back({"8qJ",
               {{0, 2}, {1, 2}, {2, 2}, {3, 2}, {4, 2}, {4, 1}, {4, 0}, {3, 0}},
               {}});
  p.push_back({"8qT2",
               {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}, {2, 2}, {3, 2}},
               {}});
  p.push_back({"9qT2",
               {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}, {2, 2}, {3, 2},
                {4, 2}},
               {}});
  p.push_back({"9qH3",
               {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {1, 1}, {0, 2}, {1, 2}, {2, 2},
                {3, 2}},
               {}});
  p.push_back({"12qO", block_perimeter(4), {}});
  p.push_back({"8qO", block_perimeter(3), {}});
  p.push_back({"4qO", block_perimeter(2), {}});
  return p;
}

}  // namespace

const std::vector<TopologyPreset>& builtin_presets() {
  static const std::vector<TopologyPreset> presets = make_builtin_presets();
  return presets;
}

const TopologyPreset& builtin_preset(const std::string& name) {
  for (const auto& p : builtin_presets()) {
    if (p.name == name) return p;
  }
  throw InvalidArgument("unknown topology preset '" + name + "'");
}

DistanceMatrix::DistanceMatrix(const TopologyMask& mask)
    : n_(mask.lattice().num_nodes()),
      d_(static_cast<std::size_t>(n_) * n_, kUnreachable) {
  const Lattice& lat = mask.lattice();
  std::vector<NodeId> queue;
  queue.reserve(n_);
  for (NodeId src : mask.active_nodes()) {
    int* row = &d_[static_cast<std::size_t>(src) * n_];
    row[src] = 0;
    queue.assign(1, src);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const NodeId v = queue[head];
      for (int e : lat.incident_edges(v)) {
        if (!mask.edge_active(e)) continue;
        const Edge& edge = lat.edge(e);
        const NodeId w = edge.a == v ? edge.b : edge.a;
        if (row[w] == kUnreachable) {
          row[w] = row[v] + 1;
          queue.push_back(w);
        }
      }
    }
  }
}

}  // namespace permsynth

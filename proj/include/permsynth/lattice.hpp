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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "permsynth/random.hpp"

namespace permsynth {

using NodeId = int;

// Undirected lattice edge, always stored with a < b.
struct Edge {
  NodeId a = 0;
  NodeId b = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Coord {
  int row = 0;
  int col = 0;

  friend bool operator==(const Coord&, const Coord&) = default;
  friend auto operator<=>(const Coord&, const Coord&) = default;
};

// rows x cols square lattice. Nodes are numbered row-major. Edges are listed
// horizontal first (row-major), then vertical (row-major); this order is the
// action order of every policy network, so it must never change.
class Lattice {
 public:
  Lattice(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int num_nodes() const { return rows_ * cols_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(int index) const { return edges_.at(index); }

  NodeId node(int row, int col) const { return row * cols_ + col; }
  NodeId node(Coord c) const { return node(c.row, c.col); }
  Coord coord(NodeId n) const { return {n / cols_, n % cols_}; }
  bool contains(Coord c) const {
    return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_;
  }

  // Index of the edge joining a and b, if they are lattice neighbours.
  std::optional<int> edge_index(NodeId a, NodeId b) const;
  // Edge indices touching node n.
  std::span<const int> incident_edges(NodeId n) const { return incident_[n]; }

  friend bool operator==(const Lattice& x, const Lattice& y) {
    return x.rows_ == y.rows_ && x.cols_ == y.cols_;
  }

 private:
  int rows_;
  int cols_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> incident_;
};

std::shared_ptr<const Lattice> build_lattice(int rows, int cols);

// Active node/edge subset of a lattice. Construction validates that active
// edges only join active nodes and that the active graph is connected.
class TopologyMask {
 public:
  TopologyMask(std::shared_ptr<const Lattice> lattice,
               std::vector<std::uint8_t> active_nodes,
               std::vector<std::uint8_t> active_edges);

  static TopologyMask full(std::shared_ptr<const Lattice> lattice);
  // All lattice edges among `nodes` become active.
  static TopologyMask induced(std::shared_ptr<const Lattice> lattice,
                              std::span<const NodeId> nodes);

  const Lattice& lattice() const { return *lattice_; }
  const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }

  bool node_active(NodeId n) const { return active_nodes_[n] != 0; }
  bool edge_active(int e) const { return active_edges_[e] != 0; }
  std::span<const std::uint8_t> node_flags() const { return active_nodes_; }
  std::span<const std::uint8_t> edge_flags() const { return active_edges_; }

  const std::vector<NodeId>& active_nodes() const { return node_list_; }
  const std::vector<int>& active_edges() const { return edge_list_; }
  int num_active_nodes() const { return static_cast<int>(node_list_.size()); }
  int num_active_edges() const { return static_cast<int>(edge_list_.size()); }

  // Same active sets; lattices compared by dimensions.
  friend bool operator==(const TopologyMask& x, const TopologyMask& y) {
    return *x.lattice_ == *y.lattice_ && x.active_nodes_ == y.active_nodes_ &&
           x.active_edges_ == y.active_edges_;
  }

 private:
  std::shared_ptr<const Lattice> lattice_;
  std::vector<std::uint8_t> active_nodes_;
  std::vector<std::uint8_t> active_edges_;
  std::vector<NodeId> node_list_;
  std::vector<int> edge_list_;
};

// Grows a connected induced subgraph: node count uniform in
// [min_nodes, max_nodes], seeded at a uniform node, then repeatedly absorbing
// the outer endpoint of a uniformly chosen frontier edge.
TopologyMask sample_connected_mask(std::shared_ptr<const Lattice> lattice,
                                   int min_nodes, int max_nodes, Rng& rng);

// Named shape given in lattice coordinates. An empty edge list means the
// induced edge rule.
struct TopologyPreset {
  std::string name;
  std::vector<Coord> nodes;
  std::vector<std::pair<Coord, Coord>> edges;

  bool induced() const { return edges.empty(); }
  // Smallest lattice the preset fits in without translation.
  int min_rows() const;
  int min_cols() const;
};

TopologyMask resolve_preset(const TopologyPreset& preset,
                            std::shared_ptr<const Lattice> lattice);

// Shapes used by the benchmark. Coordinates are reconstructions; the files
// under data/topologies carry the same definitions and can be edited.
const std::vector<TopologyPreset>& builtin_presets();
// Looks up a builtin preset; throws InvalidArgument for unknown names.
const TopologyPreset& builtin_preset(const std::string& name);

// Text format:
//   topology v1 <rows> <cols>
//   n <row> <col>                      (one per active node)
//   e <row1> <col1> <row2> <col2>      (optional explicit edges)
// '#' starts a comment.
struct TopologyFile {
  int rows = 0;
  int cols = 0;
  TopologyPreset preset;
};

TopologyFile read_topology(std::istream& in, const std::string& name = {});
TopologyFile read_topology_file(const std::string& path);
void write_topology(std::ostream& out, const TopologyFile& topo);
// Serializes an existing mask (explicit edges only when not induced).
TopologyFile topology_from_mask(const TopologyMask& mask,
                                const std::string& name = {});

// Hop distances along active edges, indexed by lattice node id. Entries
// involving inactive nodes are kUnreachable.
class DistanceMatrix {
 public:
  static constexpr int kUnreachable = std::numeric_limits<int>::max();

  explicit DistanceMatrix(const TopologyMask& mask);

  int operator()(NodeId a, NodeId b) const { return d_[a * n_ + b]; }
  int size() const { return n_; }

 private:
  int n_;
  std::vector<int> d_;
};

inline DistanceMatrix all_pairs_distances(const TopologyMask& mask) {
  return DistanceMatrix(mask);
}

}  // namespace permsynth

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

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "permsynth/errors.hpp"
#include "permsynth/lattice.hpp"

namespace permsynth {
namespace {

TEST(Lattice, EdgeCountAndOrder) {
  for (int r = 1; r <= 5; ++r) {
    for (int c = 1; c <= 5; ++c) {
      if (r * c < 2) continue;
      const Lattice lat(r, c);
      EXPECT_EQ(lat.num_edges(), r * (c - 1) + c * (r - 1));
      for (const Edge& e : lat.edges()) {
        EXPECT_LT(e.a, e.b);
        const Coord a = lat.coord(e.a), b = lat.coord(e.b);
        EXPECT_EQ(std::abs(a.row - b.row) + std::abs(a.col - b.col), 1);
      }
    }
  }
  // Horizontal edges come first.
  const Lattice lat(2, 3);
  EXPECT_EQ(lat.edge(0), (Edge{0, 1}));
  EXPECT_EQ(lat.edge(3), (Edge{4, 5}));
  EXPECT_EQ(lat.edge(4), (Edge{0, 3}));
  EXPECT_EQ(lat.edge_index(1, 4), 5);
  EXPECT_FALSE(lat.edge_index(0, 4).has_value());
}

TEST(Lattice, RejectsDegenerateSizes) {
  EXPECT_THROW(Lattice(0, 3), InvalidArgument);
  EXPECT_THROW(Lattice(1, 1), InvalidArgument);
  EXPECT_THROW(Lattice(-2, 2), InvalidArgument);
}

TEST(TopologyMask, RejectsDisconnected) {
  auto lat = build_lattice(1, 3);
  EXPECT_THROW(TopologyMask(lat, {1, 0, 1}, {0, 0}), InvalidTopology);
  // Edge touching an inactive node.
  EXPECT_THROW(TopologyMask(lat, {1, 1, 0}, {1, 1}), InvalidTopology);
  EXPECT_THROW(TopologyMask(lat, {0, 0, 0}, {0, 0}), InvalidTopology);
  EXPECT_NO_THROW(TopologyMask(lat, {0, 1, 0}, {0, 0}));
}

TEST(TopologyMask, InducedAndFull) {
  auto lat = build_lattice(3, 3);
  const TopologyMask full = TopologyMask::full(lat);
  EXPECT_EQ(full.num_active_nodes(), 9);
  EXPECT_EQ(full.num_active_edges(), 12);
  const std::vector<NodeId> ring = {0, 1, 2, 5, 8, 7, 6, 3};
  const TopologyMask m = TopologyMask::induced(lat, ring);
  EXPECT_EQ(m.num_active_nodes(), 8);
  EXPECT_EQ(m.num_active_edges(), 8);
  EXPECT_FALSE(m.node_active(4));
}

TEST(TopologyMask, SampledMasksAreConnectedAndInduced) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int r = 1 + uniform_index(rng, 5), c = 2 + uniform_index(rng, 4);
    auto lat = build_lattice(r, c);
    const int lo = 2 + uniform_index(rng, r * c - 1);
    const int hi = lo + uniform_index(rng, r * c - lo + 1);
    const TopologyMask m = sample_connected_mask(lat, lo, hi, rng);
    EXPECT_GE(m.num_active_nodes(), lo);
    EXPECT_LE(m.num_active_nodes(), hi);
    EXPECT_TRUE(testing::connected_by_union_find(m));
    for (int e = 0; e < lat->num_edges(); ++e) {
      const bool both = m.node_active(lat->edge(e).a) && m.node_active(lat->edge(e).b);
      EXPECT_EQ(m.edge_active(e), both);
    }
  }
}

TEST(TopologyMask, SampledSizesCoverRange) {
  Rng rng(3);
  auto lat = build_lattice(3, 3);
  std::vector<int> seen(10, 0);
  for (int i = 0; i < 2000; ++i) ++seen[sample_connected_mask(lat, 2, 9, rng).num_active_nodes()];
  for (int k = 2; k <= 9; ++k) EXPECT_GT(seen[k], 150) << k;
}

TEST(Presets, ResolveConnectedWithNamedSize) {
  auto lat = build_lattice(5, 5);
  for (const TopologyPreset& p : builtin_presets()) {
    const TopologyMask m = resolve_preset(p, lat);
    EXPECT_TRUE(testing::connected_by_union_find(m)) << p.name;
    EXPECT_EQ(m.num_active_nodes(), std::stoi(p.name)) << p.name;
  }
  EXPECT_EQ(resolve_preset(builtin_preset("8qO"), lat).num_active_edges(), 8);
  EXPECT_EQ(resolve_preset(builtin_preset("12qO"), lat).num_active_edges(), 12);
  EXPECT_THROW(builtin_preset("nope"), InvalidArgument);
}

TEST(Presets, DataFilesMatchBuiltins) {
  auto lat = build_lattice(5, 5);
  for (const TopologyPreset& p : builtin_presets()) {
    const auto path = std::filesystem::path(PERMSYNTH_DATA_DIR) / "topologies" / (p.name + ".topo");
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    const TopologyFile f = read_topology_file(path.string());
    EXPECT_EQ(resolve_preset(f.preset, lat), resolve_preset(p, lat)) << p.name;
  }
}

TEST(TopologyFile, RoundTrip) {
  auto lat = build_lattice(4, 4);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const TopologyMask m = sample_connected_mask(lat, 2, 16, rng);
    std::stringstream s;
    write_topology(s, topology_from_mask(m, "t"));
    const TopologyFile back = read_topology(s);
    EXPECT_EQ(back.rows, 4);
    EXPECT_EQ(resolve_preset(back.preset, lat), m);
  }
}

TEST(TopologyFile, ExplicitEdgesAndErrors) {
  std::istringstream in(
      "topology v1 2 2\n# square with one edge missing\n"
      "n 0 0\nn 0 1\nn 1 1\nn 1 0\ne 0 0 0 1\ne 0 1 1 1\ne 1 1 1 0\n");
  const TopologyFile f = read_topology(in, "u");
  const TopologyMask m = resolve_preset(f.preset, build_lattice(2, 2));
  EXPECT_EQ(m.num_active_edges(), 3);

  std::istringstream bad_header("topology v9 2 2\nn 0 0\n");
  EXPECT_THROW(read_topology(bad_header), ParseError);
  std::istringstream outside("topology v1 2 2\nn 0 0\nn 0 5\n");
  EXPECT_ANY_THROW(resolve_preset(read_topology(outside).preset, build_lattice(2, 2)));
}

TEST(DistanceMatrix, MatchesFloydWarshall) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    auto lat = build_lattice(2 + uniform_index(rng, 4), 2 + uniform_index(rng, 4));
    const TopologyMask m = sample_connected_mask(lat, 2, lat->num_nodes(), rng);
    const DistanceMatrix d(m);
    const auto ref = testing::floyd_distances(m);
    for (int a = 0; a < lat->num_nodes(); ++a) {
      for (int b = 0; b < lat->num_nodes(); ++b) {
        const int expect = ref[a][b] < 0 ? DistanceMatrix::kUnreachable : ref[a][b];
        ASSERT_EQ(d(a, b), expect);
      }
    }
  }
}

}  // namespace
}  // namespace permsynth

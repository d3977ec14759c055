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

#include <sstream>

#include "oracles.hpp"
#include "permsynth/errors.hpp"
#include "permsynth/synth.hpp"

namespace permsynth {
namespace {

// Longest chain in the gate dependency order: gate j depends on an earlier
// gate i when they share a node.
int depth_by_longest_chain(const std::vector<Edge>& gates) {
  std::vector<int> level(gates.size(), 1);
  int best = 0;
  for (std::size_t j = 0; j < gates.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const bool share = gates[i].a == gates[j].a || gates[i].a == gates[j].b ||
                         gates[i].b == gates[j].a || gates[i].b == gates[j].b;
      if (share) level[j] = std::max(level[j], level[i] + 1);
    }
    best = std::max(best, level[j]);
  }
  return best;
}

TEST(CircuitDepth, MatchesLongestChain) {
  Rng rng(6);
  const Lattice lat(4, 4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Edge> gates(uniform_index(rng, 30));
    for (Edge& g : gates) g = lat.edge(uniform_index(rng, lat.num_edges()));
    EXPECT_EQ(circuit_depth(gates), depth_by_longest_chain(gates));
  }
  EXPECT_EQ(circuit_depth(std::vector<Edge>{}), 0);
  EXPECT_EQ(circuit_depth(std::vector<Edge>{{0, 1}, {2, 3}, {1, 2}}), 2);
}

TEST(Circuit, ReductionReversedImplementsSource) {
  auto lat = build_lattice(3, 3);
  const TopologyMask mask = TopologyMask::full(lat);
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    // Walk from a random arrangement to identity is hard to script, so
    // scramble the identity and undo the scramble instead.
    std::vector<int> walk(uniform_index(rng, 12));
    Permutation p = Permutation::identity(9);
    for (int& e : walk) {
      e = uniform_index(rng, lat->num_edges());
      p.swap_tokens(lat->edge(e).a, lat->edge(e).b);
    }
    std::vector<int> reduction(walk.rbegin(), walk.rend());
    const SwapCircuit c = circuit_from_reduction(mask, p, reduction);
    ASSERT_EQ(c.gate_count(), static_cast<int>(walk.size()));
    // Running the circuit forward on the identity reproduces the source.
    Permutation q = Permutation::identity(9);
    for (const Edge& g : c.gates) q.swap_tokens(g.a, g.b);
    EXPECT_EQ(q, p);
    EXPECT_TRUE(verify(c));
    EXPECT_TRUE(testing::undoes_to_identity(p, c.gates, mask));
  }
}

TEST(Verify, RejectsInactiveEdgesAndWrongResult) {
  auto lat = build_lattice(1, 3);
  const TopologyMask full = TopologyMask::full(lat);
  const TopologyMask part(lat, {1, 1, 0}, {1, 0});
  SwapCircuit ok{part, Permutation({1, 0, 2}), {{0, 1}}};
  EXPECT_TRUE(verify(ok));
  SwapCircuit inactive{part, Permutation({0, 2, 1}), {{1, 2}}};
  EXPECT_FALSE(verify(inactive));
  inactive.mask = full;
  EXPECT_TRUE(verify(inactive));
  SwapCircuit incomplete{full, Permutation({1, 0, 2}), {}};
  EXPECT_FALSE(verify(incomplete));
  SwapCircuit wrong{full, Permutation({1, 0, 2}), {{1, 2}}};
  EXPECT_FALSE(verify(wrong));
}

TEST(Synthesize, IdentityIsEmpty) {
  const PolicyNet net = PolicyNet::initialized({2, 2, {8}}, 1);
  Rng rng(1);
  const auto mask = TopologyMask::full(build_lattice(2, 2));
  const SynthesisResult r = synthesize(net, Permutation::identity(4), mask, {}, rng);
  ASSERT_TRUE(r.success());
  EXPECT_EQ(r.circuit->gate_count(), 0);
  EXPECT_EQ(r.attempts_used, 0);
}

TEST(Synthesize, ReturnsVerifiedCircuitsOrNothing) {
  // An untrained network is a random walker; every returned circuit must
  // still be valid.
  const PolicyNet net = PolicyNet::initialized({3, 3, {16}}, 2);
  auto lat = build_lattice(3, 3);
  Rng rng(4);
  int found = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const TopologyMask mask = sample_connected_mask(lat, 2, 5, rng);
    const Permutation p = sample_uniform_permutation(mask, rng);
    const SynthesisResult r = synthesize(net, p, mask, {InferenceMode::Sampling, 4, 0}, rng);
    if (!r.success()) continue;
    ++found;
    EXPECT_TRUE(verify(*r.circuit));
    EXPECT_TRUE(testing::undoes_to_identity(p, r.circuit->gates, mask));
    EXPECT_LE(r.circuit->gate_count(), default_step_cap(mask));
  }
  EXPECT_GT(found, 50);
}

TEST(Synthesize, GreedyUsesOneAttempt) {
  const PolicyNet net = PolicyNet::initialized({2, 2, {8}}, 1);
  const auto mask = TopologyMask::full(build_lattice(2, 2));
  Rng rng(1);
  const SynthesisResult r =
      synthesize(net, Permutation({1, 0, 2, 3}), mask, {InferenceMode::Greedy, 7, 0}, rng);
  EXPECT_EQ(r.attempts_used, 1);
}

TEST(Synthesize, SameSeedSameCircuit) {
  const PolicyNet net = PolicyNet::initialized({3, 3, {16}}, 3);
  const auto mask = TopologyMask::full(build_lattice(3, 3));
  Rng a(5), b(5), src(9);
  const Permutation p = sample_uniform_permutation(mask, src);
  const auto ra = synthesize(net, p, mask, {InferenceMode::Sampling, 5, 400}, a);
  const auto rb = synthesize(net, p, mask, {InferenceMode::Sampling, 5, 400}, b);
  ASSERT_EQ(ra.success(), rb.success());
  if (ra.success()) {
    EXPECT_EQ(ra.circuit->gates, rb.circuit->gates);
  }
}

TEST(Synthesize, RejectsMismatchedInputs) {
  const PolicyNet net = PolicyNet::initialized({2, 2, {8}}, 1);
  Rng rng(1);
  const auto small = TopologyMask::full(build_lattice(2, 2));
  const auto big = TopologyMask::full(build_lattice(3, 3));
  EXPECT_THROW(synthesize(net, Permutation::identity(9), big, {}, rng), InvalidArgument);
  auto lat = build_lattice(2, 2);
  const TopologyMask partial(lat, {1, 1, 0, 0}, {1, 0, 0, 0});
  EXPECT_THROW(synthesize(net, Permutation({0, 1, 3, 2}), partial, {}, rng), InvalidArgument);
  EXPECT_THROW(synthesize(net, Permutation({1, 0, 2, 3}), small, {InferenceMode::Sampling, 0, 0}, rng),
               InvalidArgument);
}

TEST(CircuitText, RoundTrip) {
  auto lat = build_lattice(2, 3);
  const SwapCircuit c{TopologyMask::full(lat), Permutation({1, 0, 2, 4, 3, 5}), {{0, 1}, {3, 4}}};
  std::stringstream s;
  write_circuit(s, c);
  const CircuitText t = read_circuit(s);
  EXPECT_EQ(t.rows, 2);
  EXPECT_EQ(t.cols, 3);
  EXPECT_EQ(t.depth, 1);
  EXPECT_EQ(t.gates, c.gates);
  std::istringstream bad("circuit v1 2 3 2 1\nswap 0 1\n");
  EXPECT_THROW(read_circuit(bad), ParseError);
}

}  // namespace
}  // namespace permsynth

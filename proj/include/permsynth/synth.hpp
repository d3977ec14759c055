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

#include <chrono>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "permsynth/lattice.hpp"
#include "permsynth/permenv.hpp"
#include "permsynth/policy.hpp"

namespace permsynth {

// A SWAP circuit on a topology. Gates are in execution order: running them on
// the identity arrangement produces `source`, i.e. the circuit implements the
// source permutation. Undoing the circuit (gates in reverse) sorts `source`.
struct SwapCircuit {
  TopologyMask mask;
  Permutation source;
  std::vector<Edge> gates;

  int gate_count() const { return static_cast<int>(gates.size()); }
  int depth() const;
};

// ASAP layering: a gate lands one layer after the latest gate sharing a node.
int circuit_depth(std::span<const Edge> gates);

// Builds the circuit for `source` from the sequence of lattice edges that
// reduced it to the identity. Swaps are self-inverse, so inverting the
// sequence only reverses its order.
SwapCircuit circuit_from_reduction(const TopologyMask& mask,
                                   const Permutation& source,
                                   std::span<const int> reduction_edges);

// All gates active, and undoing the circuit turns `source` into identity.
bool verify(const SwapCircuit& circuit);

struct SynthesisOptions {
  InferenceMode mode = InferenceMode::Sampling;
  int attempts = 10;
  // 0 selects 3 * (active node count)^2.
  int step_cap = 0;
};

int default_step_cap(const TopologyMask& mask);

struct SynthesisResult {
  std::optional<SwapCircuit> circuit;  // empty when every attempt hit the cap
  int attempts_used = 0;
  std::chrono::nanoseconds wall_time{0};

  bool success() const { return circuit.has_value(); }
};

// Rolls the policy from `perm` until identity. Sampling attempts run as one
// batch with per-attempt random streams; the result is the attempt with the
// fewest gates, then smallest depth, then lowest index. Greedy mode always
// runs a single attempt.
SynthesisResult synthesize(const PolicyNet& net, const Permutation& perm,
                           const TopologyMask& mask,
                           const SynthesisOptions& options, Rng& rng);

// Text format:
//   circuit v1 <rows> <cols> <gates> <depth>
//   swap <node_a> <node_b>        (one per gate, execution order)
struct CircuitText {
  int rows = 0;
  int cols = 0;
  int depth = 0;
  std::vector<Edge> gates;
};

void write_circuit(std::ostream& out, const SwapCircuit& circuit);
CircuitText read_circuit(std::istream& in);

}  // namespace permsynth

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
#include <vector>

#include "permsynth/lattice.hpp"
#include "permsynth/permenv.hpp"
#include "permsynth/synth.hpp"

namespace permsynth {

struct TokenSwapOptions {
  int trials = 1000;
};

// Randomized approximate token swapping. Each trial repeatedly applies a
// uniformly chosen happy swap (one that brings both tokens closer to their
// destinations), otherwise moves a uniformly chosen unfinished token one
// step along a random shortest path. Trials run sequentially on `rng`; the
// best trial by (gates, depth) is returned.
SwapCircuit token_swap(const Permutation& perm, const TopologyMask& mask,
                       const TokenSwapOptions& options, Rng& rng);

// Exact search is limited to this many active nodes.
inline constexpr int kMaxOracleNodes = 10;

struct OptimalResult {
  int swaps = 0;
  SwapCircuit witness;
};

// Minimum number of active-edge swaps that sort `perm`, by bidirectional
// breadth-first search over permutations of the active nodes.
OptimalResult bfs_optimal(const Permutation& perm, const TopologyMask& mask);

// Rank of a permutation of 0..k-1 in the factorial number system.
std::uint32_t permutation_rank(const std::vector<int>& p);
std::vector<int> permutation_unrank(std::uint32_t rank, int k);

// Swap distance of every arrangement on a fixed mask, from one full
// breadth-first search rooted at the identity. Suited to many queries on the
// same topology.
class OptimalSwapTable {
 public:
  explicit OptimalSwapTable(const TopologyMask& mask);

  int distance(const Permutation& perm) const;
  int max_distance() const { return max_distance_; }

 private:
  std::vector<NodeId> nodes_;
  std::vector<int> local_of_;
  std::vector<std::uint8_t> dist_;
  int max_distance_ = 0;
};

}  // namespace permsynth

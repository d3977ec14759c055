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

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "permsynth/lattice.hpp"
#include "permsynth/random.hpp"

namespace permsynth {

// Token arrangement over lattice nodes: destination(v) is the node the token
// currently sitting on v must reach. Identity means every token is home.
// A swap on edge (a, b) exchanges the tokens on a and b.
class Permutation {
 public:
  Permutation() = default;
  // Validates that `destinations` is a bijection on 0..n-1.
  explicit Permutation(std::vector<NodeId> destinations);

  static Permutation identity(int n);

  int size() const { return static_cast<int>(dest_.size()); }
  NodeId destination(NodeId v) const { return dest_[v]; }
  NodeId operator[](NodeId v) const { return dest_[v]; }
  std::span<const NodeId> destinations() const { return dest_; }

  bool is_identity() const;
  void swap_tokens(NodeId a, NodeId b) { std::swap(dest_[a], dest_[b]); }
  // True when every node outside the mask holds its own token.
  bool fixes_inactive(const TopologyMask& mask) const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<NodeId> dest_;
};

Permutation apply_swap(Permutation perm, const Edge& edge);

// `perm v1` then the destination list. '#' comments allowed.
Permutation read_permutation(std::istream& in);
void write_permutation(std::ostream& out, const Permutation& perm);
// Whitespace or comma separated destination list.
Permutation parse_permutation_list(const std::string& text);

// Identity scrambled by `difficulty` swaps on uniformly chosen active edges,
// never repeating the edge just used (unless it is the only one).
Permutation sample_instance(const TopologyMask& mask, int difficulty, Rng& rng);

// Uniformly random permutation of the active nodes; inactive nodes fixed.
Permutation sample_uniform_permutation(const TopologyMask& mask, Rng& rng);

struct RewardConfig {
  double success_reward = 10.0;
  double step_penalty = -0.1;

  void validate() const;
};

// Default episode length for a given curriculum difficulty.
inline int default_max_steps(int difficulty) { return 2 * difficulty + 8; }

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
};

class EpisodeState {
 public:
  EpisodeState(Permutation perm, TopologyMask mask, int max_steps);

  const Permutation& perm() const { return perm_; }
  const TopologyMask& mask() const { return mask_; }
  int steps_taken() const { return steps_taken_; }
  int max_steps() const { return max_steps_; }
  bool done() const { return done_; }
  bool solved() const { return perm_.is_identity(); }
  // Edges applied so far, in order.
  const std::vector<int>& actions() const { return actions_; }

  // Applies the swap on lattice edge `edge`. Throws ContractViolation if the
  // edge is inactive or the episode is already over.
  StepOutcome step(int edge, const RewardConfig& cfg);

 private:
  Permutation perm_;
  TopologyMask mask_;
  int steps_taken_ = 0;
  int max_steps_;
  bool done_;
  std::vector<int> actions_;
};

struct CurriculumState {
  int difficulty = 1;
  double success_threshold = 0.85;
  double window_success_rate = 0.0;
};

// Raises difficulty by one iff the batch success rate is strictly above the
// threshold.
CurriculumState curriculum_update(CurriculumState cur, double batch_success_rate);

}  // namespace permsynth

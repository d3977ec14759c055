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

#include "permsynth/permenv.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "permsynth/errors.hpp"

namespace permsynth {

Permutation::Permutation(std::vector<NodeId> destinations)
    : dest_(std::move(destinations)) {
  std::vector<std::uint8_t> hit(dest_.size(), 0);
  for (NodeId d : dest_) {
    if (d < 0 || d >= size() || hit[d]) {
      throw InvalidArgument("destination list is not a permutation of 0.." +
                            std::to_string(size() - 1));
    }
    hit[d] = 1;
  }
}

Permutation Permutation::identity(int n) {
  Permutation p;
  p.dest_.resize(n);
  for (int i = 0; i < n; ++i) p.dest_[i] = i;
  return p;
}

bool Permutation::is_identity() const {
  for (int i = 0; i < size(); ++i) {
    if (dest_[i] != i) return false;
  }
  return true;
}

bool Permutation::fixes_inactive(const TopologyMask& mask) const {
  if (size() != mask.lattice().num_nodes()) return false;
  for (NodeId v = 0; v < size(); ++v) {
    if (!mask.node_active(v) && dest_[v] != v) return false;
  }
  return true;
}

Permutation apply_swap(Permutation perm, const Edge& edge) {
  perm.swap_tokens(edge.a, edge.b);
  return perm;
}

Permutation read_permutation(std::istream& in) {
  std::string text;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::istringstream fields(line);
    std::string tok;
    if (!have_header) {
      std::string version;
      if (!(fields >> tok)) continue;
      if (tok != "perm" || !(fields >> version) || version != "v1") {
        throw ParseError("permutation: expected header 'perm v1'");
      }
      have_header = true;
    }
    while (fields >> tok) text += tok + ' ';
  }
  if (!have_header) throw ParseError("permutation: missing header");
  return parse_permutation_list(text);
}

void write_permutation(std::ostream& out, const Permutation& perm) {
  out << "perm v1\n";
  for (int i = 0; i < perm.size(); ++i) {
    out << (i ? " " : "") << perm[i];
  }
  out << '\n';
}

Permutation parse_permutation_list(const std::string& text) {
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::vector<NodeId> dest;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) {
      throw ParseError("permutation: '" + tok + "' is not an integer");
    }
    dest.push_back(value);
  }
  if (dest.empty()) throw ParseError("permutation: empty list");
  try {
    return Permutation(std::move(dest));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("permutation: ") + e.what());
  }
}

Permutation sample_instance(const TopologyMask& mask, int difficulty,
                            Rng& rng) {
  if (difficulty < 0) throw InvalidArgument("difficulty must be >= 0");
  const auto& edges = mask.active_edges();
  if (difficulty > 0 && edges.empty()) {
    throw InvalidArgument("cannot scramble on a topology without edges");
  }
  Permutation perm = Permutation::identity(mask.lattice().num_nodes());
  int last = -1;
  const int m = static_cast<int>(edges.size());
  for (int s = 0; s < difficulty; ++s) {
    int pick;
    if (last < 0 || m == 1) {
      pick = uniform_index(rng, m);
    } else {
      // Uniform over the m - 1 edges other than the previous one.
      pick = uniform_index(rng, m - 1);
      if (pick >= last) ++pick;
    }
    perm.swap_tokens(mask.lattice().edge(edges[pick]).a,
                     mask.lattice().edge(edges[pick]).b);
    last = pick;
  }
  return perm;
}

Permutation sample_uniform_permutation(const TopologyMask& mask, Rng& rng) {
  std::vector<NodeId> dest(mask.lattice().num_nodes());
  for (int i = 0; i < static_cast<int>(dest.size()); ++i) dest[i] = i;
  std::vector<NodeId> targets = mask.active_nodes();
  std::shuffle(targets.begin(), targets.end(), rng);
  const auto& nodes = mask.active_nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) dest[nodes[i]] = targets[i];
  return Permutation(std::move(dest));
}

void RewardConfig::validate() const {
  if (!(success_reward > 0.0)) {
    throw InvalidArgument("success_reward must be positive");
  }
  if (!(step_penalty < 0.0)) {
    throw InvalidArgument("step_penalty must be negative");
  }
}

EpisodeState::EpisodeState(Permutation perm, TopologyMask mask, int max_steps)
    : perm_(std::move(perm)), mask_(std::move(mask)), max_steps_(max_steps) {
  if (perm_.size() != mask_.lattice().num_nodes()) {
    throw InvalidArgument("permutation size does not match lattice");
  }
  if (!perm_.fixes_inactive(mask_)) {
    throw InvalidArgument("permutation moves tokens on inactive nodes");
  }
  if (max_steps_ < 0) throw InvalidArgument("max_steps must be >= 0");
  done_ = perm_.is_identity() || max_steps_ == 0;
}

StepOutcome EpisodeState::step(int edge, const RewardConfig& cfg) {
  if (done_) throw ContractViolation("step on a finished episode");
  if (edge < 0 || edge >= mask_.lattice().num_edges() ||
      !mask_.edge_active(edge)) {
    throw ContractViolation("action on inactive edge " + std::to_string(edge));
  }
  const Edge& e = mask_.lattice().edge(edge);
  perm_.swap_tokens(e.a, e.b);
  actions_.push_back(edge);
  ++steps_taken_;
  StepOutcome out;
  out.reward = cfg.step_penalty;
  if (perm_.is_identity()) {
    out.reward += cfg.success_reward;
    done_ = true;
  } else if (steps_taken_ >= max_steps_) {
    done_ = true;
  }
  out.done = done_;
  return out;
}

CurriculumState curriculum_update(CurriculumState cur,
                                  double batch_success_rate) {
  cur.window_success_rate = batch_success_rate;
  if (batch_success_rate > cur.success_threshold) ++cur.difficulty;
  return cur;
}

}  // namespace permsynth

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

#include "permsynth/synth.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "permsynth/errors.hpp"

namespace permsynth {

int circuit_depth(std::span<const Edge> gates) {
  NodeId top = 0;
  for (const Edge& g : gates) top = std::max({top, g.a, g.b});
  std::vector<int> layer(static_cast<std::size_t>(top) + 1, 0);
  int depth = 0;
  for (const Edge& g : gates) {
    const int l = 1 + std::max(layer[g.a], layer[g.b]);
    layer[g.a] = l;
    layer[g.b] = l;
    depth = std::max(depth, l);
  }
  return depth;
}

int SwapCircuit::depth() const { return circuit_depth(gates); }

SwapCircuit circuit_from_reduction(const TopologyMask& mask,
                                   const Permutation& source,
                                   std::span<const int> reduction_edges) {
  SwapCircuit c{mask, source, {}};
  c.gates.reserve(reduction_edges.size());
  for (auto it = reduction_edges.rbegin(); it != reduction_edges.rend(); ++it) {
    c.gates.push_back(mask.lattice().edge(*it));
  }
  return c;
}

bool verify(const SwapCircuit& circuit) {
  const Lattice& lat = circuit.mask.lattice();
  if (circuit.source.size() != lat.num_nodes()) return false;
  Permutation p = circuit.source;
  for (auto it = circuit.gates.rbegin(); it != circuit.gates.rend(); ++it) {
    const auto e = lat.edge_index(it->a, it->b);
    if (!e || !circuit.mask.edge_active(*e)) return false;
    p.swap_tokens(it->a, it->b);
  }
  return p.is_identity();
}

int default_step_cap(const TopologyMask& mask) {
  const int k = mask.num_active_nodes();
  return 3 * k * k;
}

SynthesisResult synthesize(const PolicyNet& net, const Permutation& perm,
                           const TopologyMask& mask,
                           const SynthesisOptions& options, Rng& rng) {
  const auto start = std::chrono::steady_clock::now();
  check_compatible(net.shape(), mask);
  if (perm.size() != mask.lattice().num_nodes()) {
    throw InvalidArgument("permutation size does not match model lattice");
  }
  if (!perm.fixes_inactive(mask)) {
    throw InvalidArgument("permutation moves tokens on inactive nodes");
  }
  if (options.attempts < 1) throw InvalidArgument("attempts must be >= 1");

  SynthesisResult result;
  if (perm.is_identity()) {
    result.circuit = SwapCircuit{mask, perm, {}};
    result.wall_time = std::chrono::steady_clock::now() - start;
    return result;
  }

  const bool greedy = options.mode == InferenceMode::Greedy;
  const int attempts = greedy ? 1 : options.attempts;
  const int cap = options.step_cap > 0 ? options.step_cap : default_step_cap(mask);
  result.attempts_used = attempts;

  const std::uint64_t base_seed = rng();
  std::vector<Rng> streams;
  streams.reserve(attempts);
  for (int a = 0; a < attempts; ++a) streams.emplace_back(derive_seed(base_seed, a));

  std::vector<Permutation> state(attempts, perm);
  std::vector<std::vector<int>> actions(attempts);
  std::vector<std::uint8_t> running(attempts, 1);
  std::vector<int> solved;
  int best_gates = std::numeric_limits<int>::max();

  const int obs_dim = net.shape().observation_size();
  const int num_actions = net.shape().num_actions();
  PolicyNet::Matrix obs;
  PolicyNet::Workspace ws;
  std::vector<int> live;
  for (int step = 0; step < cap; ++step) {
    live.clear();
    for (int a = 0; a < attempts; ++a) {
      // An attempt that already used best_gates swaps cannot win any more.
      if (running[a] && static_cast<int>(actions[a].size()) < best_gates) {
        live.push_back(a);
      }
    }
    if (live.empty()) break;
    obs.resize(static_cast<Eigen::Index>(live.size()), obs_dim);
    for (std::size_t i = 0; i < live.size(); ++i) {
      encode_observation<float>(state[live[i]], mask,
                                std::span<float>(obs.row(i).data(), obs_dim));
    }
    net.forward(obs, ws);
    for (std::size_t i = 0; i < live.size(); ++i) {
      const int a = live[i];
      const std::span<const float> logits(ws.logits.row(i).data(), num_actions);
      int edge = -1;
      if (greedy) {
        for (int e : mask.active_edges()) {
          if (edge < 0 || logits[e] > logits[edge]) edge = e;
        }
      } else {
        edge = choose_action(masked_distribution(logits, mask),
                             InferenceMode::Sampling, streams[a]);
      }
      if (!mask.edge_active(edge)) {
        throw ContractViolation("policy selected inactive edge");
      }
      const Edge& e = mask.lattice().edge(edge);
      state[a].swap_tokens(e.a, e.b);
      actions[a].push_back(edge);
      if (state[a].is_identity()) {
        running[a] = 0;
        solved.push_back(a);
        best_gates = std::min(best_gates, static_cast<int>(actions[a].size()));
      }
    }
  }

  std::optional<SwapCircuit> best;
  int best_depth = 0;
  int best_attempt = 0;
  for (int a : solved) {
    SwapCircuit c = circuit_from_reduction(mask, perm, actions[a]);
    const int depth = c.depth();
    const bool better =
        !best || c.gate_count() < best->gate_count() ||
        (c.gate_count() == best->gate_count() &&
         (depth < best_depth || (depth == best_depth && a < best_attempt)));
    if (better) {
      best = std::move(c);
      best_depth = depth;
      best_attempt = a;
    }
  }
  if (best && !verify(*best)) {
    throw ContractViolation("synthesized circuit failed verification");
  }
  result.circuit = std::move(best);
  result.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

void write_circuit(std::ostream& out, const SwapCircuit& circuit) {
  const Lattice& lat = circuit.mask.lattice();
  out << "circuit v1 " << lat.rows() << ' ' << lat.cols() << ' '
      << circuit.gate_count() << ' ' << circuit.depth() << '\n';
  for (const Edge& g : circuit.gates) out << "swap " << g.a << ' ' << g.b << '\n';
}

CircuitText read_circuit(std::istream& in) {
  CircuitText c;
  std::string line;
  bool have_header = false;
  int declared_gates = 0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::istringstream fields(line);
    std::string tag;
    if (!(fields >> tag)) continue;
    const std::string where = "circuit line " + std::to_string(lineno) + ": ";
    if (!have_header) {
      std::string version;
      if (tag != "circuit" || !(fields >> version) || version != "v1" ||
          !(fields >> c.rows >> c.cols >> declared_gates >> c.depth)) {
        throw ParseError(where +
                         "expected 'circuit v1 <rows> <cols> <gates> <depth>'");
      }
      have_header = true;
      continue;
    }
    Edge g;
    if (tag != "swap" || !(fields >> g.a >> g.b)) {
      throw ParseError(where + "expected 'swap <node_a> <node_b>'");
    }
    const int n = c.rows * c.cols;
    if (g.a < 0 || g.b < 0 || g.a >= n || g.b >= n || g.a == g.b) {
      throw ParseError(where + "swap endpoints outside lattice");
    }
    if (g.a > g.b) std::swap(g.a, g.b);
    c.gates.push_back(g);
  }
  if (!have_header) throw ParseError("circuit: missing header");
  if (declared_gates != static_cast<int>(c.gates.size())) {
    throw ParseError("circuit: header declares " +
                     std::to_string(declared_gates) + " gates, found " +
                     std::to_string(c.gates.size()));
  }
  if (circuit_depth(c.gates) != c.depth) {
    throw ParseError("circuit: declared depth does not match gates");
  }
  return c;
}

}  // namespace permsynth

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
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "permsynth/lattice.hpp"
#include "permsynth/model_io.hpp"
#include "permsynth/permenv.hpp"
#include "permsynth/policy.hpp"

namespace permsynth {

enum class TopologyRegime { Generic, Fixed, ForcedMix };

std::string to_string(TopologyRegime regime);
TopologyRegime parse_regime(const std::string& text);

// Every tunable of a training run. Defaults are the documented standard
// values; all of them round-trip through the key=value config format.
struct TrainConfig {
  int rows = 5;
  int cols = 5;
  std::vector<int> hidden = {512, 512, 512};

  int batch_episodes = 256;
  int ppo_epochs = 4;
  int minibatch_size = 1024;
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 3e-4;
  double max_grad_norm = 0.5;
  int max_iterations = 1000;

  TopologyRegime regime = TopologyRegime::Generic;
  // Preset names, "full", or topology file paths. Fixed uses the first;
  // forced_mix picks uniformly among all of them.
  std::vector<std::string> topologies;
  double force_prob = 0.25;
  int min_nodes = 2;
  int max_nodes = 0;  // 0 means rows * cols

  RewardConfig reward;
  double success_threshold = 0.85;
  int start_difficulty = 1;
  int max_steps_base = 8;
  int max_steps_per_difficulty = 2;
  // Bootstrap truncated episodes from the critic instead of zero.
  bool bootstrap_truncated = false;
  // Stop once the curriculum reaches this difficulty (0 disables).
  int stop_difficulty = 0;

  int checkpoint_every = 0;  // 0 disables
  std::string checkpoint_dir;
  std::uint64_t seed = 1;
  int threads = 1;

  NetShape net_shape() const { return {rows, cols, hidden}; }
  int max_steps(int difficulty) const {
    return max_steps_base + max_steps_per_difficulty * difficulty;
  }
  void validate() const;
};

// key = value lines, '#' comments. Unknown keys are rejected.
TrainConfig read_train_config(std::istream& in, TrainConfig base = {});
TrainConfig read_train_config_file(const std::string& path, TrainConfig base = {});
// Applies one key; throws ParseError for unknown keys or bad values.
void set_train_option(TrainConfig& cfg, const std::string& key,
                      const std::string& value);
void write_train_config(std::ostream& out, const TrainConfig& cfg);

// Resolves a topology spec: builtin preset name, "full", or file path.
TopologyMask load_topology_spec(const std::string& spec,
                                std::shared_ptr<const Lattice> lattice);

// Produces the topology for each training episode according to the regime.
class TopologySource {
 public:
  TopologySource(const TrainConfig& cfg, std::shared_ptr<const Lattice> lattice);
  TopologyMask next(Rng& rng) const;

 private:
  TopologyRegime regime_;
  std::shared_ptr<const Lattice> lattice_;
  std::vector<TopologyMask> forced_;
  double force_prob_;
  int min_nodes_;
  int max_nodes_;
};

struct EpisodeRecord {
  std::vector<int> steps;  // transition indices in time order
  bool success = false;
  bool truncated = false;
  float bootstrap_value = 0.0f;  // value after the last step when truncated
};

// One batch of episodes. Transition t stores the observation, the active
// edge flags used when its action was sampled, the action, the sampling
// log-probability and the critic estimate.
struct RolloutBatch {
  int num_actions = 0;
  PolicyNet::Matrix obs;
  std::vector<std::uint8_t> masks;  // transitions x num_actions
  std::vector<int> actions;
  std::vector<float> log_probs;
  std::vector<float> rewards;
  std::vector<float> values;
  std::vector<std::uint8_t> dones;
  std::vector<EpisodeRecord> episodes;

  int num_transitions() const { return static_cast<int>(actions.size()); }
  std::span<const std::uint8_t> mask(int t) const {
    return {masks.data() + static_cast<std::size_t>(t) * num_actions,
            static_cast<std::size_t>(num_actions)};
  }
  double success_rate() const;
  // Mean episode length over successful episodes (0 when none succeeded).
  double mean_gates() const;
};

RolloutBatch collect_batch(const PolicyNet& net, const TrainConfig& cfg,
                           const TopologySource& topologies, int difficulty,
                           Rng& rng);

struct AdvantageEstimates {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation per episode. The value after the last
// step is zero for terminal episodes and `bootstrap_value` for truncated
// ones; returns = advantages + values.
AdvantageEstimates compute_gae(const RolloutBatch& batch, double gamma,
                               double lambda);

struct PpoCoefficients {
  double clip_epsilon = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

struct LossStats {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// A minibatch view. Advantages are normalized inside the loss.
template <typename Scalar>
struct PpoMinibatch {
  const typename BasicPolicyNet<Scalar>::Matrix* obs = nullptr;
  std::span<const std::uint8_t> masks;  // rows x num_actions
  std::span<const int> actions;
  std::span<const double> old_log_probs;
  std::span<const double> advantages;
  std::span<const double> returns;
};

// Clipped-surrogate PPO loss over masked distributions:
//   policy  -mean(min(r A, clip(r, 1-eps, 1+eps) A))
//   value   value_coef * mean((V - R)^2)
//   entropy -entropy_coef * mean(H)       (H over active edges only)
// Adds the gradient to `grad` when it is non-empty. `surrogate`, when
// non-null, receives the per-transition min(...) terms.
template <typename Scalar>
LossStats ppo_loss(const BasicPolicyNet<Scalar>& net,
                   const PpoMinibatch<Scalar>& mb, const PpoCoefficients& coef,
                   std::span<Scalar> grad,
                   std::vector<double>* surrogate = nullptr);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::size_t size, double learning_rate,
                         double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);
  void step(std::span<float> params, std::span<const float> grad);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<float> m_, v_;
  long t_ = 0;
};

// Shuffled minibatch passes with gradient-norm clipping. Throws
// TrainingAborted on a non-finite loss.
LossStats ppo_update(PolicyNet& net, AdamOptimizer& opt,
                     const RolloutBatch& batch, const AdvantageEstimates& adv,
                     const TrainConfig& cfg, Rng& rng);

struct IterationLog {
  int iteration = 0;
  int difficulty = 0;  // difficulty the batch was collected at
  double success_rate = 0.0;
  double mean_gates = 0.0;
  LossStats loss;
  int transitions = 0;
};

void write_log_header(std::ostream& out);
void write_log_line(std::ostream& out, const IterationLog& row);
std::vector<IterationLog> read_training_log(std::istream& in);

// Owns the mutable network, optimizer, curriculum and random stream of one
// run.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);
  // Continues from existing weights with a fresh optimizer.
  Trainer(TrainConfig cfg, PolicyNet init, int start_difficulty);

  IterationLog iterate();

  const PolicyNet& net() const { return net_; }
  const CurriculumState& curriculum() const { return curriculum_; }
  const TrainConfig& config() const { return cfg_; }
  int iteration() const { return iteration_; }
  ModelMetadata metadata() const;

 private:
  TrainConfig cfg_;
  std::shared_ptr<const Lattice> lattice_;
  TopologySource topologies_;
  PolicyNet net_;
  AdamOptimizer adam_;
  CurriculumState curriculum_;
  Rng rng_;
  int iteration_ = 0;
};

struct TrainResult {
  PolicyNet net;
  ModelMetadata metadata;
  std::vector<IterationLog> log;
};

using IterationCallback = std::function<void(const IterationLog&, const Trainer&)>;

// Runs collect -> GAE -> update -> curriculum until max_iterations or
// stop_difficulty. Writes checkpoint containers when configured.
TrainResult train(const TrainConfig& cfg, const IterationCallback& on_iteration = {});

// Continues training `base` (optimizer state fresh, curriculum resumed at
// base_meta.difficulty). Used for plain continuation and forced-topology
// fine-tuning alike.
TrainResult fine_tune(const PolicyNet& base, const ModelMetadata& base_meta,
                      const TrainConfig& cfg,
                      const IterationCallback& on_iteration = {});

}  // namespace permsynth

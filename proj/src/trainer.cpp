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

#include "permsynth/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "permsynth/errors.hpp"

namespace permsynth {

double RolloutBatch::success_rate() const {
  if (episodes.empty()) return 0.0;
  int ok = 0;
  for (const auto& ep : episodes) ok += ep.success;
  return static_cast<double>(ok) / static_cast<double>(episodes.size());
}

double RolloutBatch::mean_gates() const {
  long gates = 0;
  int ok = 0;
  for (const auto& ep : episodes) {
    if (!ep.success) continue;
    gates += static_cast<long>(ep.steps.size());
    ++ok;
  }
  return ok ? static_cast<double>(gates) / ok : 0.0;
}

namespace {

// Rollout storage while episodes are still running; observations are
// appended row by row and turned into a matrix once the batch is complete.
struct RolloutBuilder {
  RolloutBatch batch;
  std::vector<float> obs;
};

RolloutBatch collect_chunk(const PolicyNet& net, const TrainConfig& cfg,
                           const TopologySource& topologies, int difficulty,
                           int num_episodes, Rng& rng) {
  const NetShape& shape = net.shape();
  const int obs_dim = shape.observation_size();
  const int num_actions = shape.num_actions();

  std::vector<EpisodeState> episodes;
  episodes.reserve(num_episodes);
  for (int i = 0; i < num_episodes; ++i) {
    TopologyMask mask = topologies.next(rng);
    Permutation perm = sample_instance(mask, difficulty, rng);
    episodes.emplace_back(std::move(perm), std::move(mask),
                          cfg.max_steps(difficulty));
  }

  RolloutBuilder b;
  b.batch.num_actions = num_actions;
  b.batch.episodes.resize(num_episodes);
  for (int i = 0; i < num_episodes; ++i) {
    // Identity inputs finish before the first step.
    b.batch.episodes[i].success = episodes[i].solved();
  }

  PolicyNet::Matrix obs;
  PolicyNet::Workspace ws;
  std::vector<int> live;
  for (;;) {
    live.clear();
    for (int i = 0; i < num_episodes; ++i) {
      if (!episodes[i].done()) live.push_back(i);
    }
    if (live.empty()) break;
    obs.resize(static_cast<Eigen::Index>(live.size()), obs_dim);
    for (std::size_t r = 0; r < live.size(); ++r) {
      const EpisodeState& ep = episodes[live[r]];
      encode_observation<float>(ep.perm(), ep.mask(),
                                std::span<float>(obs.row(r).data(), obs_dim));
    }
    net.forward(obs, ws);
    for (std::size_t r = 0; r < live.size(); ++r) {
      const int i = live[r];
      EpisodeState& ep = episodes[i];
      const std::span<const float> logits(ws.logits.row(r).data(), num_actions);
      const MaskedDistribution dist = masked_distribution(logits, ep.mask());
      const int action = choose_action(dist, InferenceMode::Sampling, rng);

      const int t = b.batch.num_transitions();
      b.obs.insert(b.obs.end(), obs.row(r).data(), obs.row(r).data() + obs_dim);
      const auto flags = ep.mask().edge_flags();
      b.batch.masks.insert(b.batch.masks.end(), flags.begin(), flags.end());
      b.batch.actions.push_back(action);
      b.batch.log_probs.push_back(static_cast<float>(std::log(dist.probs[action])));
      b.batch.values.push_back(ws.values(r));

      const StepOutcome out = ep.step(action, cfg.reward);
      b.batch.rewards.push_back(static_cast<float>(out.reward));
      b.batch.dones.push_back(out.done ? 1 : 0);
      EpisodeRecord& rec = b.batch.episodes[i];
      rec.steps.push_back(t);
      if (out.done) {
        rec.success = ep.solved();
        rec.truncated = !rec.success;
      }
    }
  }

  if (cfg.bootstrap_truncated) {
    std::vector<int> cut;
    for (int i = 0; i < num_episodes; ++i) {
      if (b.batch.episodes[i].truncated) cut.push_back(i);
    }
    if (!cut.empty()) {
      obs.resize(static_cast<Eigen::Index>(cut.size()), obs_dim);
      for (std::size_t r = 0; r < cut.size(); ++r) {
        const EpisodeState& ep = episodes[cut[r]];
        encode_observation<float>(ep.perm(), ep.mask(),
                                  std::span<float>(obs.row(r).data(), obs_dim));
      }
      net.forward(obs, ws);
      for (std::size_t r = 0; r < cut.size(); ++r) {
        b.batch.episodes[cut[r]].bootstrap_value = ws.values(r);
      }
    }
  }

  const int transitions = b.batch.num_transitions();
  b.batch.obs = Eigen::Map<PolicyNet::Matrix>(b.obs.data(), transitions, obs_dim);
  return std::move(b.batch);
}

void append_batch(RolloutBatch& into, RolloutBatch&& part) {
  const int offset = into.num_transitions();
  if (into.obs.rows() == 0) {
    into.obs = std::move(part.obs);
  } else {
    PolicyNet::Matrix joined(into.obs.rows() + part.obs.rows(), into.obs.cols());
    joined << into.obs, part.obs;
    into.obs = std::move(joined);
  }
  into.masks.insert(into.masks.end(), part.masks.begin(), part.masks.end());
  into.actions.insert(into.actions.end(), part.actions.begin(), part.actions.end());
  into.log_probs.insert(into.log_probs.end(), part.log_probs.begin(),
                        part.log_probs.end());
  into.rewards.insert(into.rewards.end(), part.rewards.begin(), part.rewards.end());
  into.values.insert(into.values.end(), part.values.begin(), part.values.end());
  into.dones.insert(into.dones.end(), part.dones.begin(), part.dones.end());
  for (EpisodeRecord& ep : part.episodes) {
    for (int& t : ep.steps) t += offset;
    into.episodes.push_back(std::move(ep));
  }
}

}  // namespace

RolloutBatch collect_batch(const PolicyNet& net, const TrainConfig& cfg,
                           const TopologySource& topologies, int difficulty,
                           Rng& rng) {
  if (net.shape() != cfg.net_shape()) {
    throw InvalidArgument("network shape does not match training config");
  }
  const int chunks = std::max(1, std::min(cfg.threads, cfg.batch_episodes));
  if (chunks == 1) {
    return collect_chunk(net, cfg, topologies, difficulty, cfg.batch_episodes,
                         rng);
  }
  const std::uint64_t base = rng();
  std::vector<RolloutBatch> parts(chunks);
  std::vector<std::exception_ptr> errors(chunks);
  {
    std::vector<std::jthread> workers;
    for (int c = 0; c < chunks; ++c) {
      const int count = cfg.batch_episodes / chunks +
                        (c < cfg.batch_episodes % chunks ? 1 : 0);
      workers.emplace_back([&, c, count] {
        try {
          Rng local(derive_seed(base, c));
          parts[c] = collect_chunk(net, cfg, topologies, difficulty, count, local);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  RolloutBatch out;
  out.num_actions = net.shape().num_actions();
  for (RolloutBatch& p : parts) append_batch(out, std::move(p));
  return out;
}

AdvantageEstimates compute_gae(const RolloutBatch& batch, double gamma,
                               double lambda) {
  const int n = batch.num_transitions();
  AdvantageEstimates out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  for (const EpisodeRecord& ep : batch.episodes) {
    double next_value = ep.truncated ? ep.bootstrap_value : 0.0;
    double running = 0.0;
    for (std::size_t k = ep.steps.size(); k-- > 0;) {
      const int t = ep.steps[k];
      const double v = batch.values[t];
      const double delta = batch.rewards[t] + gamma * next_value - v;
      running = delta + gamma * lambda * running;
      out.advantages[t] = running;
      out.returns[t] = running + v;
      next_value = v;
    }
  }
  return out;
}

template <typename Scalar>
LossStats ppo_loss(const BasicPolicyNet<Scalar>& net,
                   const PpoMinibatch<Scalar>& mb, const PpoCoefficients& coef,
                   std::span<Scalar> grad, std::vector<double>* surrogate) {
  using Net = BasicPolicyNet<Scalar>;
  const auto& obs = *mb.obs;
  const int rows = static_cast<int>(obs.rows());
  const int num_actions = net.shape().num_actions();
  if (rows == 0 || static_cast<int>(mb.actions.size()) != rows ||
      mb.masks.size() != static_cast<std::size_t>(rows) * num_actions) {
    throw InvalidArgument("malformed PPO minibatch");
  }
  typename Net::Workspace ws;
  net.forward(obs, ws);

  double mean = 0.0;
  for (double a : mb.advantages) mean += a;
  mean /= rows;
  double var = 0.0;
  for (double a : mb.advantages) var += (a - mean) * (a - mean);
  const double scale = 1.0 / (std::sqrt(var / rows) + 1e-8);

  const bool want_grad = !grad.empty();
  typename Net::Matrix dlogits;
  typename Net::Vector dvalues;
  if (want_grad) {
    dlogits.setZero(rows, num_actions);
    dvalues.setZero(rows);
  }
  if (surrogate) surrogate->assign(rows, 0.0);

  LossStats s;
  std::vector<double> logp(num_actions);
  const double inv = 1.0 / rows;
  const double lo = 1.0 - coef.clip_epsilon;
  const double hi = 1.0 + coef.clip_epsilon;
  for (int i = 0; i < rows; ++i) {
    const std::uint8_t* flags = mb.masks.data() + static_cast<std::size_t>(i) * num_actions;
    const int action = mb.actions[i];
    if (!flags[action]) {
      throw ContractViolation("PPO minibatch holds an inactive action");
    }
    double top = -std::numeric_limits<double>::infinity();
    for (int e = 0; e < num_actions; ++e) {
      if (flags[e]) top = std::max(top, static_cast<double>(ws.logits(i, e)));
    }
    double sum = 0.0;
    for (int e = 0; e < num_actions; ++e) {
      if (flags[e]) sum += std::exp(static_cast<double>(ws.logits(i, e)) - top);
    }
    const double lse = top + std::log(sum);
    double entropy = 0.0;
    for (int e = 0; e < num_actions; ++e) {
      if (!flags[e]) continue;
      logp[e] = static_cast<double>(ws.logits(i, e)) - lse;
      entropy -= std::exp(logp[e]) * logp[e];
    }

    const double adv = (mb.advantages[i] - mean) * scale;
    const double log_ratio = logp[action] - mb.old_log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, lo, hi) * adv;
    const double surr = std::min(unclipped, clipped);
    if (surrogate) (*surrogate)[i] = surr;

    const double value = ws.values(i);
    const double err = value - mb.returns[i];
    s.policy -= surr * inv;
    s.value += err * err * inv;
    s.entropy += entropy * inv;
    s.approx_kl += ((ratio - 1.0) - log_ratio) * inv;
    s.clip_fraction += (std::abs(ratio - 1.0) > coef.clip_epsilon ? 1.0 : 0.0) * inv;

    if (!want_grad) continue;
    // d(-surr)/d(logp[action]); zero when the clipped branch is selected.
    const double g_logp = unclipped <= clipped ? -ratio * adv * inv : 0.0;
    const double g_ent = coef.entropy_coef * inv;
    for (int e = 0; e < num_actions; ++e) {
      if (!flags[e]) continue;
      const double p = std::exp(logp[e]);
      double g = -g_logp * p + g_ent * p * (logp[e] + entropy);
      if (e == action) g += g_logp;
      dlogits(i, e) = static_cast<Scalar>(g);
    }
    dvalues(i) = static_cast<Scalar>(2.0 * coef.value_coef * err * inv);
  }
  s.total = s.policy + coef.value_coef * s.value - coef.entropy_coef * s.entropy;
  if (want_grad) net.backward(obs, ws, dlogits, dvalues, grad);
  return s;
}

template LossStats ppo_loss<float>(const BasicPolicyNet<float>&,
                                   const PpoMinibatch<float>&,
                                   const PpoCoefficients&, std::span<float>,
                                   std::vector<double>*);
template LossStats ppo_loss<double>(const BasicPolicyNet<double>&,
                                    const PpoMinibatch<double>&,
                                    const PpoCoefficients&, std::span<double>,
                                    std::vector<double>*);

AdamOptimizer::AdamOptimizer(std::size_t size, double learning_rate,
                             double beta1, double beta2, double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(size, 0.0f),
      v_(size, 0.0f) {}

void AdamOptimizer::step(std::span<float> params, std::span<const float> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw InvalidArgument("optimizer size mismatch");
  }
  ++t_;
  const float b1 = static_cast<float>(beta1_);
  const float b2 = static_cast<float>(beta2_);
  const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(beta1_, t_)));
  const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(beta2_, t_)));
  const float lr = static_cast<float>(lr_);
  const float eps = static_cast<float>(eps_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const float g = grad[i];
    m_[i] = b1 * m_[i] + (1.0f - b1) * g;
    v_[i] = b2 * v_[i] + (1.0f - b2) * g * g;
    params[i] -= lr * (m_[i] * c1) / (std::sqrt(v_[i] * c2) + eps);
  }
}

LossStats ppo_update(PolicyNet& net, AdamOptimizer& opt,
                     const RolloutBatch& batch, const AdvantageEstimates& adv,
                     const TrainConfig& cfg, Rng& rng) {
  const int n = batch.num_transitions();
  if (n == 0) throw InvalidArgument("PPO update on an empty rollout");
  const int obs_dim = static_cast<int>(batch.obs.cols());
  const int num_actions = batch.num_actions;
  const PpoCoefficients coef{cfg.clip_epsilon, cfg.value_coef, cfg.entropy_coef};

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  ParamBuffer<float> grad(net.parameter_count());
  PolicyNet::Matrix obs;
  std::vector<std::uint8_t> masks;
  std::vector<int> actions;
  std::vector<double> old_logp, advantages, returns;

  LossStats mean;
  int updates = 0;
  for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += cfg.minibatch_size) {
      const int rows = std::min(cfg.minibatch_size, n - start);
      obs.resize(rows, obs_dim);
      masks.resize(static_cast<std::size_t>(rows) * num_actions);
      actions.resize(rows);
      old_logp.resize(rows);
      advantages.resize(rows);
      returns.resize(rows);
      for (int r = 0; r < rows; ++r) {
        const int t = order[start + r];
        obs.row(r) = batch.obs.row(t);
        const auto m = batch.mask(t);
        std::copy(m.begin(), m.end(), masks.begin() + static_cast<std::size_t>(r) * num_actions);
        actions[r] = batch.actions[t];
        old_logp[r] = batch.log_probs[t];
        advantages[r] = adv.advantages[t];
        returns[r] = adv.returns[t];
      }
      PpoMinibatch<float> mb{&obs, masks, actions, old_logp, advantages, returns};
      std::fill(grad.begin(), grad.end(), 0.0f);
      const LossStats s = ppo_loss<float>(net, mb, coef, grad);

      double norm2 = 0.0;
      for (float g : grad) norm2 += static_cast<double>(g) * g;
      if (!std::isfinite(s.total) || !std::isfinite(norm2)) {
        std::ostringstream msg;
        msg << "non-finite PPO loss at epoch " << epoch << ", minibatch "
            << start / cfg.minibatch_size << " (policy " << s.policy
            << ", value " << s.value << ", entropy " << s.entropy
            << ", grad norm^2 " << norm2 << ")";
        throw TrainingAborted(msg.str());
      }
      const double norm = std::sqrt(norm2);
      if (norm > cfg.max_grad_norm) {
        const float k = static_cast<float>(cfg.max_grad_norm / norm);
        for (float& g : grad) g *= k;
      }
      opt.step(net.parameters(), grad);

      mean.total += s.total;
      mean.policy += s.policy;
      mean.value += s.value;
      mean.entropy += s.entropy;
      mean.approx_kl += s.approx_kl;
      mean.clip_fraction += s.clip_fraction;
      ++updates;
    }
  }
  const double k = 1.0 / updates;
  mean.total *= k;
  mean.policy *= k;
  mean.value *= k;
  mean.entropy *= k;
  mean.approx_kl *= k;
  mean.clip_fraction *= k;
  return mean;
}

void write_log_header(std::ostream& out) {
  out << "iteration,difficulty,success_rate,mean_gates,policy_loss,value_loss,"
         "entropy,approx_kl,clip_fraction,transitions\n";
}

void write_log_line(std::ostream& out, const IterationLog& row) {
  std::ostringstream line;
  line << std::setprecision(6) << row.iteration << ',' << row.difficulty << ','
       << row.success_rate << ',' << row.mean_gates << ',' << row.loss.policy
       << ',' << row.loss.value << ',' << row.loss.entropy << ','
       << row.loss.approx_kl << ',' << row.loss.clip_fraction << ','
       << row.transitions << '\n';
  out << line.str();
}

std::vector<IterationLog> read_training_log(std::istream& in) {
  std::vector<IterationLog> rows;
  std::string line;
  if (!std::getline(in, line) || line.rfind("iteration,", 0) != 0) {
    throw ParseError("training log: missing header");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream f(line);
    IterationLog r;
    if (!(f >> r.iteration >> r.difficulty >> r.success_rate >> r.mean_gates >>
          r.loss.policy >> r.loss.value >> r.loss.entropy >> r.loss.approx_kl >>
          r.loss.clip_fraction >> r.transitions)) {
      throw ParseError("training log line " + std::to_string(lineno) +
                       " is malformed");
    }
    rows.push_back(r);
  }
  return rows;
}

namespace {

constexpr std::uint64_t kNetStream = 0x6e6574;
constexpr std::uint64_t kTrainStream = 0x747261696e;

}  // namespace

Trainer::Trainer(TrainConfig cfg)
    : Trainer(cfg,
              PolicyNet::initialized(cfg.net_shape(),
                                     derive_seed(cfg.seed, kNetStream)),
              cfg.start_difficulty) {}

Trainer::Trainer(TrainConfig cfg, PolicyNet init, int start_difficulty)
    : cfg_(std::move(cfg)),
      lattice_((cfg_.validate(), build_lattice(cfg_.rows, cfg_.cols))),
      topologies_(cfg_, lattice_),
      net_(std::move(init)),
      adam_(net_.parameter_count(), cfg_.learning_rate),
      rng_(derive_seed(cfg_.seed, kTrainStream)) {
  if (net_.shape() != cfg_.net_shape()) {
    throw InvalidArgument("initial network shape does not match training config");
  }
  if (start_difficulty < 1) throw InvalidArgument("difficulty must be >= 1");
  curriculum_.difficulty = start_difficulty;
  curriculum_.success_threshold = cfg_.success_threshold;
}

IterationLog Trainer::iterate() {
  IterationLog row;
  row.iteration = iteration_;
  row.difficulty = curriculum_.difficulty;
  const RolloutBatch batch =
      collect_batch(net_, cfg_, topologies_, curriculum_.difficulty, rng_);
  row.success_rate = batch.success_rate();
  row.mean_gates = batch.mean_gates();
  row.transitions = batch.num_transitions();
  if (batch.num_transitions() > 0) {
    const AdvantageEstimates adv =
        compute_gae(batch, cfg_.gamma, cfg_.gae_lambda);
    row.loss = ppo_update(net_, adam_, batch, adv, cfg_, rng_);
  }
  curriculum_ = curriculum_update(curriculum_, row.success_rate);
  ++iteration_;
  return row;
}

ModelMetadata Trainer::metadata() const {
  return {cfg_.seed, static_cast<std::uint32_t>(curriculum_.difficulty)};
}

namespace {

TrainResult run(Trainer& trainer, const IterationCallback& on_iteration) {
  const TrainConfig& cfg = trainer.config();
  TrainResult result{trainer.net(), trainer.metadata(), {}};
  while (trainer.iteration() < cfg.max_iterations &&
         !(cfg.stop_difficulty > 0 &&
           trainer.curriculum().difficulty >= cfg.stop_difficulty)) {
    const IterationLog row = trainer.iterate();
    result.log.push_back(row);
    if (on_iteration) on_iteration(row, trainer);
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() &&
        trainer.iteration() % cfg.checkpoint_every == 0) {
      std::ostringstream name;
      name << "checkpoint_" << std::setw(6) << std::setfill('0')
           << trainer.iteration() << ".psn";
      save_model(trainer.net(), trainer.metadata(),
                 (std::filesystem::path(cfg.checkpoint_dir) / name.str()).string());
    }
  }
  result.net = trainer.net();
  result.metadata = trainer.metadata();
  return result;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const IterationCallback& on_iteration) {
  Trainer trainer(cfg);
  return run(trainer, on_iteration);
}

TrainResult fine_tune(const PolicyNet& base, const ModelMetadata& base_meta,
                      const TrainConfig& cfg,
                      const IterationCallback& on_iteration) {
  if (base.shape() != cfg.net_shape()) {
    throw InvalidArgument("base model shape does not match fine-tune config");
  }
  Trainer trainer(cfg, base,
                  std::max<int>(1, static_cast<int>(base_meta.difficulty)));
  return run(trainer, on_iteration);
}

}  // namespace permsynth

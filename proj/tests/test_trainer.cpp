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

#include <cmath>
#include <sstream>

#include "permsynth/errors.hpp"
#include "permsynth/trainer.hpp"

namespace permsynth {
namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.rows = 2;
  cfg.cols = 2;
  cfg.hidden = {32, 32};
  cfg.batch_episodes = 32;
  cfg.minibatch_size = 64;
  cfg.ppo_epochs = 2;
  cfg.max_iterations = 5;
  return cfg;
}

// Random episodes with bookkeeping only; observations are not needed for GAE.
RolloutBatch random_episodes(Rng& rng, int episodes) {
  RolloutBatch b;
  b.num_actions = 1;
  for (int e = 0; e < episodes; ++e) {
    EpisodeRecord rec;
    const int len = 1 + uniform_index(rng, 12);
    for (int k = 0; k < len; ++k) {
      rec.steps.push_back(b.num_transitions());
      b.actions.push_back(0);
      b.masks.push_back(1);
      b.log_probs.push_back(0.0f);
      b.rewards.push_back(static_cast<float>(uniform_real(rng) * 4 - 2));
      b.values.push_back(static_cast<float>(uniform_real(rng) * 4 - 2));
      b.dones.push_back(k + 1 == len);
    }
    rec.truncated = uniform_real(rng) < 0.5;
    rec.success = !rec.truncated;
    rec.bootstrap_value = rec.truncated ? static_cast<float>(uniform_real(rng)) : 0.0f;
    b.episodes.push_back(rec);
  }
  return b;
}

TEST(Gae, MatchesQuadraticSum) {
  Rng rng(31);
  const RolloutBatch b = random_episodes(rng, 100);
  const double gamma = 0.97, lambda = 0.9;
  const AdvantageEstimates est = compute_gae(b, gamma, lambda);
  for (const EpisodeRecord& ep : b.episodes) {
    const int n = static_cast<int>(ep.steps.size());
    auto value_at = [&](int k) {
      if (k < n) return static_cast<double>(b.values[ep.steps[k]]);
      return ep.truncated ? static_cast<double>(ep.bootstrap_value) : 0.0;
    };
    for (int k = 0; k < n; ++k) {
      double adv = 0.0;
      for (int l = k; l < n; ++l) {
        const double delta = b.rewards[ep.steps[l]] + gamma * value_at(l + 1) - value_at(l);
        adv += std::pow(gamma * lambda, l - k) * delta;
      }
      EXPECT_NEAR(est.advantages[ep.steps[k]], adv, 1e-10);
      EXPECT_NEAR(est.returns[ep.steps[k]], adv + value_at(k), 1e-10);
    }
  }
}

TEST(Gae, LambdaOneIsDiscountedReturn) {
  Rng rng(2);
  RolloutBatch b = random_episodes(rng, 20);
  for (auto& ep : b.episodes) ep.truncated = false;
  const AdvantageEstimates est = compute_gae(b, 0.9, 1.0);
  for (const auto& ep : b.episodes) {
    double g = 0.0;
    for (std::size_t k = ep.steps.size(); k-- > 0;) {
      g = b.rewards[ep.steps[k]] + 0.9 * g;
      EXPECT_NEAR(est.returns[ep.steps[k]], g, 1e-9);
    }
  }
}

struct PpoFixture {
  using Net = BasicPolicyNet<double>;
  Net net;
  Net::Matrix obs;
  std::vector<std::uint8_t> masks;
  std::vector<int> actions;
  std::vector<double> old_logp, adv, ret;

  explicit PpoFixture(std::uint64_t seed) : net(Net::initialized({1, 3, {4, 3}}, seed)) {
    Rng rng(seed);
    for (double& p : net.parameters()) p *= 4.0;
    const int rows = 8;
    const int actions_n = net.shape().num_actions();
    obs.resize(rows, net.shape().observation_size());
    for (int i = 0; i < obs.size(); ++i) obs.data()[i] = uniform_real(rng);
    for (int i = 0; i < rows; ++i) {
      std::vector<std::uint8_t> m(actions_n, 0);
      for (auto& f : m) f = uniform_real(rng) < 0.7;
      const int a = uniform_index(rng, actions_n);
      m[a] = 1;
      masks.insert(masks.end(), m.begin(), m.end());
      actions.push_back(a);
      old_logp.push_back(std::log(0.2 + 0.6 * uniform_real(rng)));
      adv.push_back(uniform_real(rng) * 2 - 1);
      ret.push_back(uniform_real(rng) * 2 - 1);
    }
  }
  PpoMinibatch<double> mb() const { return {&obs, masks, actions, old_logp, adv, ret}; }
};

TEST(PpoLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    PpoFixture f(seed);
    ASSERT_LE(f.net.parameter_count(), 1000u);
    const PpoCoefficients coef{0.2, 0.5, 0.01};
    std::vector<double> grad(f.net.parameter_count(), 0.0);
    ppo_loss<double>(f.net, f.mb(), coef, grad);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      auto plus = f.net, minus = f.net;
      plus.parameters()[i] += h;
      minus.parameters()[i] -= h;
      const double fd = (ppo_loss<double>(plus, f.mb(), coef, {}).total -
                         ppo_loss<double>(minus, f.mb(), coef, {}).total) /
                        (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
      worst = std::max(worst, std::abs(fd - grad[i]) / scale);
    }
    EXPECT_LE(worst, 1e-3) << "seed " << seed;
  }
}

TEST(PpoLoss, SurrogatePicksPessimisticBranch) {
  // Ratios far above 1 + eps: positive advantages are clipped, negative ones
  // keep the unclipped (more pessimistic) term.
  PpoFixture f(5);
  for (double& lp : f.old_logp) lp = -50.0;
  std::vector<double> surrogate;
  ppo_loss<double>(f.net, f.mb(), {0.2, 0.5, 0.01}, {}, &surrogate);
  double mean = 0, var = 0;
  for (double a : f.adv) mean += a / 8;
  for (double a : f.adv) var += (a - mean) * (a - mean) / 8;
  for (int i = 0; i < 8; ++i) {
    const double norm = (f.adv[i] - mean) / (std::sqrt(var) + 1e-8);
    if (norm > 0) {
      EXPECT_NEAR(surrogate[i], 1.2 * norm, 1e-9);
    } else {
      EXPECT_LT(surrogate[i], 1e3 * norm);
    }
  }
}

TEST(Adam, MinimizesQuadratic) {
  std::vector<float> x = {3.0f, -2.0f, 0.5f};
  AdamOptimizer opt(3, 0.05);
  for (int i = 0; i < 2000; ++i) {
    std::vector<float> g(3);
    for (int k = 0; k < 3; ++k) g[k] = 2.0f * (x[k] - static_cast<float>(k));
    opt.step(x, g);
  }
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(x[k], k, 1e-2);
  EXPECT_EQ(opt.steps(), 2000);
}

TEST(Trainer, BatchActionsAreAlwaysActive) {
  TrainConfig cfg = tiny_config();
  cfg.rows = 3;
  cfg.cols = 3;
  cfg.batch_episodes = 64;
  auto lattice = build_lattice(3, 3);
  const TopologySource source(cfg, lattice);
  const PolicyNet net = PolicyNet::initialized(cfg.net_shape(), 1);
  Rng rng(4);
  for (int d : {1, 3, 6}) {
    const RolloutBatch b = collect_batch(net, cfg, source, d, rng);
    for (int t = 0; t < b.num_transitions(); ++t) {
      EXPECT_TRUE(b.mask(t)[b.actions[t]]);
      EXPECT_LE(b.log_probs[t], 0.0f);
    }
    for (const auto& ep : b.episodes) EXPECT_LE(ep.steps.size(), std::size_t(cfg.max_steps(d)));
  }
}

TEST(Trainer, ThreadedCollectionIsWellFormed) {
  TrainConfig cfg = tiny_config();
  cfg.threads = 3;
  cfg.batch_episodes = 31;
  auto lattice = build_lattice(2, 2);
  const TopologySource source(cfg, lattice);
  const PolicyNet net = PolicyNet::initialized(cfg.net_shape(), 1);
  Rng rng(1);
  const RolloutBatch b = collect_batch(net, cfg, source, 3, rng);
  EXPECT_EQ(b.episodes.size(), 31u);
  EXPECT_EQ(b.obs.rows(), b.num_transitions());
  std::vector<int> seen(b.num_transitions(), 0);
  for (const auto& ep : b.episodes)
    for (int t : ep.steps) ++seen[t];
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Trainer, DeterministicForSeed) {
  const TrainConfig cfg = tiny_config();
  const TrainResult a = train(cfg);
  const TrainResult b = train(cfg);
  EXPECT_EQ(a.net, b.net);
  EXPECT_EQ(a.metadata.difficulty, b.metadata.difficulty);
  TrainConfig other = cfg;
  other.seed = 2;
  EXPECT_FALSE(train(other).net == a.net);
}

TEST(Trainer, CurriculumNeverDecreases) {
  TrainConfig cfg = tiny_config();
  cfg.max_iterations = 30;
  const TrainResult r = train(cfg);
  for (std::size_t i = 1; i < r.log.size(); ++i) {
    ASSERT_GE(r.log[i].difficulty, r.log[i - 1].difficulty);
    if (r.log[i].difficulty > r.log[i - 1].difficulty) {
      EXPECT_GT(r.log[i - 1].success_rate, 0.85);
    }
  }
}

TEST(Trainer, ForcedMixWithZeroProbabilityEqualsGeneric) {
  TrainConfig cfg = tiny_config();
  const TrainResult base = train(cfg);
  TrainConfig generic = cfg;
  generic.seed = 9;
  TrainConfig forced = generic;
  forced.regime = TopologyRegime::ForcedMix;
  forced.topologies = {"4qO"};
  forced.force_prob = 0.0;
  EXPECT_EQ(fine_tune(base.net, base.metadata, generic).net,
            fine_tune(base.net, base.metadata, forced).net);
  forced.force_prob = 0.5;
  EXPECT_FALSE(fine_tune(base.net, base.metadata, generic).net ==
               fine_tune(base.net, base.metadata, forced).net);
}

TEST(Trainer, FineTuneRejectsShapeMismatch) {
  TrainConfig cfg = tiny_config();
  const PolicyNet other = PolicyNet::initialized({3, 3, {32, 32}}, 1);
  EXPECT_THROW(fine_tune(other, {}, cfg), InvalidArgument);
}

TEST(Trainer, StopDifficultyEndsEarly) {
  TrainConfig cfg = tiny_config();
  cfg.max_iterations = 500;
  cfg.stop_difficulty = 3;
  const TrainResult r = train(cfg);
  EXPECT_LT(r.log.size(), 500u);
  EXPECT_EQ(r.metadata.difficulty, 3u);
}

TEST(Trainer, NonFiniteLossAborts) {
  TrainConfig cfg = tiny_config();
  auto lattice = build_lattice(2, 2);
  const TopologySource source(cfg, lattice);
  PolicyNet net = PolicyNet::initialized(cfg.net_shape(), 1);
  Rng rng(1);
  const RolloutBatch b = collect_batch(net, cfg, source, 2, rng);
  AdvantageEstimates adv = compute_gae(b, cfg.gamma, cfg.gae_lambda);
  adv.returns[0] = std::numeric_limits<double>::quiet_NaN();
  AdamOptimizer opt(net.parameter_count(), cfg.learning_rate);
  EXPECT_THROW(ppo_update(net, opt, b, adv, cfg, rng), TrainingAborted);
}

TEST(TrainConfig, RoundTripAndErrors) {
  TrainConfig cfg;
  cfg.rows = 3;
  cfg.hidden = {64, 32};
  cfg.learning_rate = 1.0 / 3.0;
  cfg.regime = TopologyRegime::ForcedMix;
  cfg.topologies = {"8qO", "full"};
  cfg.bootstrap_truncated = true;
  cfg.seed = 123456789012345ull;
  std::stringstream s;
  write_train_config(s, cfg);
  const TrainConfig back = read_train_config(s);
  std::stringstream again;
  write_train_config(again, back);
  EXPECT_EQ(s.str(), again.str());
  EXPECT_EQ(back.learning_rate, cfg.learning_rate);
  EXPECT_EQ(back.topologies, cfg.topologies);
  EXPECT_EQ(back.seed, cfg.seed);

  std::istringstream unknown("rowz = 3\n");
  EXPECT_THROW(read_train_config(unknown), ParseError);
  std::istringstream bad("gamma = fast\n");
  EXPECT_THROW(read_train_config(bad), ParseError);
  EXPECT_THROW(parse_regime("sometimes"), ParseError);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.regime = TopologyRegime::Fixed;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.clip_epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.min_nodes = 1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(TrainingLog, RoundTrip) {
  std::vector<IterationLog> rows(3);
  for (int i = 0; i < 3; ++i) {
    rows[i].iteration = i;
    rows[i].difficulty = 1 + i;
    rows[i].success_rate = 0.25 * i;
    rows[i].transitions = 10 * i;
  }
  std::stringstream s;
  write_log_header(s);
  for (const auto& r : rows) write_log_line(s, r);
  const auto back = read_training_log(s);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[2].difficulty, 3);
  EXPECT_DOUBLE_EQ(back[2].success_rate, 0.5);
}

}  // namespace
}  // namespace permsynth

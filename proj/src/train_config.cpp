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

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "permsynth/errors.hpp"
#include "permsynth/trainer.hpp"

namespace permsynth {

std::string to_string(TopologyRegime regime) {
  switch (regime) {
    case TopologyRegime::Generic: return "generic";
    case TopologyRegime::Fixed: return "fixed";
    case TopologyRegime::ForcedMix: return "forced_mix";
  }
  return "?";
}

TopologyRegime parse_regime(const std::string& text) {
  if (text == "generic") return TopologyRegime::Generic;
  if (text == "fixed") return TopologyRegime::Fixed;
  if (text == "forced_mix") return TopologyRegime::ForcedMix;
  throw ParseError("unknown topology regime '" + text +
                   "' (expected generic, fixed or forced_mix)");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument(what); };
  net_shape().validate();
  if (batch_episodes < 1) fail("batch_episodes must be >= 1");
  if (ppo_epochs < 1) fail("ppo_epochs must be >= 1");
  if (minibatch_size < 1) fail("minibatch_size must be >= 1");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) fail("clip_epsilon must be in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must be in [0, 1]");
  if (!(value_coef >= 0.0)) fail("value_coef must be >= 0");
  if (!(entropy_coef >= 0.0)) fail("entropy_coef must be >= 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm must be > 0");
  if (max_iterations < 0) fail("iterations must be >= 0");
  if (!(force_prob >= 0.0 && force_prob <= 1.0)) fail("force_prob must be in [0, 1]");
  if (regime != TopologyRegime::Generic && topologies.empty()) {
    fail("regime " + to_string(regime) + " needs at least one topology");
  }
  const int n = rows * cols;
  const int hi = max_nodes == 0 ? n : max_nodes;
  if (min_nodes < 2 || min_nodes > n) fail("min_nodes must be in [2, rows*cols]");
  if (hi < min_nodes || hi > n) fail("max_nodes must be in [min_nodes, rows*cols]");
  reward.validate();
  if (!(success_threshold > 0.0 && success_threshold < 1.0)) {
    fail("success_threshold must be in (0, 1)");
  }
  if (start_difficulty < 1) fail("start_difficulty must be >= 1");
  if (max_steps_base < 0) fail("max_steps_base must be >= 0");
  // The scrambling walk is always undoable within `difficulty` steps.
  if (max_steps_per_difficulty < 1) fail("max_steps_per_difficulty must be >= 1");
  if (stop_difficulty < 0) fail("stop_difficulty must be >= 0");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
  if (threads < 1) fail("threads must be >= 1");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("bad value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParseError("bad boolean '" + value + "' for " + key);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void set_train_option(TrainConfig& cfg, const std::string& key,
                      const std::string& value) {
  auto i = [&] { return parse_number<int>(key, value); };
  auto d = [&] { return parse_number<double>(key, value); };
  if (key == "rows") cfg.rows = i();
  else if (key == "cols") cfg.cols = i();
  else if (key == "hidden") {
    cfg.hidden.clear();
    for (const auto& w : split_list(value)) cfg.hidden.push_back(parse_number<int>(key, w));
    if (cfg.hidden.empty()) throw ParseError("hidden needs at least one width");
  }
  else if (key == "batch_episodes") cfg.batch_episodes = i();
  else if (key == "ppo_epochs") cfg.ppo_epochs = i();
  else if (key == "minibatch_size") cfg.minibatch_size = i();
  else if (key == "clip_epsilon") cfg.clip_epsilon = d();
  else if (key == "gamma") cfg.gamma = d();
  else if (key == "gae_lambda") cfg.gae_lambda = d();
  else if (key == "value_coef") cfg.value_coef = d();
  else if (key == "entropy_coef") cfg.entropy_coef = d();
  else if (key == "learning_rate") cfg.learning_rate = d();
  else if (key == "max_grad_norm") cfg.max_grad_norm = d();
  else if (key == "iterations") cfg.max_iterations = i();
  else if (key == "regime") cfg.regime = parse_regime(value);
  else if (key == "topology") cfg.topologies = split_list(value);
  else if (key == "force_prob") cfg.force_prob = d();
  else if (key == "min_nodes") cfg.min_nodes = i();
  else if (key == "max_nodes") cfg.max_nodes = i();
  else if (key == "success_reward") cfg.reward.success_reward = d();
  else if (key == "step_penalty") cfg.reward.step_penalty = d();
  else if (key == "success_threshold") cfg.success_threshold = d();
  else if (key == "start_difficulty") cfg.start_difficulty = i();
  else if (key == "max_steps_base") cfg.max_steps_base = i();
  else if (key == "max_steps_per_difficulty") cfg.max_steps_per_difficulty = i();
  else if (key == "bootstrap_truncated") cfg.bootstrap_truncated = parse_bool(key, value);
  else if (key == "stop_difficulty") cfg.stop_difficulty = i();
  else if (key == "checkpoint_every") cfg.checkpoint_every = i();
  else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threads") cfg.threads = i();
  else throw ParseError("unknown config key '" + key + "'");
}

TrainConfig read_train_config(std::istream& in, TrainConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_train_option(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ParseError& e) {
      throw ParseError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

TrainConfig read_train_config_file(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return read_train_config(in, std::move(base));
}

void write_train_config(std::ostream& out, const TrainConfig& cfg) {
  std::string hidden;
  for (std::size_t k = 0; k < cfg.hidden.size(); ++k) {
    if (k) hidden += ',';
    hidden += std::to_string(cfg.hidden[k]);
  }
  std::string topologies;
  for (std::size_t k = 0; k < cfg.topologies.size(); ++k) {
    if (k) topologies += ',';
    topologies += cfg.topologies[k];
  }
  out << "rows = " << cfg.rows << '\n'
      << "cols = " << cfg.cols << '\n'
      << "hidden = " << hidden << '\n'
      << "batch_episodes = " << cfg.batch_episodes << '\n'
      << "ppo_epochs = " << cfg.ppo_epochs << '\n'
      << "minibatch_size = " << cfg.minibatch_size << '\n'
      << "clip_epsilon = " << format_double(cfg.clip_epsilon) << '\n'
      << "gamma = " << format_double(cfg.gamma) << '\n'
      << "gae_lambda = " << format_double(cfg.gae_lambda) << '\n'
      << "value_coef = " << format_double(cfg.value_coef) << '\n'
      << "entropy_coef = " << format_double(cfg.entropy_coef) << '\n'
      << "learning_rate = " << format_double(cfg.learning_rate) << '\n'
      << "max_grad_norm = " << format_double(cfg.max_grad_norm) << '\n'
      << "iterations = " << cfg.max_iterations << '\n'
      << "regime = " << to_string(cfg.regime) << '\n'
      << "topology = " << topologies << '\n'
      << "force_prob = " << format_double(cfg.force_prob) << '\n'
      << "min_nodes = " << cfg.min_nodes << '\n'
      << "max_nodes = " << cfg.max_nodes << '\n'
      << "success_reward = " << format_double(cfg.reward.success_reward) << '\n'
      << "step_penalty = " << format_double(cfg.reward.step_penalty) << '\n'
      << "success_threshold = " << format_double(cfg.success_threshold) << '\n'
      << "start_difficulty = " << cfg.start_difficulty << '\n'
      << "max_steps_base = " << cfg.max_steps_base << '\n'
      << "max_steps_per_difficulty = " << cfg.max_steps_per_difficulty << '\n'
      << "bootstrap_truncated = " << (cfg.bootstrap_truncated ? "true" : "false") << '\n'
      << "stop_difficulty = " << cfg.stop_difficulty << '\n'
      << "checkpoint_every = " << cfg.checkpoint_every << '\n'
      << "checkpoint_dir = " << cfg.checkpoint_dir << '\n'
      << "seed = " << cfg.seed << '\n'
      << "threads = " << cfg.threads << '\n';
}

TopologyMask load_topology_spec(const std::string& spec,
                                std::shared_ptr<const Lattice> lattice) {
  if (spec == "full") return TopologyMask::full(lattice);
  for (const auto& preset : builtin_presets()) {
    if (preset.name == spec) return resolve_preset(preset, lattice);
  }
  if (!std::filesystem::exists(spec)) {
    throw InvalidArgument("topology '" + spec +
                          "' is neither a builtin preset nor an existing file");
  }
  const TopologyFile file = read_topology_file(spec);
  return resolve_preset(file.preset, lattice);
}

TopologySource::TopologySource(const TrainConfig& cfg,
                               std::shared_ptr<const Lattice> lattice)
    : regime_(cfg.regime),
      lattice_(std::move(lattice)),
      force_prob_(cfg.force_prob),
      min_nodes_(cfg.min_nodes),
      max_nodes_(cfg.max_nodes == 0 ? lattice_->num_nodes() : cfg.max_nodes) {
  for (const auto& spec : cfg.topologies) {
    TopologyMask m = load_topology_spec(spec, lattice_);
    if (m.num_active_edges() == 0) {
      throw InvalidArgument("topology '" + spec + "' has no edges to train on");
    }
    forced_.push_back(std::move(m));
  }
  if (regime_ != TopologyRegime::Generic && forced_.empty()) {
    throw InvalidArgument("regime " + to_string(regime_) + " needs a topology");
  }
}

TopologyMask TopologySource::next(Rng& rng) const {
  switch (regime_) {
    case TopologyRegime::Fixed:
      return forced_.front();
    case TopologyRegime::ForcedMix:
      // No draw at p = 0 so the stream matches generic training exactly.
      if (force_prob_ > 0.0 && uniform_real(rng) < force_prob_) {
        return forced_[forced_.size() == 1 ? 0 : uniform_index(rng, static_cast<int>(forced_.size()))];
      }
      [[fallthrough]];
    case TopologyRegime::Generic:
      break;
  }
  return sample_connected_mask(lattice_, min_nodes_, max_nodes_, rng);
}

}  // namespace permsynth

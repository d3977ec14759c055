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

#include "permsynth/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "permsynth/baselines.hpp"
#include "permsynth/bench.hpp"
#include "permsynth/errors.hpp"
#include "permsynth/model_io.hpp"
#include "permsynth/synth.hpp"
#include "permsynth/trainer.hpp"

namespace permsynth {
namespace {

namespace fs = std::filesystem;

std::string version_string() {
  std::ostringstream s;
  s << "permsynth " << PERMSYNTH_VERSION << " (model format " << kModelFormatVersion
    << ", observation encoding " << kEncodingVersion << ")";
  return s.str();
}

std::string default_out_dir(const std::string& command) {
  const char* env = std::getenv(kOutDirEnv);
  const fs::path base = env && *env ? fs::path(env) : fs::path("permsynth-out");
  return (base / command).string();
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

// Comment header plus optional train config; a train manifest can be fed
// back through --config.
void write_manifest(const fs::path& path, const std::string& command,
                    const std::vector<std::string>& args,
                    const std::vector<std::pair<std::string, std::string>>& fields,
                    const TrainConfig* cfg) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << "# " << version_string() << '\n'
      << "# command: " << command << '\n'
      << "# argv: " << join(args, " ") << '\n';
  for (const auto& [k, v] : fields) out << "# " << k << ": " << v << '\n';
  if (cfg) write_train_config(out, *cfg);
  if (!out) throw IoError("write failed for " + path.string());
}

void apply_sets(TrainConfig& cfg, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + kv + "'");
    set_train_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
}

// Lattice for commands without a model: explicit --rows/--cols win, then the
// topology file header, then the preset's bounding box.
std::shared_ptr<const Lattice> problem_lattice(const std::string& spec, int rows, int cols) {
  if (rows > 0 || cols > 0) {
    if (rows <= 0 || cols <= 0) throw ParseError("--rows and --cols go together");
    return build_lattice(rows, cols);
  }
  if (spec == "full") throw ParseError("topology 'full' needs --rows and --cols");
  for (const auto& p : builtin_presets()) {
    if (p.name == spec) return build_lattice(p.min_rows(), p.min_cols());
  }
  if (!fs::exists(spec)) {
    throw InvalidArgument("topology '" + spec +
                          "' is neither a builtin preset nor an existing file");
  }
  const TopologyFile file = read_topology_file(spec);
  return build_lattice(file.rows, file.cols);
}

Permutation read_problem_permutation(const std::string& inline_list,
                                     const std::string& file) {
  if (!inline_list.empty() && !file.empty()) {
    throw ParseError("give either --perm or --perm-file, not both");
  }
  if (!inline_list.empty()) return parse_permutation_list(inline_list);
  if (file.empty()) throw ParseError("a permutation is required (--perm or --perm-file)");
  std::ifstream in(file);
  if (!in) throw IoError("cannot open permutation file " + file);
  return read_permutation(in);
}

void check_fits(const Permutation& perm, const TopologyMask& mask) {
  if (perm.size() != mask.lattice().num_nodes()) {
    throw InvalidArgument("permutation has " + std::to_string(perm.size()) +
                          " entries but the lattice has " +
                          std::to_string(mask.lattice().num_nodes()) + " nodes");
  }
  if (!perm.fixes_inactive(mask)) {
    throw InvalidArgument("permutation moves tokens on inactive nodes");
  }
}

void emit_circuit(const SwapCircuit& circuit, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    write_circuit(out, circuit);
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw IoError("cannot write " + path);
  write_circuit(f, circuit);
}

fs::path manifest_beside(const std::string& out_path, const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (!out_path.empty()) return out_path + ".manifest";
  return {};
}

class TrainLogSink {
 public:
  TrainLogSink(const fs::path& path, int progress, std::ostream& err)
      : out_(path), path_(path), progress_(progress), err_(err) {
    if (!out_) throw IoError("cannot write " + path.string());
    write_log_header(out_);
  }
  void operator()(const IterationLog& row, const Trainer&) {
    write_log_line(out_, row);
    out_.flush();
    if (progress_ > 0 && (row.iteration + 1) % progress_ == 0) {
      err_ << "iter " << row.iteration + 1 << "  difficulty " << row.difficulty
           << "  success " << row.success_rate << "  gates " << row.mean_gates << '\n';
    }
  }

 private:
  std::ofstream out_;
  fs::path path_;
  int progress_;
  std::ostream& err_;
};

struct TrainFlags {
  std::string config;
  std::optional<int> rows, cols, iterations, threads;
  std::optional<std::string> regime, hidden;
  std::vector<std::string> topologies;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::string out;
  int progress = 10;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool shape_flags) {
  const TrainConfig d;
  cmd->add_option("--config", f.config, "key = value config file (flags override it)");
  if (shape_flags) {
    cmd->add_option("--rows", f.rows, "lattice rows [" + std::to_string(d.rows) + "]");
    cmd->add_option("--cols", f.cols, "lattice columns [" + std::to_string(d.cols) + "]");
    cmd->add_option("--hidden", f.hidden, "hidden layer widths, comma separated [512,512,512]");
    cmd->add_option("--regime", f.regime, "generic | fixed | forced_mix [generic]");
    cmd->add_option("--topology-file,--topology", f.topologies,
                    "topology preset, 'full' or file for fixed/forced_mix (repeatable)");
  }
  cmd->add_option("--seed", f.seed, "random seed [" + std::to_string(d.seed) + "]");
  cmd->add_option("--iterations", f.iterations,
                  "training iterations [" + std::to_string(d.max_iterations) + "]");
  cmd->add_option("--threads", f.threads, "rollout threads; 1 is the reproducible mode [1]");
  cmd->add_option("--set", f.sets, "override any config key, key=value (repeatable)");
  cmd->add_option("--out", f.out, "output directory [$PERMSYNTH_OUT_DIR/<command>]");
  cmd->add_option("--progress", f.progress, "print progress every N iterations, 0 = quiet")
      ->capture_default_str();
  std::ostringstream defaults;
  write_train_config(defaults, d);
  cmd->footer("Config keys and their defaults:\n" + defaults.str());
}

void apply_train_flags(TrainConfig& cfg, const TrainFlags& f) {
  if (f.rows) cfg.rows = *f.rows;
  if (f.cols) cfg.cols = *f.cols;
  if (f.hidden) set_train_option(cfg, "hidden", *f.hidden);
  if (f.regime) cfg.regime = parse_regime(*f.regime);
  if (!f.topologies.empty()) cfg.topologies = f.topologies;
  if (f.seed) cfg.seed = *f.seed;
  if (f.iterations) cfg.max_iterations = *f.iterations;
  if (f.threads) cfg.threads = *f.threads;
  apply_sets(cfg, f.sets);
}

int finish_training(const std::string& command, const TrainResult& result,
                    const TrainConfig& cfg, const fs::path& dir,
                    const std::vector<std::string>& args,
                    std::vector<std::pair<std::string, std::string>> fields,
                    std::ostream& out) {
  const fs::path model = dir / "model.psn";
  save_model(result.net, result.metadata, model.string());
  fields.emplace_back("seed", std::to_string(cfg.seed));
  fields.emplace_back("model_out", model.string());
  fields.emplace_back("log", (dir / "train_log.csv").string());
  fields.emplace_back("final_difficulty", std::to_string(result.metadata.difficulty));
  fields.emplace_back("iterations_run", std::to_string(result.log.size()));
  write_manifest(dir / "manifest.txt", command, args, fields, &cfg);
  out << "model " << model.string() << "  difficulty " << result.metadata.difficulty
      << "  iterations " << result.log.size() << '\n';
  return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Permutation circuit synthesis with masked reinforcement learning"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.get_formatter()->column_width(36);

  // train
  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "train a model (PPO with curriculum)");
  add_train_flags(train_cmd, tf, true);

  // finetune
  TrainFlags ff;
  std::string ft_model;
  std::vector<std::string> ft_force;
  std::optional<double> ft_prob;
  auto* ft_cmd = app.add_subcommand("finetune", "continue training an existing model");
  ft_cmd->add_option("--model", ft_model, "model to start from")->required();
  ft_cmd->add_option("--force-topology", ft_force,
                     "topology mixed into training (repeatable); none = plain continuation");
  ft_cmd->add_option("--force-prob", ft_prob, "probability of a forced topology [0.25]");
  add_train_flags(ft_cmd, ff, false);

  // shared problem flags
  struct ProblemFlags {
    std::string topology = "full";
    std::string perm, perm_file, out, manifest;
    int rows = 0, cols = 0;
    std::uint64_t seed = 1;
  };
  auto add_problem = [](CLI::App* cmd, ProblemFlags& p, bool lattice_flags) {
    cmd->add_option("--topology", p.topology, "preset name, 'full' or topology file")
        ->capture_default_str();
    cmd->add_option("--perm", p.perm, "permutation as a list of destinations, e.g. 2,1,0");
    cmd->add_option("--perm-file", p.perm_file, "permutation file ('perm v1' format)");
    if (lattice_flags) {
      cmd->add_option("--rows", p.rows, "lattice rows (default: from topology)");
      cmd->add_option("--cols", p.cols, "lattice columns (default: from topology)");
    }
    cmd->add_option("--seed", p.seed, "random seed")->capture_default_str();
    cmd->add_option("--out", p.out, "write the result here instead of stdout");
    cmd->add_option("--manifest", p.manifest, "manifest path [<out>.manifest when --out is set]");
  };

  ProblemFlags sp;
  std::string synth_model, synth_mode = "sampling";
  int synth_attempts = 10, synth_cap = 0;
  auto* synth_cmd = app.add_subcommand("synth", "synthesize a SWAP circuit with a model");
  synth_cmd->add_option("--model", synth_model, "model file")->required();
  add_problem(synth_cmd, sp, false);
  synth_cmd->add_option("--mode", synth_mode, "greedy | sampling")->capture_default_str();
  synth_cmd->add_option("--attempts", synth_attempts, "sampling attempts (greedy uses 1)")
      ->capture_default_str();
  synth_cmd->add_option("--step-cap", synth_cap, "steps per attempt, 0 = 3 * nodes^2")
      ->capture_default_str();

  ProblemFlags tp;
  int ts_trials = 1000;
  auto* ts_cmd = app.add_subcommand("tokenswap", "randomized token-swapping baseline");
  add_problem(ts_cmd, tp, true);
  ts_cmd->add_option("--trials", ts_trials, "independent trials, best kept")
      ->capture_default_str();

  ProblemFlags op;
  bool oracle_witness = false;
  auto* oracle_cmd = app.add_subcommand(
      "oracle", "exact minimum swap count (at most " + std::to_string(kMaxOracleNodes) +
                    " active nodes)");
  add_problem(oracle_cmd, op, true);
  oracle_cmd->add_flag("--witness", oracle_witness, "also print an optimal circuit");

  // bench
  BenchConfig bc;
  std::string bench_generic, bench_methods = "generic,tokenswap", bench_out;
  std::vector<std::string> bench_specific;
  bool bench_no_timing = false;
  auto* bench_cmd = app.add_subcommand("bench", "compare methods over random instances");
  bench_cmd->add_option("--topology", bc.topologies,
                        "topologies to benchmark (repeatable) [all presets]");
  bench_cmd->add_option("--instances", bc.instances, "instances per topology")
      ->capture_default_str();
  bench_cmd->add_option("--methods", bench_methods,
                        "comma list of generic, specific, tokenswap, oracle")
      ->capture_default_str();
  bench_cmd->add_option("--generic-model", bench_generic, "generic model file");
  bench_cmd->add_option("--specific-model", bench_specific,
                        "topology=model file for a specific model (repeatable)");
  bench_cmd->add_option("--attempts", bc.generic_attempts, "generic sampling attempts")
      ->capture_default_str();
  bench_cmd->add_option("--trials", bc.trials, "token-swap trials")->capture_default_str();
  bench_cmd->add_option("--repeats", bc.repeats, "timed repeats per run (median kept)")
      ->capture_default_str();
  bench_cmd->add_flag("--no-timing", bench_no_timing,
                      "run once and record time_ns = 0 (byte-reproducible records)");
  bench_cmd->add_option("--seed", bc.seed, "random seed")->capture_default_str();
  bench_cmd->add_option("--threads", bc.threads, "parallel instances")->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "output directory [$PERMSYNTH_OUT_DIR/bench]");

  // inspect
  std::string inspect_model;
  auto* inspect_cmd = app.add_subcommand("inspect", "print model container details");
  inspect_cmd->add_option("model", inspect_model, "model file")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*train_cmd) {
    TrainConfig cfg = tf.config.empty() ? TrainConfig{} : read_train_config_file(tf.config);
    apply_train_flags(cfg, tf);
    cfg.validate();
    const fs::path dir = tf.out.empty() ? default_out_dir("train") : tf.out;
    fs::create_directories(dir);
    TrainLogSink sink(dir / "train_log.csv", tf.progress, err);
    const TrainResult result = train(cfg, std::ref(sink));
    return finish_training("train", result, cfg, dir, args, {}, out);
  }

  if (*ft_cmd) {
    const LoadedModel base = load_model(ft_model);
    TrainConfig cfg = ff.config.empty() ? TrainConfig{} : read_train_config_file(ff.config);
    apply_train_flags(cfg, ff);
    cfg.rows = base.net.shape().rows;
    cfg.cols = base.net.shape().cols;
    cfg.hidden = base.net.shape().hidden;
    if (!ft_force.empty()) {
      cfg.regime = TopologyRegime::ForcedMix;
      cfg.topologies = ft_force;
    }
    if (ft_prob) cfg.force_prob = *ft_prob;
    cfg.validate();
    const fs::path dir = ff.out.empty() ? default_out_dir("finetune") : ff.out;
    fs::create_directories(dir);
    TrainLogSink sink(dir / "train_log.csv", ff.progress, err);
    const TrainResult result = fine_tune(base.net, base.metadata, cfg, std::ref(sink));
    return finish_training("finetune", result, cfg, dir, args,
                           {{"model_in", ft_model},
                            {"start_difficulty", std::to_string(base.metadata.difficulty)}},
                           out);
  }

  if (*synth_cmd) {
    const LoadedModel model = load_model(synth_model);
    auto lattice = build_lattice(model.net.shape().rows, model.net.shape().cols);
    const TopologyMask mask = load_topology_spec(sp.topology, lattice);
    const Permutation perm = read_problem_permutation(sp.perm, sp.perm_file);
    check_fits(perm, mask);
    SynthesisOptions opts;
    opts.mode = parse_inference_mode(synth_mode);
    opts.attempts = synth_attempts;
    opts.step_cap = synth_cap;
    if (opts.mode == InferenceMode::Greedy && synth_attempts != 1 &&
        synth_cmd->count("--attempts") > 0) {
      err << "warning: greedy mode is deterministic; using 1 attempt instead of "
          << synth_attempts << '\n';
    }
    if (opts.attempts < 1) throw InvalidArgument("--attempts must be >= 1");
    if (opts.step_cap < 0) throw InvalidArgument("--step-cap must be >= 0");
    Rng rng(sp.seed);
    const SynthesisResult r = synthesize(model.net, perm, mask, opts, rng);
    const fs::path manifest = manifest_beside(sp.out, sp.manifest);
    if (!manifest.empty()) {
      write_manifest(manifest, "synth", args,
                     {{"seed", std::to_string(sp.seed)},
                      {"model_in", synth_model},
                      {"topology", sp.topology},
                      {"mode", to_string(opts.mode)},
                      {"attempts", std::to_string(r.attempts_used)},
                      {"result", r.success() ? "success" : "failure"},
                      {"out", sp.out.empty() ? "-" : sp.out}},
                     nullptr);
    }
    if (!r.success()) {
      err << "synthesis failed: no attempt reached the identity within the step cap\n";
      return kExitSynthesis;
    }
    emit_circuit(*r.circuit, sp.out, out);
    return kExitOk;
  }

  if (*ts_cmd || *oracle_cmd) {
    const bool oracle = oracle_cmd->parsed();
    const ProblemFlags& p = oracle ? op : tp;
    auto lattice = problem_lattice(p.topology, p.rows, p.cols);
    const TopologyMask mask = load_topology_spec(p.topology, lattice);
    const Permutation perm = read_problem_permutation(p.perm, p.perm_file);
    check_fits(perm, mask);
    std::vector<std::pair<std::string, std::string>> fields = {
        {"seed", std::to_string(p.seed)}, {"topology", p.topology}};
    std::ostringstream result;
    if (oracle) {
      const OptimalResult r = bfs_optimal(perm, mask);
      result << r.swaps << '\n';
      if (oracle_witness) write_circuit(result, r.witness);
      fields.emplace_back("swaps", std::to_string(r.swaps));
    } else {
      if (ts_trials < 1) throw InvalidArgument("--trials must be >= 1");
      Rng rng(p.seed);
      const SwapCircuit c = token_swap(perm, mask, TokenSwapOptions{ts_trials}, rng);
      write_circuit(result, c);
      fields.emplace_back("trials", std::to_string(ts_trials));
      fields.emplace_back("gates", std::to_string(c.gate_count()));
    }
    if (p.out.empty()) {
      out << result.str();
    } else {
      const fs::path path(p.out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      std::ofstream f(path);
      if (!f) throw IoError("cannot write " + p.out);
      f << result.str();
    }
    const fs::path manifest = manifest_beside(p.out, p.manifest);
    if (!manifest.empty()) {
      write_manifest(manifest, oracle ? "oracle" : "tokenswap", args, fields, nullptr);
    }
    return kExitOk;
  }

  if (*bench_cmd) {
    if (bc.topologies.empty()) {
      for (const auto& preset : builtin_presets()) bc.topologies.push_back(preset.name);
    }
    bc.methods.clear();
    std::istringstream list(bench_methods);
    for (std::string m; std::getline(list, m, ',');) {
      if (!m.empty()) bc.methods.push_back(parse_bench_method(m));
    }
    bc.timing = !bench_no_timing;
    std::optional<LoadedModel> generic;
    std::map<std::string, LoadedModel> specific;
    BenchModels models;
    if (!bench_generic.empty()) {
      generic = load_model(bench_generic);
      models.generic = &generic->net;
    }
    for (const std::string& kv : bench_specific) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ParseError("--specific-model expects topology=path, got '" + kv + "'");
      }
      auto [it, _] = specific.emplace(kv.substr(0, eq), load_model(kv.substr(eq + 1)));
      models.specific[it->first] = &it->second.net;
    }
    const std::vector<BenchRecord> records = run_suite(bc, models);
    // Ratios are taken against the generic model; without it only records are written.
    const bool has_generic =
        std::find(bc.methods.begin(), bc.methods.end(), BenchMethod::Generic) != bc.methods.end();
    const RatioSummary summary = has_generic ? summarize(records) : RatioSummary{};
    if (!has_generic) err << "note: no generic method, summary left empty\n";
    const fs::path dir = bench_out.empty() ? default_out_dir("bench") : bench_out;
    export_results(summary, records, dir.string());
    write_manifest(dir / "manifest.txt", "bench", args,
                   {{"seed", std::to_string(bc.seed)},
                    {"topologies", join(bc.topologies, ",")},
                    {"instances", std::to_string(bc.instances)},
                    {"methods", bench_methods},
                    {"generic_model", bench_generic.empty() ? "-" : bench_generic},
                    {"specific_models", join(bench_specific, ",")},
                    {"timing", bc.timing ? "median of " + std::to_string(bc.repeats) : "off"},
                    {"records", (dir / "records.csv").string()},
                    {"summary", (dir / "summary.csv").string()}},
                   nullptr);
    write_summary(out, summary);
    return kExitOk;
  }

  if (*inspect_cmd) {
    const LoadedModel m = load_model(inspect_model);
    const NetShape& s = m.info.shape;
    std::vector<std::string> widths;
    for (int w : s.hidden) widths.push_back(std::to_string(w));
    out << "file: " << inspect_model << '\n'
        << "file_bytes: " << m.info.byte_size << '\n'
        << "format_version: " << m.info.format_version << '\n'
        << "encoding_version: " << m.info.encoding_version << '\n'
        << "lattice: " << s.rows << "x" << s.cols << '\n'
        << "hidden: " << join(widths, ",") << '\n'
        << "observation_size: " << s.observation_size() << '\n'
        << "actions: " << s.num_actions() << '\n'
        << "parameters: " << m.info.parameter_count << '\n'
        << "parameters_expected: " << s.parameter_count() << '\n'
        << "seed: " << m.metadata.seed << '\n'
        << "difficulty: " << m.metadata.difficulty << '\n'
        << "checksum: " << std::hex << m.info.checksum << std::dec << '\n';
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const ContractViolation& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace permsynth

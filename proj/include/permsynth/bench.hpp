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
#include <map>
#include <string>
#include <vector>

#include "permsynth/lattice.hpp"
#include "permsynth/permenv.hpp"
#include "permsynth/policy.hpp"

namespace permsynth {

enum class BenchMethod { Generic, Specific, TokenSwap, Oracle };

std::string to_string(BenchMethod method);
BenchMethod parse_bench_method(const std::string& text);

struct BenchRecord {
  std::string topology;
  int instance = 0;
  BenchMethod method = BenchMethod::Generic;
  int gates = 0;
  int depth = 0;
  std::int64_t time_ns = 0;
  bool verified = false;  // false marks a failed synthesis
  int attempts = 0;       // synthesis attempts or token-swap trials

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

// One placement of a preset in a lattice: preset node i sits on node_of[i].
struct Embedding {
  std::vector<NodeId> node_of;
  TopologyMask mask;
};

// All distinct placements under the eight grid symmetries and every
// translation that fits. Throws InvalidArgument when none fits.
std::vector<Embedding> embeddings(const TopologyPreset& preset,
                                  std::shared_ptr<const Lattice> lattice);

// Moves a permutation of preset indices onto a placement. Nodes outside the
// placement are fixed points.
Permutation embed_permutation(const std::vector<int>& preset_perm,
                              const Embedding& embedding);

struct BenchInstance {
  int id = 0;
  std::vector<int> perm;  // over preset node indices
};

// Uniformly random permutations of the preset's nodes.
std::vector<BenchInstance> make_instances(const TopologyPreset& preset, int count,
                                          Rng& rng);

struct BenchConfig {
  std::vector<std::string> topologies;  // preset names or topology files
  int instances = 1000;
  std::vector<BenchMethod> methods = {BenchMethod::Generic, BenchMethod::TokenSwap};
  int generic_attempts = 10;
  int trials = 1000;
  // Timed repeats per (instance, method); the median is recorded.
  int repeats = 3;
  // When false each method runs once and time_ns is written as 0, which makes
  // record files byte-reproducible.
  bool timing = true;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct BenchModels {
  const PolicyNet* generic = nullptr;
  // Topology name -> model trained for that topology.
  std::map<std::string, const PolicyNet*> specific;
};

// Resolves a bench topology spec (preset name or file) to a preset.
TopologyPreset load_bench_topology(const std::string& spec);

// Every method sees the same instance set. The generic model gets a random
// placement of the topology per instance inside its lattice and samples
// `generic_attempts` rollouts; specific models run greedily on the preset's
// own placement. Results are independent of `threads`.
std::vector<BenchRecord> run_suite(const BenchConfig& cfg, const BenchModels& models);

struct Histogram {
  static constexpr double kLow = 0.5;
  static constexpr double kHigh = 2.0;
  static constexpr double kWidth = 0.05;
  static constexpr int kBins = 30;
  // [0] below kLow, [1..kBins] regular bins, [kBins + 1] at or above kHigh.
  std::vector<long> counts = std::vector<long>(kBins + 2, 0);

  static int bin_of(double ratio);
  void add(double ratio) { ++counts[bin_of(ratio)]; }
  friend bool operator==(const Histogram&, const Histogram&) = default;
};

// Ratios are method / generic per instance: above 1 the generic model wins.
struct RatioRow {
  std::string topology;
  BenchMethod method = BenchMethod::Generic;
  double frac_lt_095_gates = 0.0;
  double frac_gt_105_gates = 0.0;
  double frac_lt_095_depth = 0.0;
  double frac_gt_105_depth = 0.0;
  double mean_time_ratio = 0.0;  // 0 without timing data
  int failures = 0;
  int compared = 0;
  int excluded = 0;  // identity instances and failed runs on either side
  Histogram gate_hist;
  Histogram depth_hist;

  friend bool operator==(const RatioRow&, const RatioRow&) = default;
};

struct RatioSummary {
  std::vector<RatioRow> rows;  // sorted by topology, then method
  friend bool operator==(const RatioSummary&, const RatioSummary&) = default;
};

// Throws InvalidArgument when a ratioed instance has no generic record.
RatioSummary summarize(const std::vector<BenchRecord>& records);

void write_records(std::ostream& out, const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_records(std::istream& in);
void write_summary(std::ostream& out, const RatioSummary& summary);
void write_histograms(std::ostream& out, const RatioSummary& summary);
// Rebuilds a summary from the summary and histogram files.
RatioSummary read_summary(std::istream& summary, std::istream& histograms);

// Writes records.csv, summary.csv and histograms.csv into `dir`.
void export_results(const RatioSummary& summary,
                    const std::vector<BenchRecord>& records,
                    const std::string& dir);
struct ExportedResults {
  std::vector<BenchRecord> records;
  RatioSummary summary;
};
ExportedResults import_results(const std::string& dir);

}  // namespace permsynth

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

#include <filesystem>
#include <set>
#include <sstream>

#include "permsynth/bench.hpp"
#include "permsynth/errors.hpp"

namespace permsynth {
namespace {

BenchRecord rec(const std::string& topo, int inst, BenchMethod m, int gates, int depth,
                std::int64_t ns = 100, bool ok = true) {
  return {topo, inst, m, gates, depth, ns, ok, 1};
}

TEST(Embeddings, PreserveAdjacency) {
  auto lat = build_lattice(5, 5);
  for (const auto& preset : builtin_presets()) {
    const auto list = embeddings(preset, lat);
    ASSERT_FALSE(list.empty());
    for (const Embedding& e : list) {
      EXPECT_EQ(e.mask.num_active_nodes(), static_cast<int>(preset.nodes.size()));
      for (std::size_t i = 0; i < preset.nodes.size(); ++i) {
        for (std::size_t j = 0; j < preset.nodes.size(); ++j) {
          const Coord a = preset.nodes[i], b = preset.nodes[j];
          const bool adjacent = std::abs(a.row - b.row) + std::abs(a.col - b.col) == 1;
          EXPECT_EQ(lat->edge_index(e.node_of[i], e.node_of[j]).has_value(), adjacent);
        }
      }
    }
  }
}

TEST(Embeddings, CountsForSquareAndLine) {
  // 2x2 square in 3x3: 4 translations x 8 labelings.
  EXPECT_EQ(embeddings(builtin_preset("4qO"), build_lattice(3, 3)).size(), 32u);
  // Exactly one position fits; symmetries still give distinct labelings.
  EXPECT_EQ(embeddings(builtin_preset("8qO"), build_lattice(3, 3)).size(), 8u);
  EXPECT_THROW(embeddings(builtin_preset("12qO"), build_lattice(3, 3)), InvalidArgument);
}

TEST(Embeddings, PermutationTransfers) {
  auto lat = build_lattice(5, 5);
  const auto list = embeddings(builtin_preset("7qL"), lat);
  const std::vector<int> perm = {1, 2, 0, 3, 6, 5, 4};
  for (const Embedding& e : list) {
    const Permutation p = embed_permutation(perm, e);
    EXPECT_TRUE(p.fixes_inactive(e.mask));
    for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(p[e.node_of[i]], e.node_of[perm[i]]);
  }
}

TEST(Summarize, RatioArithmetic) {
  std::vector<BenchRecord> r;
  for (int i = 0; i < 3; ++i) r.push_back(rec("t", i, BenchMethod::Generic, 10, 10, 100));
  r.push_back(rec("t", 0, BenchMethod::TokenSwap, 9, 10, 1000));
  r.push_back(rec("t", 1, BenchMethod::TokenSwap, 10, 10, 1000));
  r.push_back(rec("t", 2, BenchMethod::TokenSwap, 11, 12, 1000));
  const RatioSummary s = summarize(r);
  ASSERT_EQ(s.rows.size(), 2u);
  const RatioRow& ts = s.rows[1];
  EXPECT_EQ(ts.method, BenchMethod::TokenSwap);
  EXPECT_DOUBLE_EQ(ts.frac_lt_095_gates, 1.0 / 3);
  EXPECT_DOUBLE_EQ(ts.frac_gt_105_gates, 1.0 / 3);
  EXPECT_DOUBLE_EQ(ts.frac_lt_095_depth, 0.0);
  EXPECT_DOUBLE_EQ(ts.frac_gt_105_depth, 1.0 / 3);
  EXPECT_DOUBLE_EQ(ts.mean_time_ratio, 10.0);
  const RatioRow& g = s.rows[0];
  EXPECT_EQ(g.frac_lt_095_gates, 0.0);
  EXPECT_EQ(g.frac_gt_105_gates, 0.0);
  EXPECT_DOUBLE_EQ(g.mean_time_ratio, 1.0);
}

TEST(Summarize, ExclusionsAndFailures) {
  std::vector<BenchRecord> r = {
      rec("t", 0, BenchMethod::Generic, 0, 0),   // identity
      rec("t", 1, BenchMethod::Generic, 4, 2),
      rec("t", 2, BenchMethod::Generic, 0, 0, 100, false),
      rec("t", 0, BenchMethod::TokenSwap, 0, 0),
      rec("t", 1, BenchMethod::TokenSwap, 4, 2),
      rec("t", 2, BenchMethod::TokenSwap, 6, 3),
  };
  const RatioSummary s = summarize(r);
  EXPECT_EQ(s.rows[0].failures, 1);
  EXPECT_EQ(s.rows[1].compared, 1);
  EXPECT_EQ(s.rows[1].excluded, 2);
  r.push_back(rec("t", 3, BenchMethod::Oracle, 1, 1));
  EXPECT_THROW(summarize(r), InvalidArgument);
}

TEST(Summarize, OrderInvariant) {
  Rng rng(3);
  std::vector<BenchRecord> r;
  for (int i = 0; i < 40; ++i) {
    for (auto m : {BenchMethod::Generic, BenchMethod::TokenSwap}) {
      r.push_back(rec(i % 2 ? "a" : "b", i, m, 5 + uniform_index(rng, 6), 3 + uniform_index(rng, 3)));
    }
  }
  const RatioSummary s = summarize(r);
  std::shuffle(r.begin(), r.end(), rng);
  EXPECT_EQ(summarize(r), s);
  for (const RatioRow& row : s.rows) {
    long total = 0;
    for (long c : row.gate_hist.counts) total += c;
    EXPECT_EQ(total, row.compared);
  }
}

TEST(Histogram, Bins) {
  EXPECT_EQ(Histogram::bin_of(0.49), 0);
  EXPECT_EQ(Histogram::bin_of(0.5), 1);
  EXPECT_EQ(Histogram::bin_of(0.95), 10);
  EXPECT_EQ(Histogram::bin_of(19.0 / 20.0), 10);
  EXPECT_EQ(Histogram::bin_of(0.9499), 9);
  EXPECT_EQ(Histogram::bin_of(1.0), 11);
  EXPECT_EQ(Histogram::bin_of(1.999), 30);
  EXPECT_EQ(Histogram::bin_of(2.0), 31);
}

TEST(Export, RoundTrip) {
  std::vector<BenchRecord> r;
  for (int i = 0; i < 5; ++i) {
    r.push_back(rec("7qL", i, BenchMethod::Generic, 7 + i, 4, 1234567 + i));
    r.push_back(rec("7qL", i, BenchMethod::TokenSwap, 8 + i % 3, 5, 7654321));
    r.push_back(rec("7qL", i, BenchMethod::Oracle, 6, 4, 99, i != 2));
  }
  const RatioSummary s = summarize(r);
  const auto dir = std::filesystem::temp_directory_path() / "permsynth_bench_export";
  std::filesystem::remove_all(dir);
  export_results(s, r, dir.string());
  const ExportedResults back = import_results(dir.string());
  EXPECT_EQ(back.records, r);
  EXPECT_EQ(back.summary, s);
  EXPECT_EQ(back.summary.rows.size(), 3u);
  std::filesystem::remove_all(dir);
}

TEST(Export, EmptyIsHeaderOnly) {
  std::stringstream s;
  write_records(s, {});
  EXPECT_EQ(s.str(), "topology,instance,method,gates,depth,time_ns,verified,attempts\n");
  EXPECT_TRUE(read_records(s).empty());
}

BenchConfig baseline_config() {
  BenchConfig cfg;
  cfg.topologies = {"4qO", "7qT"};
  cfg.instances = 25;
  cfg.methods = {BenchMethod::TokenSwap, BenchMethod::Oracle};
  cfg.trials = 20;
  cfg.timing = false;
  return cfg;
}

TEST(RunSuite, OracleNeverBeaten) {
  const auto records = run_suite(baseline_config(), {});
  ASSERT_EQ(records.size(), 2u * 25u * 2u);
  for (std::size_t i = 0; i + 1 < records.size(); i += 2) {
    ASSERT_EQ(records[i].instance, records[i + 1].instance);
    EXPECT_TRUE(records[i].verified);
    EXPECT_LE(records[i + 1].gates, records[i].gates);
    EXPECT_EQ(records[i].time_ns, 0);
  }
}

TEST(RunSuite, DeterministicAndThreadIndependent) {
  BenchConfig cfg = baseline_config();
  const auto a = run_suite(cfg, {});
  EXPECT_EQ(run_suite(cfg, {}), a);
  cfg.threads = 3;
  EXPECT_EQ(run_suite(cfg, {}), a);
  cfg.seed = 2;
  EXPECT_NE(run_suite(cfg, {}), a);
}

TEST(RunSuite, GenericAndSpecificModels) {
  BenchConfig cfg;
  cfg.topologies = {"4qO"};
  cfg.instances = 10;
  cfg.methods = {BenchMethod::Generic, BenchMethod::Specific, BenchMethod::TokenSwap};
  cfg.trials = 5;
  cfg.repeats = 2;
  const PolicyNet generic = PolicyNet::initialized({3, 3, {16}}, 1);
  const PolicyNet specific = PolicyNet::initialized({2, 2, {16}}, 2);
  BenchModels models{&generic, {{"4qO", &specific}}};
  const auto records = run_suite(cfg, models);
  EXPECT_EQ(records.size(), 30u);
  for (const auto& r : records) {
    if (r.method == BenchMethod::TokenSwap) {
      EXPECT_TRUE(r.verified);
    }
    EXPECT_GT(r.time_ns, 0);
  }
  EXPECT_NO_THROW(summarize(records));
}

TEST(RunSuite, ConfigErrors) {
  BenchConfig cfg = baseline_config();
  cfg.methods = {BenchMethod::Generic};
  EXPECT_THROW(run_suite(cfg, {}), InvalidArgument);
  cfg.methods = {BenchMethod::Oracle};
  cfg.topologies = {"12qO"};
  EXPECT_THROW(run_suite(cfg, {}), CapacityError);
  cfg = baseline_config();
  cfg.instances = 0;
  EXPECT_TRUE(run_suite(cfg, {}).empty());
}

}  // namespace
}  // namespace permsynth

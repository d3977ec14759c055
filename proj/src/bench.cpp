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

#include "permsynth/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "permsynth/baselines.hpp"
#include "permsynth/errors.hpp"
#include "permsynth/synth.hpp"

namespace permsynth {

std::string to_string(BenchMethod method) {
  switch (method) {
    case BenchMethod::Generic: return "generic";
    case BenchMethod::Specific: return "specific";
    case BenchMethod::TokenSwap: return "tokenswap";
    case BenchMethod::Oracle: return "oracle";
  }
  return "?";
}

BenchMethod parse_bench_method(const std::string& text) {
  if (text == "generic") return BenchMethod::Generic;
  if (text == "specific") return BenchMethod::Specific;
  if (text == "tokenswap") return BenchMethod::TokenSwap;
  if (text == "oracle") return BenchMethod::Oracle;
  throw ParseError("unknown bench method '" + text + "'");
}

namespace {

Coord transform(Coord c, int g) {
  int r = c.row, k = c.col;
  if (g & 4) std::swap(r, k);
  if (g & 1) r = -r;
  if (g & 2) k = -k;
  return {r, k};
}

}  // namespace

std::vector<Embedding> embeddings(const TopologyPreset& preset,
                                  std::shared_ptr<const Lattice> lattice) {
  std::vector<Embedding> out;
  std::set<std::vector<NodeId>> seen;
  for (int g = 0; g < 8; ++g) {
    TopologyPreset moved{preset.name, {}, {}};
    for (const Coord& c : preset.nodes) moved.nodes.push_back(transform(c, g));
    for (const auto& [a, b] : preset.edges) {
      moved.edges.emplace_back(transform(a, g), transform(b, g));
    }
    int r0 = 0, c0 = 0;
    if (!moved.nodes.empty()) {
      r0 = moved.nodes[0].row;
      c0 = moved.nodes[0].col;
    }
    for (const Coord& c : moved.nodes) {
      r0 = std::min(r0, c.row);
      c0 = std::min(c0, c.col);
    }
    auto shift = [](Coord c, int dr, int dc) { return Coord{c.row + dr, c.col + dc}; };
    for (Coord& c : moved.nodes) c = shift(c, -r0, -c0);
    for (auto& [a, b] : moved.edges) {
      a = shift(a, -r0, -c0);
      b = shift(b, -r0, -c0);
    }
    const int h = moved.min_rows(), w = moved.min_cols();
    for (int dr = 0; dr + h <= lattice->rows(); ++dr) {
      for (int dc = 0; dc + w <= lattice->cols(); ++dc) {
        TopologyPreset placed{preset.name, {}, {}};
        std::vector<NodeId> node_of;
        for (const Coord& c : moved.nodes) {
          placed.nodes.push_back(shift(c, dr, dc));
          node_of.push_back(lattice->node(c.row + dr, c.col + dc));
        }
        if (!seen.insert(node_of).second) continue;
        for (const auto& [a, b] : moved.edges) {
          placed.edges.emplace_back(shift(a, dr, dc), shift(b, dr, dc));
        }
        out.push_back({std::move(node_of), resolve_preset(placed, lattice)});
      }
    }
  }
  if (out.empty()) {
    throw InvalidArgument("topology '" + preset.name + "' does not fit a " +
                          std::to_string(lattice->rows()) + "x" +
                          std::to_string(lattice->cols()) + " lattice");
  }
  return out;
}

Permutation embed_permutation(const std::vector<int>& preset_perm,
                              const Embedding& embedding) {
  if (preset_perm.size() != embedding.node_of.size()) {
    throw InvalidArgument("permutation size does not match the topology");
  }
  std::vector<NodeId> dest(embedding.mask.lattice().num_nodes());
  for (std::size_t v = 0; v < dest.size(); ++v) dest[v] = static_cast<NodeId>(v);
  for (std::size_t i = 0; i < preset_perm.size(); ++i) {
    dest[embedding.node_of[i]] = embedding.node_of[preset_perm[i]];
  }
  return Permutation(std::move(dest));
}

std::vector<BenchInstance> make_instances(const TopologyPreset& preset, int count,
                                          Rng& rng) {
  std::vector<BenchInstance> out;
  const int k = static_cast<int>(preset.nodes.size());
  for (int i = 0; i < count; ++i) {
    BenchInstance inst{i, std::vector<int>(k)};
    for (int j = 0; j < k; ++j) inst.perm[j] = j;
    std::shuffle(inst.perm.begin(), inst.perm.end(), rng);
    out.push_back(std::move(inst));
  }
  return out;
}

void BenchConfig::validate() const {
  if (topologies.empty()) throw InvalidArgument("bench needs at least one topology");
  if (instances < 0) throw InvalidArgument("instances must be >= 0");
  if (methods.empty()) throw InvalidArgument("bench needs at least one method");
  if (generic_attempts < 1) throw InvalidArgument("attempts must be >= 1");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (repeats < 1) throw InvalidArgument("repeats must be >= 1");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

TopologyPreset load_bench_topology(const std::string& spec) {
  for (const auto& p : builtin_presets()) {
    if (p.name == spec) return p;
  }
  if (!std::filesystem::exists(spec)) {
    throw InvalidArgument("topology '" + spec +
                          "' is neither a builtin preset nor an existing file");
  }
  TopologyPreset p = read_topology_file(spec).preset;
  if (p.name.empty()) p.name = std::filesystem::path(spec).stem().string();
  return p;
}

namespace {

struct Outcome {
  std::optional<SwapCircuit> circuit;
  int attempts = 0;
};

struct MethodSetup {
  BenchMethod method;
  const PolicyNet* net = nullptr;
  std::vector<Embedding> placements;  // generic: all; others: one
};

Outcome run_method(const MethodSetup& m, const Permutation& perm,
                   const TopologyMask& mask, const BenchConfig& cfg, Rng& rng) {
  switch (m.method) {
    case BenchMethod::Generic:
    case BenchMethod::Specific: {
      SynthesisOptions opts;
      if (m.method == BenchMethod::Generic) {
        opts.mode = InferenceMode::Sampling;
        opts.attempts = cfg.generic_attempts;
      } else {
        opts.mode = InferenceMode::Greedy;
        opts.attempts = 1;
      }
      SynthesisResult r = synthesize(*m.net, perm, mask, opts, rng);
      return {std::move(r.circuit), r.attempts_used};
    }
    case BenchMethod::TokenSwap:
      return {token_swap(perm, mask, TokenSwapOptions{cfg.trials}, rng), cfg.trials};
    case BenchMethod::Oracle:
      return {bfs_optimal(perm, mask).witness, 1};
  }
  throw ContractViolation("unhandled bench method");
}

}  // namespace

std::vector<BenchRecord> run_suite(const BenchConfig& cfg, const BenchModels& models) {
  cfg.validate();
  std::vector<BenchRecord> records;
  for (std::size_t ti = 0; ti < cfg.topologies.size(); ++ti) {
    const TopologyPreset preset = load_bench_topology(cfg.topologies[ti]);
    if (preset.name.find(',') != std::string::npos) {
      throw InvalidArgument("topology names may not contain commas");
    }
    if (preset.nodes.size() < 2) {
      throw InvalidArgument("topology '" + preset.name + "' needs at least two nodes");
    }
    auto own = build_lattice(preset.min_rows(), preset.min_cols());

    std::vector<MethodSetup> setups;
    for (BenchMethod method : cfg.methods) {
      MethodSetup s{method, nullptr, {}};
      switch (method) {
        case BenchMethod::Generic:
          if (!models.generic) throw InvalidArgument("bench: generic model missing");
          s.net = models.generic;
          s.placements = embeddings(
              preset, build_lattice(s.net->shape().rows, s.net->shape().cols));
          break;
        case BenchMethod::Specific: {
          auto it = models.specific.find(preset.name);
          if (it == models.specific.end() || !it->second) {
            throw InvalidArgument("bench: no specific model for '" + preset.name + "'");
          }
          s.net = it->second;
          // The first placement is the preset's own orientation when it fits.
          s.placements = {embeddings(
              preset, build_lattice(s.net->shape().rows, s.net->shape().cols)).front()};
          break;
        }
        case BenchMethod::Oracle:
          if (static_cast<int>(preset.nodes.size()) > kMaxOracleNodes) {
            throw CapacityError("oracle supports at most " +
                                std::to_string(kMaxOracleNodes) + " nodes, '" +
                                preset.name + "' has " +
                                std::to_string(preset.nodes.size()));
          }
          [[fallthrough]];
        case BenchMethod::TokenSwap:
          s.placements = {embeddings(preset, own).front()};
          break;
      }
      setups.push_back(std::move(s));
    }

    const std::uint64_t topo_seed = derive_seed(cfg.seed, ti + 1);
    Rng inst_rng(derive_seed(topo_seed, 0));
    const std::vector<BenchInstance> instances =
        make_instances(preset, cfg.instances, inst_rng);

    std::vector<std::vector<BenchRecord>> per_instance(instances.size());
    auto evaluate = [&](std::size_t idx) {
      const BenchInstance& inst = instances[idx];
      const std::uint64_t inst_seed = derive_seed(topo_seed, 2 * idx + 1);
      for (const MethodSetup& s : setups) {
        const Embedding* place = &s.placements.front();
        if (s.placements.size() > 1) {
          Rng pick(derive_seed(inst_seed, 0));
          place = &s.placements[uniform_index(pick, static_cast<int>(s.placements.size()))];
        }
        const Permutation perm = embed_permutation(inst.perm, *place);
        const std::uint64_t method_seed =
            derive_seed(inst_seed, 1 + static_cast<std::uint64_t>(s.method));
        const int runs = cfg.timing ? cfg.repeats : 1;
        std::vector<std::int64_t> times;
        Outcome out;
        for (int rep = 0; rep < runs; ++rep) {
          Rng rng(method_seed);
          const auto t0 = std::chrono::steady_clock::now();
          out = run_method(s, perm, place->mask, cfg, rng);
          const auto t1 = std::chrono::steady_clock::now();
          times.push_back(
              std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
        }
        std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());

        BenchRecord rec;
        rec.topology = preset.name;
        rec.instance = inst.id;
        rec.method = s.method;
        rec.attempts = out.attempts;
        rec.time_ns = cfg.timing ? times[times.size() / 2] : 0;
        if (out.circuit) {
          if (!verify(*out.circuit)) {
            throw ContractViolation("bench: " + to_string(s.method) +
                                    " produced an unverifiable circuit on " +
                                    preset.name + " instance " +
                                    std::to_string(inst.id));
          }
          rec.verified = true;
          rec.gates = out.circuit->gate_count();
          rec.depth = out.circuit->depth();
        }
        per_instance[idx].push_back(std::move(rec));
      }
    };

    const int workers = std::min<int>(cfg.threads, static_cast<int>(instances.size()));
    if (workers <= 1) {
      for (std::size_t i = 0; i < instances.size(); ++i) evaluate(i);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::exception_ptr> errors(workers);
      {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            try {
              for (std::size_t i; (i = next.fetch_add(1)) < instances.size();) evaluate(i);
            } catch (...) {
              errors[w] = std::current_exception();
              next = instances.size();
            }
          });
        }
      }
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (auto& recs : per_instance) {
      for (auto& r : recs) records.push_back(std::move(r));
    }
  }
  return records;
}

int Histogram::bin_of(double ratio) {
  if (ratio < kLow) return 0;
  if (ratio >= kHigh) return kBins + 1;
  // The small nudge keeps ratios sitting exactly on a bin edge in the upper bin.
  const int b = static_cast<int>((ratio - kLow) / kWidth + 1e-9);
  return 1 + std::min(b, kBins - 1);
}

RatioSummary summarize(const std::vector<BenchRecord>& records) {
  using Key = std::tuple<std::string, BenchMethod, int>;
  std::map<Key, const BenchRecord*> index;
  std::map<std::pair<std::string, BenchMethod>, std::vector<const BenchRecord*>> groups;
  for (const BenchRecord& r : records) {
    if (!index.emplace(Key{r.topology, r.method, r.instance}, &r).second) {
      throw InvalidArgument("duplicate bench record for " + r.topology + " instance " +
                            std::to_string(r.instance) + " (" + to_string(r.method) + ")");
    }
    groups[{r.topology, r.method}].push_back(&r);
  }

  RatioSummary summary;
  for (auto& [key, recs] : groups) {
    std::sort(recs.begin(), recs.end(), [](const BenchRecord* a, const BenchRecord* b) {
      return a->instance < b->instance;
    });
    RatioRow row;
    row.topology = key.first;
    row.method = key.second;
    int lt_g = 0, gt_g = 0, lt_d = 0, gt_d = 0, timed = 0;
    double time_sum = 0.0;
    for (const BenchRecord* r : recs) {
      if (!r->verified) ++row.failures;
      auto it = index.find(Key{r->topology, BenchMethod::Generic, r->instance});
      if (it == index.end()) {
        throw InvalidArgument("no generic record for " + r->topology + " instance " +
                              std::to_string(r->instance));
      }
      const BenchRecord& g = *it->second;
      if (!r->verified || !g.verified || g.gates == 0) {
        ++row.excluded;
        continue;
      }
      ++row.compared;
      const double gr = static_cast<double>(r->gates) / g.gates;
      const double dr = static_cast<double>(r->depth) / g.depth;
      lt_g += gr < 0.95;
      gt_g += gr > 1.05;
      lt_d += dr < 0.95;
      gt_d += dr > 1.05;
      row.gate_hist.add(gr);
      row.depth_hist.add(dr);
      if (g.time_ns > 0) {
        time_sum += static_cast<double>(r->time_ns) / static_cast<double>(g.time_ns);
        ++timed;
      }
    }
    if (row.compared > 0) {
      const double n = row.compared;
      row.frac_lt_095_gates = lt_g / n;
      row.frac_gt_105_gates = gt_g / n;
      row.frac_lt_095_depth = lt_d / n;
      row.frac_gt_105_depth = gt_d / n;
    }
    row.mean_time_ratio = timed ? time_sum / timed : 0.0;
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T num(const std::string& s, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(std::string("bad ") + what + " value '" + s + "'");
  }
  return v;
}

// Reads data rows, skipping '#' comments and checking the header.
template <typename F>
void read_csv(std::istream& in, const std::string& header, std::size_t columns,
              const char* what, F&& on_row) {
  std::string line;
  bool have_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      if (line != header) throw ParseError(std::string(what) + ": unexpected header");
      have_header = true;
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != columns) {
      throw ParseError(std::string(what) + " line " + std::to_string(lineno) +
                       ": expected " + std::to_string(columns) + " columns");
    }
    on_row(cells);
  }
  if (!have_header) throw ParseError(std::string(what) + ": missing header");
}

const char* kRecordsHeader = "topology,instance,method,gates,depth,time_ns,verified,attempts";
const char* kSummaryHeader =
    "topology,method,frac_lt_095_gates,frac_gt_105_gates,frac_lt_095_depth,"
    "frac_gt_105_depth,mean_time_ratio,failures,compared,excluded";
const char* kHistogramHeader = "topology,method,metric,bin,lower,upper,count";

}  // namespace

void write_records(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << kRecordsHeader << '\n';
  for (const BenchRecord& r : records) {
    out << r.topology << ',' << r.instance << ',' << to_string(r.method) << ','
        << r.gates << ',' << r.depth << ',' << r.time_ns << ','
        << (r.verified ? 1 : 0) << ',' << r.attempts << '\n';
  }
}

std::vector<BenchRecord> read_records(std::istream& in) {
  std::vector<BenchRecord> out;
  read_csv(in, kRecordsHeader, 8, "records", [&](const std::vector<std::string>& c) {
    BenchRecord r;
    r.topology = c[0];
    r.instance = num<int>(c[1], "instance");
    r.method = parse_bench_method(c[2]);
    r.gates = num<int>(c[3], "gates");
    r.depth = num<int>(c[4], "depth");
    r.time_ns = num<std::int64_t>(c[5], "time_ns");
    r.verified = num<int>(c[6], "verified") != 0;
    r.attempts = num<int>(c[7], "attempts");
    out.push_back(std::move(r));
  });
  return out;
}

void write_summary(std::ostream& out, const RatioSummary& summary) {
  out << "# ratio = method / generic per instance; above 1 the generic model wins\n"
      << kSummaryHeader << '\n';
  for (const RatioRow& r : summary.rows) {
    out << r.topology << ',' << to_string(r.method) << ',' << fmt(r.frac_lt_095_gates)
        << ',' << fmt(r.frac_gt_105_gates) << ',' << fmt(r.frac_lt_095_depth) << ','
        << fmt(r.frac_gt_105_depth) << ',' << fmt(r.mean_time_ratio) << ','
        << r.failures << ',' << r.compared << ',' << r.excluded << '\n';
  }
}

void write_histograms(std::ostream& out, const RatioSummary& summary) {
  out << "# ratio = method / generic per instance; bins are [lower, upper)\n"
      << kHistogramHeader << '\n';
  auto bounds = [](int b) -> std::pair<std::string, std::string> {
    if (b == 0) return {"-inf", fmt(Histogram::kLow)};
    if (b == Histogram::kBins + 1) return {fmt(Histogram::kHigh), "inf"};
    // Edges are printed rounded so they read 0.95 rather than 0.9500000000000001.
    const double lo = std::round((Histogram::kLow + (b - 1) * Histogram::kWidth) * 100) / 100;
    return {fmt(lo), fmt(std::round((lo + Histogram::kWidth) * 100) / 100)};
  };
  for (const RatioRow& r : summary.rows) {
    for (const auto* metric : {"gates", "depth"}) {
      const Histogram& h = metric[0] == 'g' ? r.gate_hist : r.depth_hist;
      for (int b = 0; b < static_cast<int>(h.counts.size()); ++b) {
        const auto [lo, hi] = bounds(b);
        out << r.topology << ',' << to_string(r.method) << ',' << metric << ',' << b
            << ',' << lo << ',' << hi << ',' << h.counts[b] << '\n';
      }
    }
  }
}

RatioSummary read_summary(std::istream& summary, std::istream& histograms) {
  RatioSummary out;
  std::map<std::pair<std::string, BenchMethod>, std::size_t> where;
  read_csv(summary, kSummaryHeader, 10, "summary", [&](const std::vector<std::string>& c) {
    RatioRow r;
    r.topology = c[0];
    r.method = parse_bench_method(c[1]);
    r.frac_lt_095_gates = num<double>(c[2], "fraction");
    r.frac_gt_105_gates = num<double>(c[3], "fraction");
    r.frac_lt_095_depth = num<double>(c[4], "fraction");
    r.frac_gt_105_depth = num<double>(c[5], "fraction");
    r.mean_time_ratio = num<double>(c[6], "time ratio");
    r.failures = num<int>(c[7], "failures");
    r.compared = num<int>(c[8], "compared");
    r.excluded = num<int>(c[9], "excluded");
    where[{r.topology, r.method}] = out.rows.size();
    out.rows.push_back(std::move(r));
  });
  read_csv(histograms, kHistogramHeader, 7, "histograms",
           [&](const std::vector<std::string>& c) {
             auto it = where.find({c[0], parse_bench_method(c[1])});
             if (it == where.end()) {
               throw ParseError("histogram row for unknown pair " + c[0] + "/" + c[1]);
             }
             RatioRow& r = out.rows[it->second];
             Histogram* h = c[2] == "gates"   ? &r.gate_hist
                            : c[2] == "depth" ? &r.depth_hist
                                              : nullptr;
             if (!h) throw ParseError("unknown histogram metric '" + c[2] + "'");
             const int b = num<int>(c[3], "bin");
             if (b < 0 || b >= static_cast<int>(h->counts.size())) {
               throw ParseError("histogram bin out of range");
             }
             h->counts[b] = num<long>(c[6], "count");
           });
  return out;
}

namespace {

void write_file(const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::ifstream open_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

void export_results(const RatioSummary& summary,
                    const std::vector<BenchRecord>& records, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  write_file(base / "records.csv", [&](std::ostream& o) { write_records(o, records); });
  write_file(base / "summary.csv", [&](std::ostream& o) { write_summary(o, summary); });
  write_file(base / "histograms.csv",
             [&](std::ostream& o) { write_histograms(o, summary); });
}

ExportedResults import_results(const std::string& dir) {
  const std::filesystem::path base(dir);
  ExportedResults out;
  auto records = open_file(base / "records.csv");
  out.records = read_records(records);
  auto summary = open_file(base / "summary.csv");
  auto histograms = open_file(base / "histograms.csv");
  out.summary = read_summary(summary, histograms);
  return out;
}

}  // namespace permsynth

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

#include <fstream>
#include <set>
#include <sstream>

#include "permsynth/errors.hpp"
#include "permsynth/lattice.hpp"

namespace permsynth {

namespace {

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

[[noreturn]] void fail(int lineno, const std::string& what) {
  throw ParseError("topology line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

TopologyFile read_topology(std::istream& in, const std::string& name) {
  TopologyFile topo;
  topo.preset.name = name;
  bool have_header = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(strip_comment(line));
    std::string tag;
    if (!(fields >> tag)) continue;
    if (!have_header) {
      std::string version;
      if (tag != "topology" || !(fields >> version >> topo.rows >> topo.cols)) {
        fail(lineno, "expected 'topology v1 <rows> <cols>'");
      }
      if (version != "v1") fail(lineno, "unsupported version '" + version + "'");
      if (topo.rows < 1 || topo.cols < 1) fail(lineno, "bad lattice size");
      have_header = true;
    } else if (tag == "n") {
      Coord c;
      if (!(fields >> c.row >> c.col)) fail(lineno, "expected 'n <row> <col>'");
      topo.preset.nodes.push_back(c);
    } else if (tag == "e") {
      Coord p, q;
      if (!(fields >> p.row >> p.col >> q.row >> q.col)) {
        fail(lineno, "expected 'e <row1> <col1> <row2> <col2>'");
      }
      topo.preset.edges.emplace_back(p, q);
    } else {
      fail(lineno, "unknown record '" + tag + "'");
    }
    std::string extra;
    if (fields >> extra) fail(lineno, "trailing field '" + extra + "'");
  }
  if (!have_header) throw ParseError("topology: missing header");
  std::set<Coord> seen;
  for (const Coord& c : topo.preset.nodes) {
    if (c.row < 0 || c.col < 0 || c.row >= topo.rows || c.col >= topo.cols) {
      throw ParseError("topology: node (" + std::to_string(c.row) + "," +
                       std::to_string(c.col) + ") outside declared lattice");
    }
    if (!seen.insert(c).second) {
      throw ParseError("topology: duplicate node (" + std::to_string(c.row) +
                       "," + std::to_string(c.col) + ")");
    }
  }
  for (const auto& [p, q] : topo.preset.edges) {
    if (!seen.contains(p) || !seen.contains(q)) {
      throw ParseError("topology: edge endpoint is not a declared node");
    }
  }
  return topo;
}

TopologyFile read_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open topology file '" + path + "'");
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) {
    name = name.substr(slash + 1);
  }
  if (const auto dot = name.find_last_of('.'); dot != std::string::npos) {
    name = name.substr(0, dot);
  }
  return read_topology(in, name);
}

void write_topology(std::ostream& out, const TopologyFile& topo) {
  if (!topo.preset.name.empty()) out << "# " << topo.preset.name << '\n';
  out << "topology v1 " << topo.rows << ' ' << topo.cols << '\n';
  for (const Coord& c : topo.preset.nodes) {
    out << "n " << c.row << ' ' << c.col << '\n';
  }
  for (const auto& [p, q] : topo.preset.edges) {
    out << "e " << p.row << ' ' << p.col << ' ' << q.row << ' ' << q.col
        << '\n';
  }
}

TopologyFile topology_from_mask(const TopologyMask& mask,
                                const std::string& name) {
  const Lattice& lat = mask.lattice();
  TopologyFile topo{lat.rows(), lat.cols(), {name, {}, {}}};
  for (NodeId v : mask.active_nodes()) topo.preset.nodes.push_back(lat.coord(v));
  bool induced = true;
  for (int e = 0; e < lat.num_edges(); ++e) {
    const Edge& edge = lat.edge(e);
    const bool both = mask.node_active(edge.a) && mask.node_active(edge.b);
    if (both != mask.edge_active(e)) induced = false;
  }
  // A single active node has no edges either way; induced covers it.
  if (!induced) {
    for (int e : mask.active_edges()) {
      const Edge& edge = lat.edge(e);
      topo.preset.edges.emplace_back(lat.coord(edge.a), lat.coord(edge.b));
    }
  }
  return topo;
}

}  // namespace permsynth

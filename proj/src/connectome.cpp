#include "fkneuro/connectome.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "fkneuro/errors.hpp"
#include "fkneuro/numfmt.hpp"
#include "fkneuro/mesh.hpp"

namespace fkneuro {

Connectome::Connectome(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges, double scale,
                       bool require_connected)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), scale_(scale) {
  const std::size_t m = nodes_.size();
  if (m == 0) throw ValidationError("connectome has no nodes");
  if (!(scale_ > 0.0)) throw ValidationError("connectome scale k must be positive");

  std::set<int> seen;
  for (const GraphNode& n : nodes_) {
    if (!seen.insert(n.region).second) throw ValidationError("duplicate node region id " + std::to_string(n.region));
    if (!(n.volume > 0.0)) throw ValidationError("node " + std::to_string(n.region) + " has non-positive volume");
  }

  std::vector<Eigen::Triplet<double>> triplets;
  for (const GraphEdge& e : edges_) {
    if (e.i >= m || e.j >= m) throw ValidationError("edge endpoint out of range");
    if (e.i == e.j) throw TopologyError("self-edge on node " + std::to_string(nodes_[e.i].region));
    if (!(e.tract_length > 0.0)) {
      throw ValidationError("edge " + std::to_string(nodes_[e.i].region) + "-" + std::to_string(nodes_[e.j].region) +
                            ": tract length must be positive");
    }
    if (e.tract_count < 0.0) throw ValidationError("negative tract count");
    const double w = scale_ * e.tract_count / e.tract_length;
    triplets.emplace_back(static_cast<int>(e.i), static_cast<int>(e.j), w);
    triplets.emplace_back(static_cast<int>(e.j), static_cast<int>(e.i), w);
  }
  weights_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  weights_.setFromTriplets(triplets.begin(), triplets.end());

  // Connected components over edges with positive weight.
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index r = 0; r < weights_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(weights_, r); it; ++it) {
      if (it.value() > 0.0) parent[find(static_cast<std::size_t>(r))] = find(static_cast<std::size_t>(it.col()));
    }
  }
  std::map<std::size_t, std::vector<int>> components;
  for (std::size_t i = 0; i < m; ++i) components[find(i)].push_back(nodes_[i].region);
  if (require_connected && components.size() > 1) {
    std::string msg = "connectome is disconnected; components:";
    for (const auto& [root, regions] : components) {
      msg += " {";
      for (std::size_t k = 0; k < regions.size(); ++k) msg += (k ? "," : "") + std::to_string(regions[k]);
      msg += "}";
    }
    throw TopologyError(msg);
  }

  std::vector<Eigen::Triplet<double>> lap;
  for (Eigen::Index r = 0; r < weights_.outerSize(); ++r) {
    double degree = 0.0;
    for (SparseMatrix::InnerIterator it(weights_, r); it; ++it) {
      degree += it.value();
      lap.emplace_back(static_cast<int>(r), static_cast<int>(it.col()), -it.value());
    }
    lap.emplace_back(static_cast<int>(r), static_cast<int>(r), degree);
  }
  laplacian_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  laplacian_.setFromTriplets(lap.begin(), lap.end());
}

double Connectome::weight(std::size_t i, std::size_t j) const {
  return weights_.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

std::optional<std::size_t> Connectome::node_of_region(int region) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].region == region) return i;
  }
  return std::nullopt;
}

std::set<int> Connectome::region_ids() const {
  std::set<int> ids;
  for (const GraphNode& n : nodes_) ids.insert(n.region);
  return ids;
}

double Connectome::total_volume() const {
  double v = 0.0;
  for (const GraphNode& n : nodes_) v += n.volume;
  return v;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

double number(const std::string& t, const std::string& source, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError(source, line, "invalid number '" + t + "'");
}

}  // namespace

Connectome parse_connectome(const std::string& text, const std::string& source, std::optional<double> scale_override) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::optional<double> scale;
  bool header_seen = false;

  struct RawEdge {
    int a, b;
    double n, l;
    std::size_t line;
  };
  std::vector<GraphNode> nodes;
  std::vector<RawEdge> raw_edges;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.rfind('#', 0) == 0) {
      const auto pos = line.find("FKGRAPH");
      if (pos != std::string::npos) {
        auto fields = split_csv(line.substr(pos + 7));
        if (fields.empty() || fields[0] != "1") throw ParseError(source, line_no, "unsupported FKGRAPH version");
        for (std::size_t f = 1; f < fields.size(); ++f) {
          if (fields[f].rfind("k=", 0) == 0) scale = number(fields[f].substr(2), source, line_no);
        }
        header_seen = true;
      }
      continue;
    }
    if (!header_seen) throw ParseError(source, line_no, "missing '# FKGRAPH 1, k=<float>' header");
    const auto f = split_csv(line);
    if (f[0] == "node") {
      if (f.size() != 6) throw ParseError(source, line_no, "node record needs 6 fields");
      if (f[1] == "region_id") continue;
      GraphNode n;
      n.region = static_cast<int>(number(f[1], source, line_no));
      for (int a = 0; a < 3; ++a) n.position[a] = number(f[2 + a], source, line_no);
      n.volume = number(f[5], source, line_no);
      nodes.push_back(n);
    } else if (f[0] == "edge") {
      if (f.size() != 5) throw ParseError(source, line_no, "edge record needs 5 fields");
      if (f[1] == "i") continue;
      const double l = number(f[4], source, line_no);
      if (!(l > 0.0)) throw ParseError(source, line_no, "tract length l_ij must be positive");
      raw_edges.push_back({static_cast<int>(number(f[1], source, line_no)),
                           static_cast<int>(number(f[2], source, line_no)), number(f[3], source, line_no), l,
                           line_no});
    } else {
      throw ParseError(source, line_no, "unknown record type '" + f[0] + "'");
    }
  }
  if (!header_seen) throw ParseError(source, line_no, "missing '# FKGRAPH 1, k=<float>' header");

  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i].region] = i;
  std::vector<GraphEdge> edges;
  for (const RawEdge& r : raw_edges) {
    auto ia = index.find(r.a);
    auto ib = index.find(r.b);
    if (ia == index.end() || ib == index.end()) throw ParseError(source, r.line, "edge references unknown node");
    edges.push_back({ia->second, ib->second, r.n, r.l});
  }
  return Connectome(std::move(nodes), std::move(edges), scale_override.value_or(scale.value_or(1.0)));
}

Connectome load_connectome(const std::filesystem::path& path, std::optional<double> scale_override) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open connectome file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_connectome(ss.str(), path.string(), scale_override);
}

std::string format_connectome(const Connectome& graph) {
  std::ostringstream out;
  out << "# FKGRAPH 1, k=" << fmt17(graph.scale()) << "\n";
  out << "node,region_id,x,y,z,volume\n";
  for (const GraphNode& n : graph.nodes()) {
    out << "node," << n.region << "," << fmt17(n.position[0]) << "," << fmt17(n.position[1]) << ","
        << fmt17(n.position[2]) << "," << fmt17(n.volume) << "\n";
  }
  out << "edge,i,j,n_ij,l_ij\n";
  for (const GraphEdge& e : graph.edges()) {
    out << "edge," << graph.nodes()[e.i].region << "," << graph.nodes()[e.j].region << "," << fmt17(e.tract_count)
        << "," << fmt17(e.tract_length) << "\n";
  }
  return out.str();
}

void write_connectome(const Connectome& graph, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write connectome file " + path.string());
  f << format_connectome(graph);
}

Connectome make_chain_graph(const std::vector<int>& regions, double tract_count, double tract_length, double scale) {
  std::vector<GraphNode> nodes;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    nodes.push_back({regions[i], {static_cast<double>(i) * tract_length, 0.0, 0.0}, 1.0});
  }
  std::vector<GraphEdge> edges;
  for (std::size_t i = 0; i + 1 < regions.size(); ++i) edges.push_back({i, i + 1, tract_count, tract_length});
  return Connectome(std::move(nodes), std::move(edges), scale);
}

Connectome reduce_mesh_to_graph(const PolytopalMesh& mesh, double diffusivity) {
  if (!(diffusivity > 0.0)) throw ValidationError("reduce_mesh_to_graph: diffusivity must be positive");
  const auto regions = mesh.region_ids();
  std::map<int, std::size_t> index;
  std::vector<GraphNode> nodes;
  for (int r : regions) {
    index[r] = nodes.size();
    nodes.push_back({r, {}, 0.0});
  }
  for (const Element& el : mesh.elements()) {
    GraphNode& n = nodes[index[el.region]];
    for (const Simplex& s : el.sub_tessellation) {
      const double m = simplex_measure(std::span<const Point>(s.vertices.data(), mesh.dim() + 1));
      Point c{};
      for (int v = 0; v <= mesh.dim(); ++v) c = c + s.vertices[v];
      n.position = n.position + (m / (mesh.dim() + 1)) * c;
    }
    n.volume += el.measure;
  }
  for (GraphNode& n : nodes) n.position = (1.0 / n.volume) * n.position;

  std::map<std::pair<std::size_t, std::size_t>, double> interface;
  for (const InternalFace& f : mesh.internal_faces()) {
    std::size_t a = index[mesh.elements()[f.left].region];
    std::size_t b = index[mesh.elements()[f.right].region];
    if (a == b) continue;
    if (b < a) std::swap(a, b);
    interface[{a, b}] += f.measure;
  }
  std::vector<GraphEdge> edges;
  for (const auto& [pair, area] : interface) {
    edges.push_back({pair.first, pair.second, area, norm(nodes[pair.first].position - nodes[pair.second].position)});
  }
  const double mean_volume = mesh.measure() / static_cast<double>(nodes.size());
  return Connectome(std::move(nodes), std::move(edges), diffusivity / mean_volume);
}

}  // namespace fkneuro

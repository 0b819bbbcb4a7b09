#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "fkneuro/geometry.hpp"

namespace fkneuro {

class PolytopalMesh;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct GraphNode {
  int region = 0;
  Point position{};
  double volume = 1.0;  // mm^3
};

/// Tract bundle between two nodes (stored by node index).
struct GraphEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  double tract_count = 0.0;   // n_ij
  double tract_length = 0.0;  // l_ij, mm
};

/// Weighted brain graph. Weights are w_ij = k n_ij / l_ij (1/year); parallel edges
/// between the same pair accumulate. The Laplacian is L = K - A.
class Connectome {
 public:
  /// Files always require a connected graph; in-memory callers may relax that
  /// (an edgeless graph decouples into independent logistic nodes).
  Connectome(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges, double scale,
             bool require_connected = true);

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  double scale() const noexcept { return scale_; }
  double weight(std::size_t i, std::size_t j) const;
  const SparseMatrix& laplacian() const noexcept { return laplacian_; }

  std::optional<std::size_t> node_of_region(int region) const;
  std::set<int> region_ids() const;
  double total_volume() const;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  double scale_;
  SparseMatrix weights_;
  SparseMatrix laplacian_;
};

/// Edge endpoints in the CSV refer to node region ids.
Connectome parse_connectome(const std::string& text, const std::string& source = "<string>",
                            std::optional<double> scale_override = std::nullopt);
Connectome load_connectome(const std::filesystem::path& path, std::optional<double> scale_override = std::nullopt);
std::string format_connectome(const Connectome& graph);
void write_connectome(const Connectome& graph, const std::filesystem::path& path);

/// Path graph of `regions.size()` unit-volume nodes, consecutive nodes joined by
/// one edge with n = tract_count and l = tract_length.
Connectome make_chain_graph(const std::vector<int>& regions, double tract_count, double tract_length,
                            double scale);

/// Region adjacency graph of a mesh: one node per region (volume = region measure,
/// position = centroid), edges between regions sharing internal faces with
/// n_ij = interface measure and l_ij = centroid distance. The scale is
/// diffusivity / mean region volume so that w_ij approximates the inter-region
/// flux coefficient of an isotropic diffusion with that diffusivity.
Connectome reduce_mesh_to_graph(const PolytopalMesh& mesh, double diffusivity);

}  // namespace fkneuro

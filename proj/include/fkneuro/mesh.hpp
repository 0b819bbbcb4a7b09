#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "fkneuro/geometry.hpp"

namespace fkneuro {

/// Vertex coordinates of one simplex; only the first dim+1 (or dim for a facet) entries are used.
struct Simplex {
  std::array<Point, 4> vertices{};
};

struct BoundingBox {
  Point min{};
  Point max{};

  bool contains(const Point& p, int dim, double tol = 0.0) const {
    for (int a = 0; a < dim; ++a) {
      if (p[a] < min[a] - tol || p[a] > max[a] + tol) return false;
    }
    return true;
  }
};

struct Element {
  std::vector<std::size_t> vertex_ids;
  /// Simplices used for quadrature. A simplex element is its own sub-tessellation.
  std::vector<Simplex> sub_tessellation;
  /// True when the sub-tessellation came from the mesh file rather than the vertex list.
  bool explicit_sub_tessellation = false;
  BoundingBox box;
  double diameter = 0.0;  // mm
  double measure = 0.0;   // mm^d
  Point axon{1.0, 0.0, 0.0};
  int region = 0;
};

/// A (d-1)-simplex shared by two elements. `normal` points out of `left`.
struct InternalFace {
  Simplex geometry;
  double measure = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  Point normal{};
};

struct BoundaryFace {
  Simplex geometry;
  double measure = 0.0;
  std::size_t element = 0;
  Point normal{};
};

/// Polytopal partition of the domain. Faces are simplicial pieces of the element
/// boundaries, so a polygonal interface may appear as several faces with the same
/// element pair.
class PolytopalMesh {
 public:
  /// Builds derived data (boxes, measures, faces) and checks the invariants.
  /// Axonal vectors with norm in [0.9, 1.1] are normalized and reported through
  /// `warnings`; anything further from unit length is rejected.
  PolytopalMesh(int dim, std::vector<Point> vertices, std::vector<Element> elements,
                std::vector<std::string>* warnings = nullptr);

  int dim() const noexcept { return dim_; }
  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<Element>& elements() const noexcept { return elements_; }
  const std::vector<InternalFace>& internal_faces() const noexcept { return internal_faces_; }
  const std::vector<BoundaryFace>& boundary_faces() const noexcept { return boundary_faces_; }
  std::size_t num_elements() const noexcept { return elements_.size(); }

  double measure() const noexcept { return measure_; }
  std::set<int> region_ids() const;
  double region_measure(const std::set<int>& regions) const;

 private:
  void build_faces();

  int dim_;
  std::vector<Point> vertices_;
  std::vector<Element> elements_;
  std::vector<InternalFace> internal_faces_;
  std::vector<BoundaryFace> boundary_faces_;
  double measure_ = 0.0;
};

PolytopalMesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
PolytopalMesh parse_mesh(const std::string& text, const std::string& source = "<string>",
                         std::vector<std::string>* warnings = nullptr);
std::string format_mesh(const PolytopalMesh& mesh);
void write_mesh(const PolytopalMesh& mesh, const std::filesystem::path& path);

/// Region labels by equal-width bands along one axis; band b gets labels[b].
struct SlabLabeling {
  int axis = 0;
  std::vector<int> labels{1};
};

/// Simplicial mesh of [0, extent]^d: 2n^2 triangles or 6n^3 Kuhn tetrahedra.
PolytopalMesh generate_structured_mesh(int dim, int cells_per_axis, double extent,
                                       const SlabLabeling& labeling = {},
                                       const Point& axon = {1.0, 0.0, 0.0});

}  // namespace fkneuro

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fkneuro/mesh.hpp"
#include "fkneuro/quadrature.hpp"

namespace fkneuro {

/// Per-element basis: monomials in box-scaled coordinates, orthogonalized so that
/// (phi_i, phi_j)_K = |K| delta_ij. The first basis function is the constant 1.
struct ElementBasis {
  Point center{};
  Point inverse_half_width{};
  Eigen::MatrixXd coefficients;  // row i: monomial coefficients of phi_i
};

/// Discontinuous piecewise-polynomial space of total degree `degree` on a polytopal mesh.
class DGSpace {
 public:
  DGSpace(std::shared_ptr<const PolytopalMesh> mesh, int degree);

  const PolytopalMesh& mesh() const noexcept { return *mesh_; }
  std::shared_ptr<const PolytopalMesh> mesh_ptr() const noexcept { return mesh_; }
  int degree() const noexcept { return degree_; }
  int dim() const noexcept { return mesh_->dim(); }
  /// C(degree + d, d).
  std::size_t local_size() const noexcept { return exponents_.size(); }
  std::size_t size() const noexcept { return local_size() * mesh_->num_elements(); }
  std::size_t offset(std::size_t element) const noexcept { return element * local_size(); }

  /// Basis values at x (length local_size()).
  void values(std::size_t element, const Point& x, std::span<double> out) const;
  /// Basis values and gradients at x; grads is local_size() x 3 (row-major).
  void values_and_gradients(std::size_t element, const Point& x, std::span<double> vals,
                            std::span<double> grads) const;

  /// Coefficient vector of the constant function `value`.
  std::vector<double> constant(double value) const;
  /// Evaluates c_h at x inside `element`.
  double evaluate(std::span<const double> coeffs, std::size_t element, const Point& x) const;

  const ElementBasis& basis(std::size_t element) const { return basis_[element]; }

 private:
  void monomials(std::size_t element, const Point& x, std::span<double> m, std::span<double> dm) const;

  std::shared_ptr<const PolytopalMesh> mesh_;
  int degree_;
  std::vector<std::array<int, 3>> exponents_;
  std::vector<ElementBasis> basis_;
};

/// Quadrature on an element's sub-tessellation.
std::vector<QuadraturePoint> element_rule(const Element& element, int dim, int order);

}  // namespace fkneuro

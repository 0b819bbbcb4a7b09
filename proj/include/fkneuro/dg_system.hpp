#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "fkneuro/dg_space.hpp"

namespace fkneuro {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using ScalarField = std::function<double(const Point&)>;

/// D = d_ext I + d_axn a (x) a, with a the element's unit axonal direction.
struct DiffusionModel {
  double d_ext = 8.0;   // mm^2/year
  double d_axn = 80.0;  // mm^2/year

  void validate() const;
  Eigen::Matrix3d tensor(const Point& axon, int dim) const;
  /// d^K = ||sqrt(D|_K)||^2, the largest eigenvalue of D for a unit axon.
  double penalty_scale() const noexcept { return d_ext + d_axn; }
};

/// {v}_H = 2 v+ v- / (v+ + v-).
double harmonic_average(double plus, double minus);

/// eta = l^2 / {h}_H * eta0 * max({d^K}_H, alpha).
double face_penalty(int degree, double eta0, double alpha, double h_plus, double h_minus, double dk_plus,
                    double dk_minus);

struct AssemblyParameters {
  double alpha = 0.61;  // 1/year
  double eta0 = 10.0;
  /// Quadrature exactness on elements and faces; 0 picks 3*degree. Must be >= 2*degree.
  int quadrature_order = 0;
};

/// Assembled interior-penalty DG operators for the Fisher-Kolmogorov problem with
/// homogeneous Neumann boundaries (no boundary-face terms).
class DGSystem {
 public:
  DGSystem(std::shared_ptr<const DGSpace> space, DiffusionModel model, AssemblyParameters params);

  const DGSpace& space() const noexcept { return *space_; }
  std::shared_ptr<const DGSpace> space_ptr() const noexcept { return space_; }
  const DiffusionModel& model() const noexcept { return model_; }
  double alpha() const noexcept { return params_.alpha; }
  double eta0() const noexcept { return params_.eta0; }
  int quadrature_order() const noexcept { return order_; }
  std::size_t size() const noexcept { return space_->size(); }

  const SparseMatrix& mass() const noexcept { return mass_; }
  const SparseMatrix& stiffness() const noexcept { return stiffness_; }
  /// M_alpha = alpha M for spatially constant alpha.
  const SparseMatrix& linear_reaction() const noexcept { return linear_reaction_; }
  const std::vector<double>& face_penalties() const noexcept { return penalties_; }

  /// M~_alpha(C): entries (alpha c_h phi_j, phi_i). Block diagonal.
  SparseMatrix nonlinear_reaction(std::span<const double> coeffs) const;
  /// Local block of M~_alpha(C) on one element (local_size^2, row-major).
  void nonlinear_block(std::size_t element, std::span<const double> coeffs, std::span<double> block) const;

  /// (f, phi_i) for every basis function.
  std::vector<double> load_vector(const ScalarField& f) const;
  /// Element-wise L2 projection.
  std::vector<double> project(const ScalarField& f) const;
  /// ||c_h - f||_{L2(Omega)} using a rule of exactness quadrature_order + extra.
  double l2_error(std::span<const double> coeffs, const ScalarField& f, int extra_order = 4) const;
  /// Integral of each basis function; the mean of c_h over a set of elements is
  /// the weighted sum of its coefficients.
  const std::vector<double>& basis_integrals() const noexcept { return basis_integrals_; }

 private:
  struct ElementCache {
    std::vector<double> weights;
    std::vector<double> phi;  // points x local_size
  };

  std::shared_ptr<const DGSpace> space_;
  DiffusionModel model_;
  AssemblyParameters params_;
  int order_;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
  SparseMatrix linear_reaction_;
  std::vector<double> penalties_;
  std::vector<ElementCache> cache_;
  std::vector<double> basis_integrals_;
};

DGSystem assemble(std::shared_ptr<const DGSpace> space, const DiffusionModel& model,
                  const AssemblyParameters& params);

}  // namespace fkneuro

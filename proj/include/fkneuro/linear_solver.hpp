#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace fkneuro {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct LinearSolveOptions {
  double tolerance = 1e-10;
  /// Iteration cap is factor * N.
  double max_iterations_factor = 10.0;
  /// Switch to a sparse LU factorization when conjugate gradients stall or lose definiteness.
  bool direct_fallback = true;
};

struct LinearSolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool used_direct = false;
  std::vector<double> residual_history;
};

/// Jacobi-preconditioned conjugate gradients on a symmetric matrix. `x` carries the
/// initial guess in and the solution out. Throws SolverError when the relative
/// residual ||b - A x|| / ||b|| cannot be brought below the tolerance.
LinearSolveReport solve_symmetric(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                                  const LinearSolveOptions& options = {});

/// Sparse LU solve with one step of iterative refinement.
LinearSolveReport solve_direct(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x);

}  // namespace fkneuro

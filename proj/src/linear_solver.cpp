#include "fkneuro/linear_solver.hpp"

#include <cmath>

#include <Eigen/SparseLU>

#include "fkneuro/errors.hpp"

namespace fkneuro {

LinearSolveReport solve_direct(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x) {
  LinearSolveReport report;
  report.used_direct = true;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero(b.size());
    return report;
  }
  Eigen::SparseMatrix<double> col = a;
  col.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(col);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed (singular system)", {});
  x = lu.solve(b);
  Eigen::VectorXd r = b - a * x;
  report.residual_history.push_back(r.norm() / bnorm);
  x += lu.solve(r);
  r = b - a * x;
  report.relative_residual = r.norm() / bnorm;
  report.residual_history.push_back(report.relative_residual);
  if (!std::isfinite(report.relative_residual)) {
    throw SolverError("sparse LU produced a non-finite solution", report.residual_history);
  }
  return report;
}

LinearSolveReport solve_symmetric(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                                  const LinearSolveOptions& options) {
  const Eigen::Index n = b.size();
  if (a.rows() != n || a.cols() != n) throw ValidationError("solve_symmetric: dimension mismatch");
  if (x.size() != n) x = Eigen::VectorXd::Zero(n);

  LinearSolveReport report;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    return report;
  }

  Eigen::VectorXd inv_diag(n);
  bool jacobi_ok = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a.coeff(i, i);
    if (!(d > 0.0)) jacobi_ok = false;
    inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
  }

  const int max_it = std::max(1, static_cast<int>(options.max_iterations_factor * static_cast<double>(n)));
  Eigen::VectorXd r = b - a * x;
  double rel = r.norm() / bnorm;
  report.residual_history.push_back(rel);
  bool converged = rel <= options.tolerance;
  bool broke_down = !jacobi_ok;

  if (!converged && !broke_down) {
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    Eigen::VectorXd ap(n);
    double rz = r.dot(z);
    double best = rel;
    int since_best = 0;
    for (int it = 0; it < max_it; ++it) {
      ap.noalias() = a * p;
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) {
        broke_down = true;
        break;
      }
      const double step = rz / pap;
      x += step * p;
      r -= step * ap;
      rel = r.norm() / bnorm;
      report.residual_history.push_back(rel);
      report.iterations = it + 1;
      if (rel <= options.tolerance) {
        // Confirm with the true residual; the recursive one drifts.
        rel = (b - a * x).norm() / bnorm;
        if (rel <= options.tolerance) {
          converged = true;
          break;
        }
        r = b - a * x;
      }
      if (rel < 0.5 * best) {
        best = rel;
        since_best = 0;
      } else if (++since_best > 200 + static_cast<int>(n)) {
        broke_down = true;  // stalled
        break;
      }
      z = inv_diag.cwiseProduct(r);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
  }
  report.relative_residual = rel;
  if (converged) return report;

  if (!options.direct_fallback) {
    throw SolverError("conjugate gradients did not converge: relative residual " + std::to_string(rel) + " after " +
                          std::to_string(report.iterations) + " iterations",
                      report.residual_history);
  }
  auto history = report.residual_history;
  Eigen::VectorXd xd = x;
  LinearSolveReport direct = solve_direct(a, b, xd);
  direct.iterations = report.iterations;
  history.insert(history.end(), direct.residual_history.begin(), direct.residual_history.end());
  direct.residual_history = std::move(history);
  if (direct.relative_residual > options.tolerance) {
    throw SolverError("direct fallback missed the tolerance: relative residual " +
                          std::to_string(direct.relative_residual),
                      direct.residual_history);
  }
  x = xd;
  return direct;
}

}  // namespace fkneuro

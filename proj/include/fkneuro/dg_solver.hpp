#pragma once

#include <functional>
#include <set>
#include <span>
#include <vector>

#include "fkneuro/dg_system.hpp"
#include "fkneuro/linear_solver.hpp"
#include "fkneuro/trajectory.hpp"

namespace fkneuro {

/// Volume source f(x, t). Only manufactured-solution checks use one.
using SourceTerm = std::function<double(const Point&, double)>;

/// Semi-implicit Euler step
///   (M + dt (A - M_alpha + M~_alpha(C^n))) C^{n+1} = M C^n [+ dt F(t_{n+1})].
/// The constant part of the matrix is built once; each step refreshes the
/// element-diagonal nonlinear blocks in place.
class SemiImplicitEulerStepper {
 public:
  SemiImplicitEulerStepper(const DGSystem& system, double dt, LinearSolveOptions options = {});

  double dt() const noexcept { return dt_; }
  std::vector<double> step(std::span<const double> current, StepStats* stats = nullptr,
                           const SourceTerm* source = nullptr, double t_next = 0.0);
  /// System matrix used by the most recent step.
  const SparseMatrix& last_matrix() const noexcept { return work_; }

 private:
  const DGSystem& system_;
  double dt_;
  LinearSolveOptions options_;
  SparseMatrix base_;
  SparseMatrix work_;
  std::vector<std::vector<Eigen::Index>> block_slots_;  // per element, local_size^2 value indices
};

struct MeshRunOptions {
  double dt = 0.05;
  double final_time = 40.0;
  LinearSolveOptions solver;
  SourceTerm source;
};

/// Region-indicator seeding projected onto the DG space. Labels are constant per
/// element, so the projection is the constant mode on seeded elements.
std::vector<double> seed_regions(const DGSpace& space, const std::set<int>& regions, double value);

/// Runs the time loop from `initial`; aborts with the step index on non-finite values.
Trajectory solve_fk_mesh(const DGSystem& system, std::vector<double> initial, const MeshRunOptions& options);

}  // namespace fkneuro

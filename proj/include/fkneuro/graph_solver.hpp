#pragma once

#include <set>
#include <span>
#include <vector>

#include "fkneuro/connectome.hpp"
#include "fkneuro/trajectory.hpp"

namespace fkneuro {

/// -L C + alpha C (1 - C).
std::vector<double> rhs_semidiscrete(const Connectome& graph, std::span<const double> c, double alpha);

struct GraphStepOptions {
  /// Use the printed right-hand side, which subtracts the reaction term on both
  /// sides of the Crank-Nicolson average (see README).
  bool paper_literal_rhs = false;
  double tolerance = 1e-12;
  /// Direct factorization up to this many nodes, iterative above.
  std::size_t direct_limit = 5000;
};

/// Crank-Nicolson step with the reaction coefficient extrapolated from two levels:
///   (2I + dt L - alpha dt diag(e)) C^{n+1} = (2I - dt L + alpha dt diag(e)) C^n,
///   e = 1 - (3 C^n - C^{n-1}) / 2.
class CrankNicolsonStepper {
 public:
  CrankNicolsonStepper(const Connectome& graph, double alpha, double dt, GraphStepOptions options = {});

  std::vector<double> step(std::span<const double> current, std::span<const double> previous,
                           StepStats* stats = nullptr) const;
  /// System matrix for a given extrapolation state (exposed for symmetry checks).
  SparseMatrix system_matrix(std::span<const double> current, std::span<const double> previous) const;

 private:
  const Connectome& graph_;
  double alpha_;
  double dt_;
  GraphStepOptions options_;
};

struct GraphRunOptions {
  double dt = 0.05;
  double final_time = 40.0;
  GraphStepOptions step;
};

std::vector<double> seed_nodes(const Connectome& graph, const std::set<int>& regions, double value);

/// Bootstraps C^{-1} = C^0, so the first step uses first-order extrapolation.
Trajectory solve_fk_graph(const Connectome& graph, double alpha, std::vector<double> initial,
                          const GraphRunOptions& options);

}  // namespace fkneuro

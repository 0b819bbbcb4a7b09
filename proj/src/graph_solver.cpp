#include "fkneuro/graph_solver.hpp"

#include <cmath>

#include <Eigen/IterativeLinearSolvers>

#include "fkneuro/errors.hpp"
#include "fkneuro/linear_solver.hpp"

namespace fkneuro {

std::vector<double> rhs_semidiscrete(const Connectome& graph, std::span<const double> c, double alpha) {
  if (c.size() != graph.size()) throw ValidationError("rhs_semidiscrete: state has wrong length");
  const Eigen::Map<const Eigen::VectorXd> v(c.data(), static_cast<Eigen::Index>(c.size()));
  Eigen::VectorXd r = -(graph.laplacian() * v);
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] += alpha * v[i] * (1.0 - v[i]);
  return {r.data(), r.data() + r.size()};
}

CrankNicolsonStepper::CrankNicolsonStepper(const Connectome& graph, double alpha, double dt, GraphStepOptions options)
    : graph_(graph), alpha_(alpha), dt_(dt), options_(options) {
  if (!(dt_ > 0.0)) throw ValidationError("time step must be positive");
  if (!std::isfinite(alpha_)) throw ValidationError("alpha must be finite");
}

SparseMatrix CrankNicolsonStepper::system_matrix(std::span<const double> current,
                                                 std::span<const double> previous) const {
  const auto m = static_cast<Eigen::Index>(graph_.size());
  SparseMatrix a = dt_ * graph_.laplacian();
  std::vector<Eigen::Triplet<double>> diag;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double e = 1.0 - 0.5 * (3.0 * current[i] - previous[i]);
    diag.emplace_back(static_cast<int>(i), static_cast<int>(i), 2.0 - alpha_ * dt_ * e);
  }
  SparseMatrix d(m, m);
  d.setFromTriplets(diag.begin(), diag.end());
  return a + d;
}

std::vector<double> CrankNicolsonStepper::step(std::span<const double> current, std::span<const double> previous,
                                               StepStats* stats) const {
  const std::size_t m = graph_.size();
  if (current.size() != m || previous.size() != m) throw ValidationError("graph step: state has wrong length");
  const SparseMatrix a = system_matrix(current, previous);

  const Eigen::Map<const Eigen::VectorXd> c(current.data(), static_cast<Eigen::Index>(m));
  Eigen::VectorXd rhs = 2.0 * c - dt_ * (graph_.laplacian() * c);
  const double sign = options_.paper_literal_rhs ? -1.0 : 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = 1.0 - 0.5 * (3.0 * current[i] - previous[i]);
    rhs[static_cast<Eigen::Index>(i)] += sign * alpha_ * dt_ * e * current[i];
  }

  Eigen::VectorXd x = c;
  LinearSolveReport report;
  if (m <= options_.direct_limit) {
    report = solve_direct(a, rhs, x);
  } else {
    LinearSolveOptions o;
    o.tolerance = options_.tolerance;
    report = solve_symmetric(a, rhs, x, o);
  }
  if (!(report.relative_residual <= options_.tolerance)) {
    throw SolverError("graph step residual " + std::to_string(report.relative_residual) + " above tolerance",
                      report.residual_history);
  }
  if (stats) *stats = {report.iterations, report.relative_residual, report.used_direct};
  return {x.data(), x.data() + x.size()};
}

std::vector<double> seed_nodes(const Connectome& graph, const std::set<int>& regions, double value) {
  std::vector<double> c(graph.size(), 0.0);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (regions.count(graph.nodes()[i].region)) c[i] = value;
  }
  return c;
}

Trajectory solve_fk_graph(const Connectome& graph, double alpha, std::vector<double> initial,
                          const GraphRunOptions& options) {
  if (initial.size() != graph.size()) throw ValidationError("initial condition has wrong length");
  const std::size_t steps = step_count(options.dt, options.final_time);
  CrankNicolsonStepper stepper(graph, alpha, options.dt, options.step);
  Trajectory traj;
  traj.dt = options.dt;
  traj.alpha = alpha;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(std::move(initial));
  for (std::size_t k = 0; k < steps; ++k) {
    const auto& cur = traj.states[k];
    const auto& prev = k == 0 ? traj.states[0] : traj.states[k - 1];
    StepStats stats;
    auto next = stepper.step(cur, prev, &stats);
    for (double v : next) {
      if (!std::isfinite(v)) throw Error("non-finite concentration at step " + std::to_string(k + 1));
    }
    traj.times.push_back(static_cast<double>(k + 1) * options.dt);
    traj.states.push_back(std::move(next));
    traj.stats.push_back(stats);
  }
  return traj;
}

}  // namespace fkneuro

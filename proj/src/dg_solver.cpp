#include "fkneuro/dg_solver.hpp"

#include <algorithm>
#include <cmath>

#include "fkneuro/errors.hpp"

namespace fkneuro {

SemiImplicitEulerStepper::SemiImplicitEulerStepper(const DGSystem& system, double dt, LinearSolveOptions options)
    : system_(system), dt_(dt), options_(options) {
  if (!(dt_ > 0.0)) throw ValidationError("time step must be positive");
  base_ = system_.mass() + dt_ * (system_.stiffness() - system_.linear_reaction());
  base_.makeCompressed();
  work_ = base_;

  const DGSpace& space = system_.space();
  const std::size_t nb = space.local_size();
  block_slots_.resize(space.mesh().num_elements());
  const auto* outer = base_.outerIndexPtr();
  const auto* inner = base_.innerIndexPtr();
  for (std::size_t e = 0; e < block_slots_.size(); ++e) {
    auto& slots = block_slots_[e];
    slots.resize(nb * nb);
    const auto off = static_cast<Eigen::Index>(space.offset(e));
    for (std::size_t i = 0; i < nb; ++i) {
      const Eigen::Index row = off + static_cast<Eigen::Index>(i);
      const auto* begin = inner + outer[row];
      const auto* end = inner + outer[row + 1];
      for (std::size_t j = 0; j < nb; ++j) {
        const auto col = static_cast<int>(off + static_cast<Eigen::Index>(j));
        const auto* it = std::lower_bound(begin, end, col);
        if (it == end || *it != col) throw Error("stepper: element block missing from the matrix pattern");
        slots[i * nb + j] = it - inner;
      }
    }
  }
}

std::vector<double> SemiImplicitEulerStepper::step(std::span<const double> current, StepStats* stats,
                                                   const SourceTerm* source, double t_next) {
  const std::size_t n = system_.size();
  if (current.size() != n) throw ValidationError("step: state has wrong length");
  const DGSpace& space = system_.space();
  const std::size_t nb = space.local_size();

  std::copy(base_.valuePtr(), base_.valuePtr() + base_.nonZeros(), work_.valuePtr());
  std::vector<double> block(nb * nb);
  double* values = work_.valuePtr();
  for (std::size_t e = 0; e < block_slots_.size(); ++e) {
    system_.nonlinear_block(e, current, block);
    const auto& slots = block_slots_[e];
    for (std::size_t k = 0; k < nb * nb; ++k) values[slots[k]] += dt_ * block[k];
  }

  const Eigen::Map<const Eigen::VectorXd> c(current.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd rhs = system_.mass() * c;
  if (source && *source) {
    const auto f = system_.load_vector([&](const Point& x) { return (*source)(x, t_next); });
    rhs += dt_ * Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(n));
  }
  Eigen::VectorXd x = c;
  const LinearSolveReport report = solve_symmetric(work_, rhs, x, options_);
  if (stats) *stats = {report.iterations, report.relative_residual, report.used_direct};
  return {x.data(), x.data() + x.size()};
}

std::vector<double> seed_regions(const DGSpace& space, const std::set<int>& regions, double value) {
  std::vector<double> c(space.size(), 0.0);
  const auto& elements = space.mesh().elements();
  for (std::size_t e = 0; e < elements.size(); ++e) {
    if (regions.count(elements[e].region)) c[space.offset(e)] = value;
  }
  return c;
}

Trajectory solve_fk_mesh(const DGSystem& system, std::vector<double> initial, const MeshRunOptions& options) {
  if (initial.size() != system.size()) throw ValidationError("initial condition has wrong length");
  const std::size_t steps = step_count(options.dt, options.final_time);
  SemiImplicitEulerStepper stepper(system, options.dt, options.solver);
  Trajectory traj;
  traj.dt = options.dt;
  traj.alpha = system.alpha();
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(std::move(initial));
  for (std::size_t k = 0; k < steps; ++k) {
    StepStats stats;
    const double t_next = static_cast<double>(k + 1) * options.dt;
    auto next = stepper.step(traj.states.back(), &stats, options.source ? &options.source : nullptr, t_next);
    for (double v : next) {
      if (!std::isfinite(v)) throw Error("non-finite concentration at step " + std::to_string(k + 1));
    }
    traj.times.push_back(t_next);
    traj.states.push_back(std::move(next));
    traj.stats.push_back(stats);
  }
  return traj;
}

}  // namespace fkneuro

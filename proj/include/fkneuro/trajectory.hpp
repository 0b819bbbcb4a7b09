#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace fkneuro {

struct StepStats {
  int iterations = 0;
  double residual = 0.0;
  bool direct = false;
};

/// Uniform time grid t_n = n dt with one state vector per time.
struct Trajectory {
  double dt = 0.0;
  double alpha = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  /// stats[n] describes the solve producing states[n + 1].
  std::vector<StepStats> stats;

  std::size_t num_steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
  std::size_t state_size() const noexcept { return states.empty() ? 0 : states.front().size(); }
};

/// Number of steps for [0, T]; T must be a multiple of dt up to 1e-9 relative.
std::size_t step_count(double dt, double final_time);

/// Binary dump: text line "FKSTATE 1 <N> <N_T>" then (N_T + 1) x N row-major doubles.
void write_state_dump(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_state_dump(const std::filesystem::path& path, double dt);

}  // namespace fkneuro

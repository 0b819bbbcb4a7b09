#include "fkneuro/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "fkneuro/errors.hpp"

namespace fkneuro {

std::size_t step_count(double dt, double final_time) {
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  if (!(final_time >= dt)) throw ValidationError("final time must be at least one time step");
  const double ratio = final_time / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw ValidationError("final time " + std::to_string(final_time) + " is not a multiple of dt " +
                          std::to_string(dt));
  }
  return static_cast<std::size_t>(rounded);
}

void write_state_dump(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write state dump " + path.string());
  f << "FKSTATE 1 " << traj.state_size() << " " << traj.num_steps() << "\n";
  for (const auto& s : traj.states) {
    f.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(s.size() * sizeof(double)));
  }
}

Trajectory read_state_dump(const std::filesystem::path& path, double dt) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open state dump " + path.string());
  std::string header;
  std::getline(f, header);
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  std::size_t n = 0;
  std::size_t nt = 0;
  if (!(hs >> magic >> version >> n >> nt) || magic != "FKSTATE" || version != 1) {
    throw ParseError(path.string(), 1, "expected 'FKSTATE 1 <N> <N_T>' header");
  }
  Trajectory traj;
  traj.dt = dt;
  for (std::size_t k = 0; k <= nt; ++k) {
    std::vector<double> s(n);
    f.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!f) throw Error("state dump truncated at row " + std::to_string(k));
    traj.times.push_back(static_cast<double>(k) * dt);
    traj.states.push_back(std::move(s));
  }
  return traj;
}

}  // namespace fkneuro

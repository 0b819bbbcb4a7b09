#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fkneuro/staging.hpp"

namespace fkneuro {

enum class Protein { Abeta, Tau };
enum class DomainKind { Mesh, Graph };

std::string to_string(Protein p);
std::string to_string(DomainKind d);

struct SimulationConfig {
  Protein protein = Protein::Abeta;
  DomainKind domain = DomainKind::Mesh;
  std::string mesh;
  std::string graph;
  std::string atlas;
  std::string output_dir = "fkneuro_out";

  int ell = 2;
  double eta0 = 10.0;
  int quad_order = 0;  // 0: 3 * ell
  double dt = 0.05;
  double T = 40.0;
  double d_ext = 8.0;
  double d_axn = 80.0;
  double alpha = 0.61;
  std::optional<double> k;  // graph weight scale; unset uses the file header

  bool seed_all = false;
  std::vector<int> seed_regions;  // empty: protein default from the atlas
  double seed_value = 0.1;

  double solver_tol = 1e-10;
  double solver_maxit_factor = 10.0;

  double c_crit = 0.5;
  SuvrMapParams suvr = SuvrMapParams::abeta();
  double saturation_level = 0.95;

  bool paper_literal_rhs = false;
  bool dump_state = false;
  int threads = 0;  // 0: hardware concurrency, capped by FKNEURO_THREADS

  void validate() const;
};

/// Raw key=value pairs in file order, with the source line of each.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};
using ConfigEntries = std::vector<ConfigEntry>;

ConfigEntries parse_config_entries(const std::string& text, const std::string& source = "<string>");

/// Builds a config from entries; later entries override earlier ones. Keys not
/// given take the defaults, with alpha and the SUVR thresholds following `protein`.
SimulationConfig config_from_entries(const ConfigEntries& entries, const std::string& source = "<string>");

SimulationConfig parse_config(const std::string& text, const std::string& source = "<string>");
SimulationConfig load_config(const std::filesystem::path& path);
std::string format_config(const SimulationConfig& config);

SimulationConfig default_config(Protein protein);
const std::vector<std::string>& config_keys();

}  // namespace fkneuro

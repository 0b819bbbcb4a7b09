#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fkneuro/atlas.hpp"
#include "fkneuro/config.hpp"
#include "fkneuro/connectome.hpp"
#include "fkneuro/mesh.hpp"
#include "fkneuro/staging.hpp"
#include "fkneuro/trajectory.hpp"

namespace fkneuro {

/// Loaded computational domain plus the optional Braak atlas.
struct Domain {
  DomainKind kind = DomainKind::Mesh;
  std::shared_ptr<const PolytopalMesh> mesh;
  std::shared_ptr<const Connectome> graph;
  std::optional<BraakAtlas> atlas;
  std::vector<std::string> warnings;

  std::set<int> region_ids() const;
};

Domain load_domain(const SimulationConfig& config);

struct SimulationResult {
  Trajectory trajectory;
  std::vector<int> regions;                       // sorted region ids
  std::vector<std::vector<double>> region_means;  // [region][time]
  std::vector<double> global_mean;
  RoiCurves roi;                                  // empty without an atlas
  std::vector<double> neocortex_mean;             // empty without an atlas
  std::vector<std::string> warnings;
};

/// Seed regions resolved from the config (explicit list, "all", or the atlas default
/// for the protein).
std::set<int> resolve_seed(const SimulationConfig& config, const Domain& domain);

/// One simulation in memory, with spatial averages. Values outside [-0.05, 1.05]
/// produce warnings.
SimulationResult simulate(const SimulationConfig& config, const Domain& domain);

/// Runs `simulate` and writes trajectory.csv and report.txt; with an atlas also
/// roi_averages.csv and staging.csv; warnings.csv when any value is out of range;
/// state.bin when dump_state is set.
SimulationResult run(const SimulationConfig& config);

struct StagingReport {
  std::map<BraakStage, std::optional<double>> activation;
  MacrostageTimeline timeline;
  ActivationOrder order;
};
StagingReport stage_report(const std::vector<double>& times, const RoiCurves& roi, double c_crit);
void write_staging_csv(const StagingReport& report, const std::filesystem::path& path);

struct SweepRow {
  double alpha = 0.0;
  std::optional<double> t_half;
  std::optional<double> t_saturation;
  std::vector<double> global_mean;
  bool completed = false;
  std::string error;
};

/// Worker count: `requested` (0 = hardware), capped by FKNEURO_THREADS and by `jobs`.
std::size_t worker_count(int requested, std::size_t jobs);

/// One run per alpha, in parallel. Writes sweep.csv (`alpha,t_half,t_saturation`)
/// with the completed rows, then throws if a run failed or t_half is not strictly
/// decreasing in alpha.
std::vector<SweepRow> sweep(const SimulationConfig& config, const std::vector<double>& alphas);
/// Same without files or the monotonicity assertion.
std::vector<SweepRow> sweep_in_memory(const SimulationConfig& config, const Domain& domain,
                                      const std::vector<double>& alphas);

struct RegionComparison {
  std::string label;  // "region_<id>" or "braak_<stage>"
  double max_abs_deviation = 0.0;
  std::optional<double> t_mesh;
  std::optional<double> t_graph;
  /// t_mesh - t_graph; positive when the graph activates first.
  std::optional<double> lead;
};

struct ComparisonReport {
  std::vector<RegionComparison> rows;
  /// Whether both sides activate Braak II..IV in the same order (only with atlases).
  std::optional<bool> order_agrees_through_iv;
};

/// Aligns two results on the mesh time grid (the graph curve is linearly
/// interpolated). Throws ValidationError listing unmatched region ids.
ComparisonReport compare_results(const SimulationResult& mesh, const SimulationResult& graph, double c_crit);
ComparisonReport compare(const SimulationConfig& mesh_config, const SimulationConfig& graph_config);

void write_trajectory_csv(const SimulationResult& result, const std::filesystem::path& path);

}  // namespace fkneuro

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fkneuro/atlas.hpp"
#include "fkneuro/trajectory.hpp"

namespace fkneuro {

class DGSystem;
class Connectome;

// ---------------------------------------------------------------------------
// Spatial averages

/// Linear functional state -> mean concentration over a set of regions.
struct RegionAverage {
  std::vector<std::pair<std::size_t, double>> terms;  // (state index, weight)
  double measure = 0.0;

  double operator()(std::span<const double> state) const;
};

/// Exact mean of c_h over the elements carrying one of `regions`.
RegionAverage region_average(const DGSystem& system, const std::set<int>& regions);
/// Volume-weighted nodal mean sum(c_i |Omega_i|) / sum(|Omega_i|) over the region nodes.
RegionAverage region_average(const Connectome& graph, const std::set<int>& regions);

std::vector<double> spatial_average(const Trajectory& traj, const RegionAverage& average);

// ---------------------------------------------------------------------------
// SUVR normalization

enum class Phase { Stationary, Lag, Active, Saturation };
std::string to_string(Phase phase);
Phase parse_phase(const std::string& text);

struct SuvrMapParams {
  double theta_low = 1.3;
  double theta_high = 2.2;
  double gamma = 0.25;
  double epsilon = 0.1;
  double positivity_cutoff = 1.55;

  static SuvrMapParams abeta();
  static SuvrMapParams tau();
  void validate() const;
};

double map_suvr_abeta(double s, const SuvrMapParams& p);
double map_suvr_tau(double s, Phase phase, const SuvrMapParams& p);

struct PhaseRow {
  std::vector<Phase> phases;   // one per stage index of the input sequence
  std::optional<std::size_t> active_onset;
  bool never_crossed = false;
};

/// Phase of each PET Braak stage for one Braak ROI. `stage_means` is ordered by
/// stage; `early_region` marks the Braak II ROI, which starts directly active.
PhaseRow classify_phase(std::span<const double> stage_means, double abnormality_threshold, bool early_region,
                        const SuvrMapParams& p);

// ---------------------------------------------------------------------------
// Activation times and macrostages

/// First time the series reaches `level`, linearly interpolated between samples.
std::optional<double> crossing_time(std::span<const double> times, std::span<const double> values, double level);

struct MacrostageTimeline {
  double t1 = 0.0;  // end of 0-II, start of III-IV
  double t2 = 0.0;  // end of III-IV, start of V-VI
  double c_crit = 0.5;
  bool ordered = true;
  std::vector<std::string> warnings;
};

using RoiCurves = std::map<BraakStage, std::vector<double>>;

/// Boundaries are the activation times of the Braak III and Braak V curves. A
/// curve that never reaches c_crit puts its boundary at T with a warning.
MacrostageTimeline reconstruct_macrostages(std::span<const double> times, const RoiCurves& curves, double c_crit);

std::string macrostage_of(BraakStage stage);

enum class OrderVerdict { Anatomical, Violated, Degenerate };
std::string to_string(OrderVerdict verdict);

struct StageActivation {
  BraakStage stage;
  std::optional<double> time;
};

struct ActivationOrder {
  std::vector<StageActivation> order;  // sorted by activation time, unactivated last
  OrderVerdict verdict = OrderVerdict::Degenerate;
};

/// Activation order of the Braak ROIs. Equal times within `tie_tolerance` for all
/// stages give a degenerate verdict.
ActivationOrder braak_activation_order(std::span<const double> times, const RoiCurves& curves, double c_crit,
                                       double tie_tolerance = 1e-9);

RoiCurves roi_curves(const Trajectory& traj, const BraakAtlas& atlas, const DGSystem& system);
RoiCurves roi_curves(const Trajectory& traj, const BraakAtlas& atlas, const Connectome& graph);

/// Amyloid-beta landmarks: positivity (mapped cutoff) and saturation onset on the
/// neocortical mean curve.
struct AbetaAnchors {
  std::optional<double> positivity_time;
  std::optional<double> saturation_time;
  double positivity_level = 0.0;
  double saturation_level = 0.95;
};
AbetaAnchors abeta_anchors(std::span<const double> times, std::span<const double> neocortex_mean,
                           const SuvrMapParams& p, double saturation_level = 0.95);

/// Number of inflections of a sampled curve: sign changes of the second
/// differences after 3-point smoothing, ignoring entries below rel_tol * max and rounding noise.
std::size_t count_inflections(std::span<const double> values, double rel_tol = 1e-6);

// ---------------------------------------------------------------------------
// Clinical data

struct ClinicalRecord {
  std::string protein;
  int braak_stage = 0;  // subject PET Braak stage, 0..6
  std::string region;   // Braak ROI label or "neocortex"
  double mean_suvr = 0.0;
  double sd_suvr = 0.0;
};

std::vector<ClinicalRecord> load_clinical_csv(const std::filesystem::path& path);
std::vector<ClinicalRecord> parse_clinical_csv(const std::string& text, const std::string& source = "<string>");
std::map<std::string, double> load_thresholds_csv(const std::filesystem::path& path);

}  // namespace fkneuro

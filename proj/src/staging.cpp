#include "fkneuro/staging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fkneuro/connectome.hpp"
#include "fkneuro/dg_system.hpp"
#include "fkneuro/errors.hpp"

namespace fkneuro {

double RegionAverage::operator()(std::span<const double> state) const {
  double s = 0.0;
  for (const auto& [idx, w] : terms) s += w * state[idx];
  return s / measure;
}

RegionAverage region_average(const DGSystem& system, const std::set<int>& regions) {
  const DGSpace& space = system.space();
  const auto& elements = space.mesh().elements();
  const auto& integrals = system.basis_integrals();
  RegionAverage avg;
  for (std::size_t e = 0; e < elements.size(); ++e) {
    if (!regions.count(elements[e].region)) continue;
    avg.measure += elements[e].measure;
    for (std::size_t i = 0; i < space.local_size(); ++i) {
      const std::size_t idx = space.offset(e) + i;
      avg.terms.emplace_back(idx, integrals[idx]);
    }
  }
  if (avg.terms.empty()) throw ValidationError("spatial average over an empty region set");
  return avg;
}

RegionAverage region_average(const Connectome& graph, const std::set<int>& regions) {
  RegionAverage avg;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (!regions.count(graph.nodes()[i].region)) continue;
    avg.terms.emplace_back(i, graph.nodes()[i].volume);
    avg.measure += graph.nodes()[i].volume;
  }
  if (avg.terms.empty()) throw ValidationError("spatial average over an empty region set");
  return avg;
}

std::vector<double> spatial_average(const Trajectory& traj, const RegionAverage& average) {
  std::vector<double> out;
  out.reserve(traj.states.size());
  for (const auto& s : traj.states) out.push_back(average(s));
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Stationary: return "stationary";
    case Phase::Lag: return "lag";
    case Phase::Active: return "active";
    case Phase::Saturation: return "saturation";
  }
  return "?";
}

Phase parse_phase(const std::string& text) {
  std::string t;
  for (unsigned char c : text) t.push_back(static_cast<char>(std::tolower(c)));
  if (t == "stationary") return Phase::Stationary;
  if (t == "lag") return Phase::Lag;
  if (t == "active") return Phase::Active;
  if (t == "saturation") return Phase::Saturation;
  throw ValidationError("unknown phase '" + text + "'");
}

SuvrMapParams SuvrMapParams::abeta() { return {1.3, 2.2, 0.25, 0.1, 1.55}; }
SuvrMapParams SuvrMapParams::tau() { return {0.75, 2.20, 0.25, 0.1, 1.55}; }

void SuvrMapParams::validate() const {
  if (!(theta_low < theta_high)) throw ValidationError("theta_low must be below theta_high");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0, 1)");
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be non-negative");
}

double map_suvr_abeta(double s, const SuvrMapParams& p) {
  if (s <= p.theta_low) return 0.0;
  if (s >= p.theta_high) return 1.0;
  return (s - p.theta_low) / (p.theta_high - p.theta_low);
}

double map_suvr_tau(double s, Phase phase, const SuvrMapParams& p) {
  const double lin = std::clamp((s - p.theta_low) / (p.theta_high - p.theta_low), 0.0, 1.0);
  switch (phase) {
    case Phase::Stationary: return 0.0;
    case Phase::Lag: return p.gamma * lin;
    case Phase::Active: return lin;
    case Phase::Saturation: return 1.0;
  }
  return 0.0;
}

PhaseRow classify_phase(std::span<const double> means, double threshold, bool early_region, const SuvrMapParams& p) {
  const std::size_t n = means.size();
  PhaseRow row;
  row.phases.assign(n, Phase::Stationary);
  if (n == 0) return row;

  std::optional<std::size_t> onset;
  if (early_region) {
    onset = 0;
  } else {
    std::optional<std::size_t> cross;
    for (std::size_t k = 0; k < n; ++k) {
      if (means[k] >= threshold) {
        cross = k;
        break;
      }
    }
    if (cross) {
      const std::size_t k = *cross;
      if (k == 0) {
        onset = 0;
      } else if (means[k - 1] >= threshold - p.epsilon) {
        onset = k - 1;
      } else {
        onset = k >= 2 ? k - 2 : 0;
      }
    } else {
      row.never_crossed = true;
    }
  }
  row.active_onset = onset;

  const std::size_t first_active = onset.value_or(n);
  bool lagging = false;
  for (std::size_t k = 0; k < first_active; ++k) {
    lagging = lagging || means[k] > p.theta_low;
    row.phases[k] = lagging ? Phase::Lag : Phase::Stationary;
  }
  bool saturated = false;
  for (std::size_t k = first_active; k < n; ++k) {
    saturated = saturated || means[k] >= p.theta_high;
    row.phases[k] = saturated ? Phase::Saturation : Phase::Active;
  }
  return row;
}

// ---------------------------------------------------------------------------

std::optional<double> crossing_time(std::span<const double> times, std::span<const double> values, double level) {
  if (times.size() != values.size()) throw ValidationError("crossing_time: size mismatch");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] >= level) {
      if (k == 0) return times[0];
      const double v0 = values[k - 1];
      const double v1 = values[k];
      return times[k - 1] + (level - v0) / (v1 - v0) * (times[k] - times[k - 1]);
    }
  }
  return std::nullopt;
}

MacrostageTimeline reconstruct_macrostages(std::span<const double> times, const RoiCurves& curves, double c_crit) {
  if (!(c_crit > 0.0 && c_crit < 1.0)) throw ValidationError("c_crit must lie in (0, 1)");
  if (times.empty()) throw ValidationError("reconstruct_macrostages: empty time grid");
  MacrostageTimeline tl;
  tl.c_crit = c_crit;
  const double t_end = times.back();
  auto boundary = [&](BraakStage s) {
    auto it = curves.find(s);
    if (it == curves.end()) throw ValidationError("missing Braak " + to_string(s) + " curve");
    auto t = crossing_time(times, it->second, c_crit);
    if (!t) {
      tl.warnings.push_back("Braak " + to_string(s) + " never reaches c_crit; boundary saturated at T");
      return t_end;
    }
    return *t;
  };
  tl.t1 = boundary(BraakStage::III);
  tl.t2 = boundary(BraakStage::V);
  tl.ordered = tl.t1 < tl.t2;
  if (!tl.ordered) tl.warnings.push_back("macrostage boundaries are not strictly ordered");
  return tl;
}

std::string macrostage_of(BraakStage stage) {
  switch (stage) {
    case BraakStage::II: return "0-II";
    case BraakStage::III:
    case BraakStage::IV: return "III-IV";
    case BraakStage::V:
    case BraakStage::VI: return "V-VI";
  }
  return "?";
}

std::string to_string(OrderVerdict verdict) {
  switch (verdict) {
    case OrderVerdict::Anatomical: return "anatomical";
    case OrderVerdict::Violated: return "violated";
    case OrderVerdict::Degenerate: return "degenerate";
  }
  return "?";
}

ActivationOrder braak_activation_order(std::span<const double> times, const RoiCurves& curves, double c_crit,
                                       double tie_tolerance) {
  ActivationOrder result;
  for (const auto& [stage, curve] : curves) result.order.push_back({stage, crossing_time(times, curve, c_crit)});
  const double inf = std::numeric_limits<double>::infinity();
  auto key = [&](const StageActivation& a) { return a.time.value_or(inf); };
  std::stable_sort(result.order.begin(), result.order.end(),
                   [&](const StageActivation& a, const StageActivation& b) { return key(a) < key(b); });

  double lo = inf;
  double hi = -inf;
  bool all_active = true;
  for (const auto& a : result.order) {
    if (!a.time) {
      all_active = false;
      continue;
    }
    lo = std::min(lo, *a.time);
    hi = std::max(hi, *a.time);
  }
  if (lo == inf || (all_active && hi - lo <= tie_tolerance)) {
    result.verdict = OrderVerdict::Degenerate;
    return result;
  }
  // Anatomical: times strictly increase with stage index. Unactivated stages count as
  // later than every activated one but must themselves trail the activated stages.
  bool ok = true;
  double last = -inf;
  bool seen_inactive = false;
  for (const auto& [stage, curve] : curves) {
    auto t = crossing_time(times, curve, c_crit);
    if (!t) {
      seen_inactive = true;
      continue;
    }
    if (seen_inactive || !(*t > last + tie_tolerance)) ok = false;
    last = *t;
  }
  result.verdict = ok ? OrderVerdict::Anatomical : OrderVerdict::Violated;
  return result;
}

RoiCurves roi_curves(const Trajectory& traj, const BraakAtlas& atlas, const DGSystem& system) {
  RoiCurves out;
  for (const auto& [stage, ids] : atlas.stages) out[stage] = spatial_average(traj, region_average(system, ids));
  return out;
}

RoiCurves roi_curves(const Trajectory& traj, const BraakAtlas& atlas, const Connectome& graph) {
  RoiCurves out;
  for (const auto& [stage, ids] : atlas.stages) out[stage] = spatial_average(traj, region_average(graph, ids));
  return out;
}

AbetaAnchors abeta_anchors(std::span<const double> times, std::span<const double> neocortex_mean,
                           const SuvrMapParams& p, double saturation_level) {
  AbetaAnchors a;
  a.positivity_level = map_suvr_abeta(p.positivity_cutoff, p);
  a.saturation_level = saturation_level;
  a.positivity_time = crossing_time(times, neocortex_mean, a.positivity_level);
  a.saturation_time = crossing_time(times, neocortex_mean, saturation_level);
  return a;
}

std::size_t count_inflections(std::span<const double> values, double rel_tol) {
  if (values.size() < 5) return 0;
  std::vector<double> smooth(values.size());
  smooth.front() = values.front();
  smooth.back() = values.back();
  for (std::size_t i = 1; i + 1 < values.size(); ++i) smooth[i] = (values[i - 1] + values[i] + values[i + 1]) / 3.0;
  std::vector<double> d2;
  for (std::size_t i = 2; i + 2 < smooth.size(); ++i) d2.push_back(smooth[i - 1] - 2.0 * smooth[i] + smooth[i + 1]);
  double peak = 0.0, scale = 0.0;
  for (double v : d2) peak = std::max(peak, std::abs(v));
  for (double v : values) scale = std::max(scale, std::abs(v));
  // Second differences of a straight line are pure rounding noise.
  const double floor = std::max(rel_tol * peak, 64.0 * std::numeric_limits<double>::epsilon() * scale);
  std::size_t changes = 0;
  int last_sign = 0;
  for (double v : d2) {
    if (std::abs(v) <= floor) continue;
    const int s = v > 0.0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) ++changes;
    last_sign = s;
  }
  return changes;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : f.substr(b, e - b + 1));
  }
  return out;
}

int parse_subject_stage(const std::string& t, const std::string& source, std::size_t line) {
  static const std::map<std::string, int> roman{{"0", 0}, {"I", 1},  {"II", 2}, {"III", 3},
                                                {"IV", 4}, {"V", 5}, {"VI", 6}};
  std::string u;
  for (unsigned char c : t) u.push_back(static_cast<char>(std::toupper(c)));
  if (auto it = roman.find(u); it != roman.end()) return it->second;
  try {
    std::size_t used = 0;
    const int v = std::stoi(t, &used);
    if (used == t.size() && v >= 0 && v <= 6) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError(source, line, "invalid Braak stage '" + t + "'");
}

double parse_number(const std::string& t, const std::string& source, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError(source, line, "invalid number '" + t + "'");
}

}  // namespace

std::vector<ClinicalRecord> parse_clinical_csv(const std::string& text, const std::string& source) {
  std::vector<ClinicalRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line.rfind('#', 0) == 0) continue;
    const auto f = split_fields(line);
    if (f.size() != 5) throw ParseError(source, line_no, "expected protein,braak_stage,region,mean_suvr,sd_suvr");
    if (f[0] == "protein") continue;
    out.push_back({f[0], parse_subject_stage(f[1], source, line_no), f[2], parse_number(f[3], source, line_no),
                   parse_number(f[4], source, line_no)});
  }
  return out;
}

std::vector<ClinicalRecord> load_clinical_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open clinical data " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_clinical_csv(ss.str(), path.string());
}

std::map<std::string, double> load_thresholds_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open thresholds file " + path.string());
  std::map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line.rfind('#', 0) == 0) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) throw ParseError(path.string(), line_no, "expected region,threshold");
    if (fields[0] == "region") continue;
    out[fields[0]] = parse_number(fields[1], path.string(), line_no);
  }
  return out;
}

}  // namespace fkneuro

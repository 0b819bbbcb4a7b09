#include "fkneuro/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "fkneuro/dg_solver.hpp"
#include "fkneuro/dg_space.hpp"
#include "fkneuro/dg_system.hpp"
#include "fkneuro/errors.hpp"
#include "fkneuro/graph_solver.hpp"
#include "fkneuro/numfmt.hpp"

namespace fkneuro {

namespace {

constexpr double kReportLow = -0.05;
constexpr double kReportHigh = 1.05;

std::string opt17(const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "," : "") + std::to_string(ids[i]);
  return s;
}

double interpolate(const std::vector<double>& times, const std::vector<double>& values, double t) {
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin());
  const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return (1.0 - w) * values[k - 1] + w * values[k];
}

void check_range(const std::vector<double>& times, const std::vector<double>& curve, const std::string& label,
                 std::vector<std::string>& warnings) {
  for (std::size_t n = 0; n < curve.size(); ++n) {
    const double v = curve[n];
    if (!std::isfinite(v) || v < kReportLow || v > kReportHigh) {
      warnings.push_back(fmt17(times[n]) + "," + label + "," + fmt17(v));
    }
  }
}

}  // namespace

std::set<int> Domain::region_ids() const {
  return kind == DomainKind::Mesh ? mesh->region_ids() : graph->region_ids();
}

Domain load_domain(const SimulationConfig& config) {
  Domain d;
  d.kind = config.domain;
  if (config.domain == DomainKind::Mesh) {
    if (config.mesh.empty()) throw ValidationError("config: mesh path is required for a mesh run");
    d.mesh = std::make_shared<const PolytopalMesh>(load_mesh(config.mesh, &d.warnings));
  } else {
    if (config.graph.empty()) throw ValidationError("config: graph path is required for a graph run");
    d.graph = std::make_shared<const Connectome>(load_connectome(config.graph, config.k));
  }
  if (!config.atlas.empty()) {
    BraakAtlas atlas = build_braak_atlas(load_naming_table(config.atlas));
    validate_atlas_against(atlas, d.region_ids());
    d.atlas = std::move(atlas);
  }
  return d;
}

std::set<int> resolve_seed(const SimulationConfig& config, const Domain& domain) {
  const std::set<int> available = domain.region_ids();
  if (config.seed_all) return available;
  std::set<int> seeds(config.seed_regions.begin(), config.seed_regions.end());
  if (seeds.empty()) {
    if (!domain.atlas) throw ValidationError("config: seed_regions is empty and no atlas supplies a default seed");
    seeds = config.protein == Protein::Abeta ? domain.atlas->abeta_seed : domain.atlas->tau_seed;
  }
  std::vector<int> missing;
  for (int r : seeds) {
    if (!available.count(r)) missing.push_back(r);
  }
  if (!missing.empty()) throw ValidationError("seed regions not present in the domain: " + join_ids(missing));
  return seeds;
}

SimulationResult simulate(const SimulationConfig& config, const Domain& domain) {
  config.validate();
  const std::set<int> seeds = resolve_seed(config, domain);
  SimulationResult result;
  result.warnings = domain.warnings;
  const std::set<int> regions = domain.region_ids();
  result.regions.assign(regions.begin(), regions.end());

  std::vector<RegionAverage> per_region;
  RegionAverage global;
  if (domain.kind == DomainKind::Mesh) {
    auto space = std::make_shared<const DGSpace>(domain.mesh, config.ell);
    const DGSystem system(space, DiffusionModel{config.d_ext, config.d_axn},
                          AssemblyParameters{config.alpha, config.eta0, config.quad_order});
    MeshRunOptions opts;
    opts.dt = config.dt;
    opts.final_time = config.T;
    opts.solver.tolerance = config.solver_tol;
    opts.solver.max_iterations_factor = config.solver_maxit_factor;
    result.trajectory = solve_fk_mesh(system, seed_regions(*space, seeds, config.seed_value), opts);
    for (int r : result.regions) per_region.push_back(region_average(system, {r}));
    global = region_average(system, regions);
    if (domain.atlas) {
      result.roi = roi_curves(result.trajectory, *domain.atlas, system);
      result.neocortex_mean = spatial_average(result.trajectory, region_average(system, domain.atlas->neocortex));
    }
  } else {
    const Connectome& graph = *domain.graph;
    GraphRunOptions opts;
    opts.dt = config.dt;
    opts.final_time = config.T;
    opts.step.paper_literal_rhs = config.paper_literal_rhs;
    result.trajectory = solve_fk_graph(graph, config.alpha, seed_nodes(graph, seeds, config.seed_value), opts);
    for (int r : result.regions) per_region.push_back(region_average(graph, {r}));
    global = region_average(graph, regions);
    if (domain.atlas) {
      result.roi = roi_curves(result.trajectory, *domain.atlas, graph);
      result.neocortex_mean = spatial_average(result.trajectory, region_average(graph, domain.atlas->neocortex));
    }
  }

  const auto& times = result.trajectory.times;
  for (std::size_t i = 0; i < per_region.size(); ++i) {
    result.region_means.push_back(spatial_average(result.trajectory, per_region[i]));
    check_range(times, result.region_means.back(), "region_" + std::to_string(result.regions[i]), result.warnings);
  }
  result.global_mean = spatial_average(result.trajectory, global);
  check_range(times, result.global_mean, "global", result.warnings);
  for (const auto& [stage, curve] : result.roi) check_range(times, curve, "braak_" + to_string(stage), result.warnings);
  return result;
}

void write_trajectory_csv(const SimulationResult& result, const std::filesystem::path& path) {
  auto f = open_out(path);
  f << "t";
  for (int r : result.regions) f << ",region_" << r;
  f << ",global\n";
  const auto& times = result.trajectory.times;
  for (std::size_t n = 0; n < times.size(); ++n) {
    f << fmt17(times[n]);
    for (const auto& curve : result.region_means) f << ',' << fmt17(curve[n]);
    f << ',' << fmt17(result.global_mean[n]) << '\n';
  }
}

StagingReport stage_report(const std::vector<double>& times, const RoiCurves& roi, double c_crit) {
  StagingReport rep;
  for (const auto& [stage, curve] : roi) rep.activation[stage] = crossing_time(times, curve, c_crit);
  rep.timeline = reconstruct_macrostages(times, roi, c_crit);
  // Crossing times closer than a thousandth of a step are numerically tied.
  const double tie = times.size() > 1 ? 1e-3 * (times[1] - times[0]) : 0.0;
  rep.order = braak_activation_order(times, roi, c_crit, tie);
  return rep;
}

void write_staging_csv(const StagingReport& report, const std::filesystem::path& path) {
  auto f = open_out(path);
  f << "stage,activation_time_years,macrostage\n";
  for (const auto& [stage, t] : report.activation) {
    f << to_string(stage) << ',' << opt17(t) << ',' << macrostage_of(stage) << '\n';
  }
}

SimulationResult run(const SimulationConfig& config) {
  config.validate();
  const Domain domain = load_domain(config);
  SimulationResult result = simulate(config, domain);

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  write_trajectory_csv(result, dir / "trajectory.csv");
  {
    auto f = open_out(dir / "config.txt");
    f << format_config(config);
  }
  if (config.dump_state) write_state_dump(result.trajectory, dir / "state.bin");

  const auto& times = result.trajectory.times;
  auto report = open_out(dir / "report.txt");
  report << "protein = " << to_string(config.protein) << '\n'
         << "domain = " << to_string(config.domain) << '\n'
         << "alpha = " << fmt17(config.alpha) << '\n'
         << "final_global_mean = " << fmt17(result.global_mean.back()) << '\n'
         << "t_half = " << opt17(crossing_time(times, result.global_mean, 0.5)) << '\n';

  if (!result.roi.empty()) {
    auto f = open_out(dir / "roi_averages.csv");
    f << "t";
    for (const auto& [stage, curve] : result.roi) f << ",braak_" << to_string(stage);
    f << ",neocortex\n";
    for (std::size_t n = 0; n < times.size(); ++n) {
      f << fmt17(times[n]);
      for (const auto& [stage, curve] : result.roi) f << ',' << fmt17(curve[n]);
      f << ',' << fmt17(result.neocortex_mean[n]) << '\n';
    }

    const StagingReport rep = stage_report(times, result.roi, config.c_crit);
    write_staging_csv(rep, dir / "staging.csv");
    report << "c_crit = " << fmt17(config.c_crit) << '\n'
           << "macrostage_t1 = " << fmt17(rep.timeline.t1) << '\n'
           << "macrostage_t2 = " << fmt17(rep.timeline.t2) << '\n'
           << "activation_order = ";
    for (std::size_t i = 0; i < rep.order.order.size(); ++i) {
      report << (i ? "<" : "") << to_string(rep.order.order[i].stage);
    }
    report << "\norder_verdict = " << to_string(rep.order.verdict) << '\n';
    for (const auto& w : rep.timeline.warnings) result.warnings.push_back("staging: " + w);
    if (config.protein == Protein::Abeta) {
      const AbetaAnchors a = abeta_anchors(times, result.neocortex_mean, config.suvr, config.saturation_level);
      report << "abeta_positivity_level = " << fmt17(a.positivity_level) << '\n'
             << "abeta_positivity_time = " << opt17(a.positivity_time) << '\n'
             << "abeta_saturation_time = " << opt17(a.saturation_time) << '\n';
    }
  }
  report << "warnings = " << result.warnings.size() << '\n';

  if (!result.warnings.empty()) {
    auto f = open_out(dir / "warnings.csv");
    f << "warning\n";
    for (const auto& w : result.warnings) f << w << '\n';
  }
  return result;
}

std::size_t worker_count(int requested, std::size_t jobs) {
  std::size_t n = requested > 0 ? static_cast<std::size_t>(requested)
                                : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FKNEURO_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

std::vector<SweepRow> sweep_in_memory(const SimulationConfig& config, const Domain& domain,
                                      const std::vector<double>& alphas) {
  std::vector<SweepRow> rows(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) throw ValidationError("sweep: alpha values must be positive");
    rows[i].alpha = alphas[i];
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= rows.size() || failed.load()) return;
      SweepRow& row = rows[i];
      try {
        SimulationConfig c = config;
        c.alpha = row.alpha;
        SimulationResult r = simulate(c, domain);
        row.t_half = crossing_time(r.trajectory.times, r.global_mean, 0.5);
        row.t_saturation = crossing_time(r.trajectory.times, r.global_mean, config.saturation_level);
        row.global_mean = std::move(r.global_mean);
        row.completed = true;
      } catch (const std::exception& e) {
        row.error = e.what();
        failed.store(true);
      }
    }
  };
  const std::size_t workers = worker_count(config.threads, rows.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::vector<SweepRow> sweep(const SimulationConfig& config, const std::vector<double>& alphas) {
  config.validate();
  if (alphas.empty()) throw ValidationError("sweep: empty alpha list");
  const Domain domain = load_domain(config);
  std::vector<SweepRow> rows = sweep_in_memory(config, domain, alphas);

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  {
    auto f = open_out(dir / "sweep.csv");
    f << "alpha,t_half,t_saturation\n";
    for (const auto& r : rows) {
      if (r.completed) f << fmt17(r.alpha) << ',' << opt17(r.t_half) << ',' << opt17(r.t_saturation) << '\n';
    }
  }
  for (const auto& r : rows) {
    if (!r.error.empty()) throw Error("sweep: run with alpha=" + fmt17(r.alpha) + " failed: " + r.error);
  }
  std::vector<const SweepRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const SweepRow* a, const SweepRow* b) { return a->alpha < b->alpha; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!sorted[i]->t_half) throw Error("sweep: alpha=" + fmt17(sorted[i]->alpha) + " never reaches a mean of 0.5");
    if (i > 0 && !(*sorted[i]->t_half < *sorted[i - 1]->t_half)) {
      throw Error("sweep: t_half is not strictly decreasing at alpha=" + fmt17(sorted[i]->alpha));
    }
  }
  return rows;
}

ComparisonReport compare_results(const SimulationResult& mesh, const SimulationResult& graph, double c_crit) {
  std::vector<int> only_mesh;
  std::vector<int> only_graph;
  std::set_difference(mesh.regions.begin(), mesh.regions.end(), graph.regions.begin(), graph.regions.end(),
                      std::back_inserter(only_mesh));
  std::set_difference(graph.regions.begin(), graph.regions.end(), mesh.regions.begin(), mesh.regions.end(),
                      std::back_inserter(only_graph));
  if (!only_mesh.empty() || !only_graph.empty()) {
    throw ValidationError("region vocabulary mismatch; mesh only: [" + join_ids(only_mesh) + "], graph only: [" +
                          join_ids(only_graph) + "]");
  }
  const auto& tm = mesh.trajectory.times;
  const auto& tg = graph.trajectory.times;
  if (std::abs(tm.back() - tg.back()) > 1e-9 * std::max(1.0, tm.back())) {
    throw ValidationError("compare: mesh and graph runs cover different time spans");
  }

  ComparisonReport rep;
  auto add = [&](const std::string& label, const std::vector<double>& cm, const std::vector<double>& cg) {
    RegionComparison row;
    row.label = label;
    for (std::size_t n = 0; n < tm.size(); ++n) {
      row.max_abs_deviation = std::max(row.max_abs_deviation, std::abs(cm[n] - interpolate(tg, cg, tm[n])));
    }
    row.t_mesh = crossing_time(tm, cm, c_crit);
    row.t_graph = crossing_time(tg, cg, c_crit);
    if (row.t_mesh && row.t_graph) row.lead = *row.t_mesh - *row.t_graph;
    rep.rows.push_back(std::move(row));
  };
  for (std::size_t i = 0; i < mesh.regions.size(); ++i) {
    add("region_" + std::to_string(mesh.regions[i]), mesh.region_means[i], graph.region_means[i]);
  }
  if (!mesh.roi.empty() && !graph.roi.empty()) {
    for (const auto& [stage, curve] : mesh.roi) {
      auto it = graph.roi.find(stage);
      if (it != graph.roi.end()) add("braak_" + to_string(stage), curve, it->second);
    }
    auto order_of = [&](const RoiCurves& roi, const std::vector<double>& times) {
      std::vector<std::pair<double, int>> keyed;
      for (BraakStage s : {BraakStage::II, BraakStage::III, BraakStage::IV}) {
        auto it = roi.find(s);
        if (it == roi.end()) continue;
        keyed.emplace_back(crossing_time(times, it->second, c_crit).value_or(std::numeric_limits<double>::infinity()),
                           static_cast<int>(s));
      }
      std::stable_sort(keyed.begin(), keyed.end(), [](auto& a, auto& b) { return a.first < b.first; });
      std::vector<int> order;
      for (auto& k : keyed) order.push_back(k.second);
      return order;
    };
    rep.order_agrees_through_iv = order_of(mesh.roi, tm) == order_of(graph.roi, tg);
  }
  return rep;
}

ComparisonReport compare(const SimulationConfig& mesh_config, const SimulationConfig& graph_config) {
  if (mesh_config.domain != DomainKind::Mesh || graph_config.domain != DomainKind::Graph) {
    throw ValidationError("compare: expects one mesh config and one graph config");
  }
  mesh_config.validate();
  graph_config.validate();
  const Domain dm = load_domain(mesh_config);
  const Domain dg = load_domain(graph_config);
  {
    // Fail on vocabulary before spending time on the runs.
    const auto a = dm.region_ids();
    const auto b = dg.region_ids();
    if (a != b) {
      std::vector<int> only_mesh;
      std::vector<int> only_graph;
      std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_mesh));
      std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_graph));
      throw ValidationError("region vocabulary mismatch; mesh only: [" + join_ids(only_mesh) + "], graph only: [" +
                            join_ids(only_graph) + "]");
    }
  }
  const SimulationResult rm = simulate(mesh_config, dm);
  const SimulationResult rg = simulate(graph_config, dg);
  ComparisonReport rep = compare_results(rm, rg, mesh_config.c_crit);

  const std::filesystem::path dir(mesh_config.output_dir);
  std::filesystem::create_directories(dir);
  auto f = open_out(dir / "comparison.csv");
  f << "label,max_abs_deviation,t_mesh,t_graph,lead\n";
  for (const auto& r : rep.rows) {
    f << r.label << ',' << fmt17(r.max_abs_deviation) << ',' << opt17(r.t_mesh) << ',' << opt17(r.t_graph) << ','
      << opt17(r.lead) << '\n';
  }
  auto s = open_out(dir / "comparison_summary.txt");
  s << "c_crit = " << fmt17(mesh_config.c_crit) << '\n';
  s << "order_agrees_through_IV = "
    << (rep.order_agrees_through_iv ? (*rep.order_agrees_through_iv ? "true" : "false") : "n/a") << '\n';
  return rep;
}

}  // namespace fkneuro

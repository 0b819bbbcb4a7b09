#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fkneuro/atlas.hpp"
#include "fkneuro/config.hpp"
#include "fkneuro/connectome.hpp"
#include "fkneuro/errors.hpp"
#include "fkneuro/experiments.hpp"
#include "fkneuro/mesh.hpp"
#include "fkneuro/numfmt.hpp"
#include "fkneuro/staging.hpp"

using namespace fkneuro;

namespace {

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

bool is_flag_key(const std::string& key) { return key == "paper_literal_rhs" || key == "dump_state"; }

/// Config-key flags shared by the simulation subcommands.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;

  void attach(CLI::App* app, const std::string& prefix = "") {
    app->add_option("--" + prefix + "config", config_path, "key=value config file");
    for (const std::string& key : config_keys()) {
      if (is_flag_key(key)) {
        app->add_flag("--" + prefix + dashed(key), flags[key]);
      } else {
        app->add_option("--" + prefix + dashed(key), values[key]);
      }
    }
  }

  SimulationConfig build(const CLI::App* app, const std::string& prefix = "") const {
    ConfigEntries entries;
    std::string source = "<flags>";
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw Error("cannot open config " + config_path);
      std::stringstream ss;
      ss << f.rdbuf();
      entries = parse_config_entries(ss.str(), config_path);
      source = config_path;
    }
    for (const std::string& key : config_keys()) {
      if (app->count("--" + prefix + dashed(key)) == 0) continue;
      if (is_flag_key(key)) {
        entries.push_back({key, flags.at(key) ? "true" : "false", 0});
      } else {
        entries.push_back({key, values.at(key), 0});
      }
    }
    return config_from_entries(entries, source);
  }
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw ValidationError("invalid number '" + item + "' in list");
    }
  }
  return out;
}

const std::vector<double> kAbetaAlphas{0.08, 0.27, 0.61, 1.24, 2.18, 3.87, 6.30, 8.54};
const std::vector<double> kTauAlphas{0.20, 0.37, 0.52, 0.70, 0.98, 1.33, 1.89, 2.57};

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

/// Reads `t,...,braak_<stage>,...` columns from a CSV such as roi_averages.csv.
std::pair<std::vector<double>, RoiCurves> read_roi_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw ParseError(path, 1, "empty file");
  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string h;
    while (std::getline(ss, h, ',')) header.push_back(h);
  }
  if (header.empty() || header[0] != "t") throw ParseError(path, 1, "first column must be t");
  std::map<std::size_t, BraakStage> columns;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].rfind("braak_", 0) == 0) columns[c] = parse_braak_stage(header[c].substr(6));
  }
  if (columns.empty()) throw ParseError(path, 1, "no braak_<stage> columns");
  std::vector<double> times;
  RoiCurves roi;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      try {
        v = std::stod(cell);
      } catch (const std::logic_error&) {
        throw ParseError(path, line_no, "invalid number '" + cell + "'");
      }
      if (c == 0) times.push_back(v);
      else if (auto it = columns.find(c); it != columns.end()) roi[it->second].push_back(v);
      ++c;
    }
    if (c != header.size()) throw ParseError(path, line_no, "wrong number of columns");
  }
  return {times, roi};
}

int run_stage(const std::string& path, double c_crit, const std::string& out) {
  auto [times, roi] = read_roi_csv(path);
  const StagingReport rep = stage_report(times, roi, c_crit);
  write_staging_csv(rep, out);
  std::cout << "t1 = " << fmt17(rep.timeline.t1) << "\nt2 = " << fmt17(rep.timeline.t2)
            << "\norder_verdict = " << to_string(rep.order.verdict) << '\n';
  print_warnings(rep.timeline.warnings);
  return 0;
}

int run_map_suvr(const std::string& protein_text, const std::string& s_list, const std::string& phase_text,
                 const std::string& clinical, const std::string& thresholds, const std::string& out_path) {
  const Protein protein = parse_config("protein = " + protein_text).protein;
  const SuvrMapParams p = protein == Protein::Abeta ? SuvrMapParams::abeta() : SuvrMapParams::tau();
  std::ostringstream o;
  auto emit = [&](double s, const std::string& phase, double s_hat) {
    o << fmt17(s) << ',' << phase << ',' << fmt17(s_hat) << '\n';
  };
  if (!clinical.empty()) {
    const auto records = load_clinical_csv(clinical);
    std::map<std::string, double> thr;
    if (!thresholds.empty()) thr = load_thresholds_csv(thresholds);
    // region -> subject stage -> mean SUVR
    std::map<std::string, std::map<int, double>> by_region;
    for (const auto& r : records) {
      if (parse_config("protein = " + r.protein).protein == protein) by_region[r.region][r.braak_stage] = r.mean_suvr;
    }
    o << "region,braak_stage,s,phase,s_hat\n";
    for (const auto& [region, stages] : by_region) {
      std::vector<double> means;
      std::vector<int> ids;
      for (const auto& [k, m] : stages) {
        ids.push_back(k);
        means.push_back(m);
      }
      if (protein == Protein::Abeta) {
        for (std::size_t i = 0; i < means.size(); ++i) {
          o << region << ',' << ids[i] << ',';
          emit(means[i], "none", map_suvr_abeta(means[i], p));
        }
        continue;
      }
      auto it = thr.find(region);
      if (it == thr.end()) throw ValidationError("no abnormality threshold for region '" + region + "'");
      bool early = false;
      try {
        std::string label = region;
        if (label.rfind("braak_", 0) == 0) label = label.substr(6);
        early = parse_braak_stage(label) == BraakStage::II;
      } catch (const ValidationError&) {
      }
      const PhaseRow row = classify_phase(means, it->second, early, p);
      if (row.never_crossed) std::cerr << "warning: region " << region << " never crosses its threshold\n";
      for (std::size_t i = 0; i < means.size(); ++i) {
        o << region << ',' << ids[i] << ',';
        emit(means[i], to_string(row.phases[i]), map_suvr_tau(means[i], row.phases[i], p));
      }
    }
  } else {
    o << "s,phase,s_hat\n";
    for (double s : parse_list(s_list)) {
      if (protein == Protein::Abeta) {
        emit(s, "none", map_suvr_abeta(s, p));
      } else {
        const Phase ph = parse_phase(phase_text);
        emit(s, to_string(ph), map_suvr_tau(s, ph, p));
      }
    }
  }
  if (out_path.empty()) {
    std::cout << o.str();
  } else {
    std::ofstream f(out_path);
    if (!f) throw Error("cannot write " + out_path);
    f << o.str();
  }
  return 0;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_list(text)) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-Kolmogorov protein spreading on meshes and connectomes"};
  app.require_subcommand(0, 1);
  bool show_defaults = false;
  std::string defaults_protein = "abeta";
  app.add_flag("--show-defaults", show_defaults, "print the default configuration and exit");
  app.add_option("--defaults-protein", defaults_protein, "protein used by --show-defaults");

  auto* simulate_cmd = app.add_subcommand("simulate", "single run; writes trajectory, averages and staging");
  ConfigFlags simulate_flags;
  simulate_flags.attach(simulate_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "alpha sensitivity sweep");
  ConfigFlags sweep_flags;
  sweep_flags.attach(sweep_cmd);
  std::string alphas;
  std::string preset;
  sweep_cmd->add_option("--alphas", alphas, "comma-separated alpha values");
  sweep_cmd->add_option("--preset", preset, "abeta | tau: built-in alpha lists")
      ->check(CLI::IsMember({"abeta", "tau"}));

  auto* stage_cmd = app.add_subcommand("stage", "Braak staging from ROI average curves");
  std::string stage_input;
  std::string stage_out = "staging.csv";
  double stage_ccrit = 0.5;
  stage_cmd->add_option("--trajectory", stage_input, "CSV with t and braak_<stage> columns")->required();
  stage_cmd->add_option("--c-crit", stage_ccrit, "activation threshold");
  stage_cmd->add_option("--out", stage_out, "staging CSV");

  auto* map_cmd = app.add_subcommand("map-suvr", "SUVR to relative concentration");
  std::string map_protein = "abeta";
  std::string map_s;
  std::string map_phase = "active";
  std::string map_clinical;
  std::string map_thresholds;
  std::string map_out;
  map_cmd->add_option("--protein", map_protein);
  map_cmd->add_option("--s", map_s, "comma-separated SUVR values");
  map_cmd->add_option("--phase", map_phase, "tau phase for --s values");
  map_cmd->add_option("--clinical", map_clinical, "protein,braak_stage,region,mean_suvr,sd_suvr CSV");
  map_cmd->add_option("--thresholds", map_thresholds, "region,threshold CSV (tau)");
  map_cmd->add_option("--out", map_out, "output CSV (default stdout)");

  auto* compare_cmd = app.add_subcommand("compare", "mesh versus graph region averages");
  std::string mesh_config;
  std::string graph_config;
  std::string compare_out;
  compare_cmd->add_option("--mesh-config", mesh_config)->required();
  compare_cmd->add_option("--graph-config", graph_config)->required();
  compare_cmd->add_option("--output-dir", compare_out, "overrides the mesh config output_dir");

  auto* gen_mesh_cmd = app.add_subcommand("gen-mesh", "structured simplicial mesh with slab labels");
  int gm_dim = 2;
  int gm_n = 10;
  double gm_extent = 100.0;
  int gm_axis = 0;
  std::string gm_labels = "2,3,4,5,6";
  std::string gm_out;
  std::string gm_atlas;
  std::string gm_axon = "1,0,0";
  gen_mesh_cmd->add_option("--dim", gm_dim)->check(CLI::Range(2, 3));
  gen_mesh_cmd->add_option("--n", gm_n, "cells per axis")->check(CLI::PositiveNumber);
  gen_mesh_cmd->add_option("--extent", gm_extent, "side length (mm)");
  gen_mesh_cmd->add_option("--axis", gm_axis, "slab axis")->check(CLI::Range(0, 2));
  gen_mesh_cmd->add_option("--labels", gm_labels, "region id per slab");
  gen_mesh_cmd->add_option("--out", gm_out)->required();
  gen_mesh_cmd->add_option("--axon", gm_axon, "axonal direction x,y,z for every element");
  gen_mesh_cmd->add_option("--atlas-out", gm_atlas, "naming table mapping labels 2..6 to Braak II..VI");

  auto* gen_graph_cmd = app.add_subcommand("gen-graph", "chain graph or mesh region graph");
  std::string gg_chain;
  std::string gg_from_mesh;
  double gg_count = 1.0;
  double gg_length = 1.0;
  double gg_k = 1.0;
  double gg_diffusivity = 8.0;
  std::string gg_out;
  gen_graph_cmd->add_option("--chain", gg_chain, "comma-separated region ids along a path");
  gen_graph_cmd->add_option("--from-mesh", gg_from_mesh, "mesh file reduced to its region adjacency graph");
  gen_graph_cmd->add_option("--tract-count", gg_count);
  gen_graph_cmd->add_option("--tract-length", gg_length);
  gen_graph_cmd->add_option("--k", gg_k);
  gen_graph_cmd->add_option("--diffusivity", gg_diffusivity);
  gen_graph_cmd->add_option("--out", gg_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (show_defaults) {
      std::cout << format_config(default_config(parse_config("protein = " + defaults_protein).protein));
      return 0;
    }
    if (*simulate_cmd) {
      const SimulationConfig cfg = simulate_flags.build(simulate_cmd);
      const SimulationResult r = run(cfg);
      print_warnings(r.warnings);
      std::cout << "wrote " << cfg.output_dir << " (" << r.trajectory.num_steps() << " steps, final mean "
                << fmt17(r.global_mean.back()) << ")\n";
    } else if (*sweep_cmd) {
      const SimulationConfig cfg = sweep_flags.build(sweep_cmd);
      std::vector<double> list = parse_list(alphas);
      if (list.empty()) {
        const std::string which = preset.empty() ? to_string(cfg.protein) : preset;
        list = which == "tau" ? kTauAlphas : kAbetaAlphas;
      }
      const auto rows = sweep(cfg, list);
      std::cout << "wrote " << cfg.output_dir << "/sweep.csv (" << rows.size() << " runs)\n";
    } else if (*stage_cmd) {
      return run_stage(stage_input, stage_ccrit, stage_out);
    } else if (*map_cmd) {
      return run_map_suvr(map_protein, map_s, map_phase, map_clinical, map_thresholds, map_out);
    } else if (*compare_cmd) {
      SimulationConfig mc = load_config(mesh_config);
      const SimulationConfig gc = load_config(graph_config);
      if (!compare_out.empty()) mc.output_dir = compare_out;
      const ComparisonReport rep = compare(mc, gc);
      std::cout << "wrote " << mc.output_dir << "/comparison.csv (" << rep.rows.size() << " rows)\n";
    } else if (*gen_mesh_cmd) {
      SlabLabeling labeling{gm_axis, parse_ints(gm_labels)};
      if (gm_axis >= gm_dim) throw ValidationError("gen-mesh: axis must be below dim");
      const std::vector<double> a = parse_list(gm_axon);
      if (a.size() != 3) throw ValidationError("gen-mesh: --axon needs three components");
      write_mesh(generate_structured_mesh(gm_dim, gm_n, gm_extent, labeling, Point{a[0], a[1], a[2]}), gm_out);
      if (!gm_atlas.empty()) {
        NamingTable table;
        for (int id : labeling.labels) {
          if (id >= 2 && id <= 6) table.emplace_back(to_string(static_cast<BraakStage>(id)), id);
        }
        write_naming_table(table, gm_atlas);
      }
    } else if (*gen_graph_cmd) {
      if (!gg_chain.empty() == !gg_from_mesh.empty()) {
        throw ValidationError("gen-graph: give exactly one of --chain and --from-mesh");
      }
      if (!gg_chain.empty()) {
        write_connectome(make_chain_graph(parse_ints(gg_chain), gg_count, gg_length, gg_k), gg_out);
      } else {
        write_connectome(reduce_mesh_to_graph(load_mesh(gg_from_mesh), gg_diffusivity), gg_out);
      }
    } else {
      std::cout << app.help();
    }
  } catch (const ParseError& e) {
    std::cerr << "fkneuro: parse error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "fkneuro: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const TopologyError& e) {
    std::cerr << "fkneuro: topology error: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "fkneuro: solver error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "fkneuro: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

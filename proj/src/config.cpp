#include "fkneuro/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fkneuro/errors.hpp"
#include "fkneuro/numfmt.hpp"

namespace fkneuro {

std::string to_string(Protein p) { return p == Protein::Abeta ? "abeta" : "tau"; }
std::string to_string(DomainKind d) { return d == DomainKind::Mesh ? "mesh" : "graph"; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

struct Reader {
  const std::string& source;
  std::size_t line;
  const std::string& key;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source, line, key + ": " + what); }

  double number(const std::string& v) const {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size() && std::isfinite(d)) return d;
    } catch (const std::logic_error&) {
    }
    fail("invalid number '" + v + "'");
  }
  int integer(const std::string& v) const {
    try {
      std::size_t used = 0;
      const int i = std::stoi(v, &used);
      if (used == v.size()) return i;
    } catch (const std::logic_error&) {
    }
    fail("invalid integer '" + v + "'");
  }
  bool boolean(const std::string& v) const {
    const std::string l = lower(v);
    if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
    if (l == "false" || l == "0" || l == "no" || l == "off") return false;
    fail("invalid boolean '" + v + "'");
  }
};

Protein parse_protein(const std::string& v, const Reader& r) {
  const std::string l = lower(v);
  if (l == "abeta" || l == "amyloid" || l == "ab") return Protein::Abeta;
  if (l == "tau" || l == "taup") return Protein::Tau;
  r.fail("unknown protein '" + v + "' (abeta | tau)");
}

using Setter = std::function<void(SimulationConfig&, const std::string&, const Reader&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"protein", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.protein = parse_protein(v, r); }},
      {"domain",
       [](SimulationConfig& c, const std::string& v, const Reader& r) {
         const std::string l = lower(v);
         if (l == "mesh") c.domain = DomainKind::Mesh;
         else if (l == "graph") c.domain = DomainKind::Graph;
         else r.fail("unknown domain '" + v + "' (mesh | graph)");
       }},
      {"mesh", [](SimulationConfig& c, const std::string& v, const Reader&) { c.mesh = v; }},
      {"graph", [](SimulationConfig& c, const std::string& v, const Reader&) { c.graph = v; }},
      {"atlas", [](SimulationConfig& c, const std::string& v, const Reader&) { c.atlas = v; }},
      {"output_dir", [](SimulationConfig& c, const std::string& v, const Reader&) { c.output_dir = v; }},
      {"ell", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.ell = r.integer(v); }},
      {"eta0", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.eta0 = r.number(v); }},
      {"quad_order", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.quad_order = r.integer(v); }},
      {"dt", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.dt = r.number(v); }},
      {"T", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.T = r.number(v); }},
      {"d_ext", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.d_ext = r.number(v); }},
      {"d_axn", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.d_axn = r.number(v); }},
      {"alpha", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.alpha = r.number(v); }},
      {"k",
       [](SimulationConfig& c, const std::string& v, const Reader& r) {
         if (v.empty()) c.k.reset();
         else c.k = r.number(v);
       }},
      {"seed_regions",
       [](SimulationConfig& c, const std::string& v, const Reader& r) {
         c.seed_regions.clear();
         c.seed_all = lower(v) == "all";
         if (c.seed_all || v.empty()) return;
         std::istringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) {
           item = trim(item);
           if (!item.empty()) c.seed_regions.push_back(r.integer(item));
         }
       }},
      {"seed_value", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.seed_value = r.number(v); }},
      {"solver_tol", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.solver_tol = r.number(v); }},
      {"solver_maxit_factor",
       [](SimulationConfig& c, const std::string& v, const Reader& r) { c.solver_maxit_factor = r.number(v); }},
      {"c_crit", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.c_crit = r.number(v); }},
      {"theta_low", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.suvr.theta_low = r.number(v); }},
      {"theta_high",
       [](SimulationConfig& c, const std::string& v, const Reader& r) { c.suvr.theta_high = r.number(v); }},
      {"gamma", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.suvr.gamma = r.number(v); }},
      {"epsilon", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.suvr.epsilon = r.number(v); }},
      {"positivity_cutoff",
       [](SimulationConfig& c, const std::string& v, const Reader& r) { c.suvr.positivity_cutoff = r.number(v); }},
      {"saturation_level",
       [](SimulationConfig& c, const std::string& v, const Reader& r) { c.saturation_level = r.number(v); }},
      {"paper_literal_rhs",
       [](SimulationConfig& c, const std::string& v, const Reader& r) { c.paper_literal_rhs = r.boolean(v); }},
      {"dump_state", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.dump_state = r.boolean(v); }},
      {"threads", [](SimulationConfig& c, const std::string& v, const Reader& r) { c.threads = r.integer(v); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "protein",    "domain",     "mesh",       "graph",      "atlas",        "output_dir",
      "ell",        "eta0",       "quad_order", "dt",         "T",            "d_ext",
      "d_axn",      "alpha",      "k",          "seed_regions", "seed_value", "solver_tol",
      "solver_maxit_factor",      "c_crit",     "theta_low",  "theta_high",   "gamma",
      "epsilon",    "positivity_cutoff",        "saturation_level",           "paper_literal_rhs",
      "dump_state", "threads"};
  return keys;
}

SimulationConfig default_config(Protein protein) {
  SimulationConfig c;
  c.protein = protein;
  if (protein == Protein::Tau) {
    c.alpha = 0.70;
    c.suvr = SuvrMapParams::tau();
  }
  return c;
}

void SimulationConfig::validate() const {
  auto bad = [](const std::string& what) { throw ValidationError("config: " + what); };
  if (!(dt > 0.0)) bad("dt must be positive");
  if (!(T >= dt)) bad("T must be at least dt");
  if (!(alpha > 0.0)) bad("alpha must be positive");
  if (!(seed_value > 0.0 && seed_value <= 1.0)) bad("seed_value must lie in (0, 1]");
  if (ell < 0) bad("ell must be non-negative");
  if (quad_order != 0 && quad_order < 2 * ell) bad("quad_order must be 0 or at least 2 * ell");
  if (!(eta0 > 0.0)) bad("eta0 must be positive");
  if (!(d_ext >= 0.0 && d_axn >= 0.0)) bad("diffusivities must be non-negative");
  if (k && !(*k > 0.0)) bad("k must be positive");
  if (!(solver_tol > 0.0 && solver_tol < 1.0)) bad("solver_tol must lie in (0, 1)");
  if (!(solver_maxit_factor > 0.0)) bad("solver_maxit_factor must be positive");
  if (!(c_crit > 0.0 && c_crit < 1.0)) bad("c_crit must lie in (0, 1)");
  if (!(saturation_level > 0.0 && saturation_level < 1.0)) bad("saturation_level must lie in (0, 1)");
  if (threads < 0) bad("threads must be non-negative");
  suvr.validate();
}

ConfigEntries parse_config_entries(const std::string& text, const std::string& source) {
  ConfigEntries out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected key = value");
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (!setters().count(e.key)) throw ParseError(source, line_no, "unknown key '" + e.key + "'");
    out.push_back(std::move(e));
  }
  return out;
}

SimulationConfig config_from_entries(const ConfigEntries& entries, const std::string& source) {
  // The protein selects defaults for the remaining keys, so it is applied first.
  Protein protein = Protein::Abeta;
  for (const auto& e : entries) {
    if (e.key == "protein") protein = parse_protein(e.value, Reader{source, e.line, e.key});
  }
  SimulationConfig c = default_config(protein);
  for (const auto& e : entries) {
    auto it = setters().find(e.key);
    if (it == setters().end()) throw ParseError(source, e.line, "unknown key '" + e.key + "'");
    it->second(c, e.value, Reader{source, e.line, e.key});
  }
  return c;
}

SimulationConfig parse_config(const std::string& text, const std::string& source) {
  return config_from_entries(parse_config_entries(text, source), source);
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string format_config(const SimulationConfig& c) {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  std::string seeds;
  if (c.seed_all) {
    seeds = "all";
  } else {
    for (std::size_t i = 0; i < c.seed_regions.size(); ++i) {
      if (i) seeds += ",";
      seeds += std::to_string(c.seed_regions[i]);
    }
  }
  kv("protein", to_string(c.protein));
  kv("domain", to_string(c.domain));
  kv("mesh", c.mesh);
  kv("graph", c.graph);
  kv("atlas", c.atlas);
  kv("output_dir", c.output_dir);
  kv("ell", std::to_string(c.ell));
  kv("eta0", fmt17(c.eta0));
  kv("quad_order", std::to_string(c.quad_order));
  kv("dt", fmt17(c.dt));
  kv("T", fmt17(c.T));
  kv("d_ext", fmt17(c.d_ext));
  kv("d_axn", fmt17(c.d_axn));
  kv("alpha", fmt17(c.alpha));
  kv("k", c.k ? fmt17(*c.k) : std::string());
  kv("seed_regions", seeds);
  kv("seed_value", fmt17(c.seed_value));
  kv("solver_tol", fmt17(c.solver_tol));
  kv("solver_maxit_factor", fmt17(c.solver_maxit_factor));
  kv("c_crit", fmt17(c.c_crit));
  kv("theta_low", fmt17(c.suvr.theta_low));
  kv("theta_high", fmt17(c.suvr.theta_high));
  kv("gamma", fmt17(c.suvr.gamma));
  kv("epsilon", fmt17(c.suvr.epsilon));
  kv("positivity_cutoff", fmt17(c.suvr.positivity_cutoff));
  kv("saturation_level", fmt17(c.saturation_level));
  kv("paper_literal_rhs", flag(c.paper_literal_rhs));
  kv("dump_state", flag(c.dump_state));
  kv("threads", std::to_string(c.threads));
  return o.str();
}

}  // namespace fkneuro

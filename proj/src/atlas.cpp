#include "fkneuro/atlas.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

#include "fkneuro/errors.hpp"

namespace fkneuro {

namespace {

std::string normalize(const std::string& name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

/// Drops hemisphere/cortex prefixes of FreeSurfer-style labels ("ctx-lh-entorhinal").
std::string strip_label_prefix(std::string s) {
  if (s.rfind("ctx", 0) == 0) s = s.substr(3);
  for (const char* p : {"left", "right", "lh", "rh"}) {
    const std::string pre(p);
    if (s.size() > pre.size() && s.rfind(pre, 0) == 0) return s.substr(pre.size());
  }
  return s;
}

std::optional<BraakStage> stage_from_name(const std::string& raw) {
  std::string s = normalize(raw);
  if (s.rfind("braak", 0) == 0) s = s.substr(5);
  static const std::map<std::string, BraakStage> table{
      {"ii", BraakStage::II}, {"iii", BraakStage::III}, {"iv", BraakStage::IV}, {"v", BraakStage::V},
      {"vi", BraakStage::VI}, {"2", BraakStage::II},    {"3", BraakStage::III}, {"4", BraakStage::IV},
      {"5", BraakStage::V},   {"6", BraakStage::VI}};
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

}  // namespace

std::string to_string(BraakStage stage) {
  switch (stage) {
    case BraakStage::II: return "II";
    case BraakStage::III: return "III";
    case BraakStage::IV: return "IV";
    case BraakStage::V: return "V";
    case BraakStage::VI: return "VI";
  }
  return "?";
}

BraakStage parse_braak_stage(const std::string& text) {
  auto s = stage_from_name(text);
  if (!s) throw ValidationError("not a Braak stage in II..VI: '" + text + "'");
  return *s;
}

const std::map<BraakStage, std::vector<std::string>>& braak_region_names() {
  static const std::map<BraakStage, std::vector<std::string>> names{
      {BraakStage::II, {"entorhinal", "hippocampus"}},
      {BraakStage::III, {"amygdala", "parahippocampal", "fusiform", "lingual"}},
      {BraakStage::IV, {"insula", "inferior temporal", "lateral temporal", "posterior cingulate", "inferior parietal"}},
      {BraakStage::V,
       {"orbitofrontal", "superior temporal", "inferior frontal", "cuneus", "anterior cingulate", "supramarginal",
        "lateral occipital", "precuneus", "superior frontal", "rostromedial frontal"}},
      {BraakStage::VI, {"paracentral", "postcentral", "precentral", "pericalcarine"}},
  };
  return names;
}

std::set<int> BraakAtlas::all_regions() const {
  std::set<int> all;
  for (const auto& [stage, ids] : stages) all.insert(ids.begin(), ids.end());
  return all;
}

BraakAtlas build_braak_atlas(const NamingTable& labels, bool strict) {
  std::map<std::string, std::set<int>> by_name;
  std::map<BraakStage, std::set<int>> direct;
  for (const auto& [name, id] : labels) {
    if (auto s = stage_from_name(name)) {
      direct[*s].insert(id);
    } else {
      by_name[strip_label_prefix(normalize(name))].insert(id);
    }
  }

  BraakAtlas atlas;
  std::vector<std::string> missing;
  for (const auto& [stage, names] : braak_region_names()) {
    std::set<int>& ids = atlas.stages[stage];
    if (auto it = direct.find(stage); it != direct.end()) ids = it->second;
    for (const std::string& n : names) {
      auto it = by_name.find(normalize(n));
      if (it != by_name.end()) {
        ids.insert(it->second.begin(), it->second.end());
      } else if (!direct.count(stage)) {
        missing.push_back(n);
      }
    }
  }
  if (strict && !missing.empty()) {
    std::string msg = "unresolved Braak region names:";
    for (const auto& n : missing) msg += " '" + n + "'";
    throw ValidationError(msg);
  }
  atlas.unresolved = missing;
  for (const auto& [stage, ids] : atlas.stages) {
    if (ids.empty()) throw ValidationError("Braak stage " + to_string(stage) + " resolves to no region");
  }

  // A region id listed under two stages keeps the earliest one.
  std::set<int> taken;
  for (auto& [stage, ids] : atlas.stages) {
    for (auto it = ids.begin(); it != ids.end();) {
      if (taken.count(*it)) {
        it = ids.erase(it);
      } else {
        taken.insert(*it);
        ++it;
      }
    }
    if (ids.empty()) throw ValidationError("Braak stage " + to_string(stage) + " only repeats earlier regions");
  }

  for (BraakStage s : {BraakStage::IV, BraakStage::V, BraakStage::VI}) {
    atlas.neocortex.insert(atlas.stages[s].begin(), atlas.stages[s].end());
  }
  if (auto it = by_name.find("neocortex"); it != by_name.end()) atlas.neocortex.insert(it->second.begin(), it->second.end());
  atlas.abeta_seed = atlas.neocortex;
  if (auto it = by_name.find("cerebralcortex"); it != by_name.end()) atlas.abeta_seed = it->second;

  for (const char* n : {"entorhinal", "parahippocampal"}) {
    if (auto it = by_name.find(n); it != by_name.end()) atlas.tau_seed.insert(it->second.begin(), it->second.end());
  }
  if (atlas.tau_seed.empty()) atlas.tau_seed = atlas.stages[BraakStage::II];
  return atlas;
}

NamingTable parse_naming_table(const std::string& text, const std::string& source) {
  NamingTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line.rfind('#', 0) == 0) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ParseError(source, line_no, "expected 'region_name,region_id'");
    std::string name = line.substr(0, comma);
    std::string id = line.substr(comma + 1);
    id.erase(std::remove_if(id.begin(), id.end(), [](unsigned char c) { return std::isspace(c); }), id.end());
    if (normalize(name) == "regionname" && id == "region_id") continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(id, &used);
      if (used != id.size()) throw std::invalid_argument(id);
      const auto b = name.find_first_not_of(" \t");
      const auto e = name.find_last_not_of(" \t\r");
      table.emplace_back(b == std::string::npos ? std::string() : name.substr(b, e - b + 1), v);
    } catch (const std::logic_error&) {
      throw ParseError(source, line_no, "invalid region id '" + id + "'");
    }
  }
  return table;
}

NamingTable load_naming_table(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open atlas file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_naming_table(ss.str(), path.string());
}

void write_naming_table(const NamingTable& table, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write atlas file " + path.string());
  f << "region_name,region_id\n";
  for (const auto& [name, id] : table) f << name << "," << id << "\n";
}

void validate_atlas_against(const BraakAtlas& atlas, const std::set<int>& domain_regions) {
  std::string missing;
  for (int id : atlas.all_regions()) {
    if (!domain_regions.count(id)) missing += " " + std::to_string(id);
  }
  if (!missing.empty()) throw ValidationError("atlas regions absent from the domain:" + missing);
}

}  // namespace fkneuro

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace fkneuro {

/// PET-based Braak stages covered by the staging analysis (stage I is not resolvable).
enum class BraakStage : int { II = 2, III = 3, IV = 4, V = 5, VI = 6 };

inline constexpr std::array<BraakStage, 5> kBraakStages{BraakStage::II, BraakStage::III, BraakStage::IV,
                                                        BraakStage::V, BraakStage::VI};

std::string to_string(BraakStage stage);
/// Accepts roman numerals with optional "braak" prefix ("IV", "braak_iv", "Braak4", "4").
BraakStage parse_braak_stage(const std::string& text);

/// Anatomical region names grouped by Braak stage.
const std::map<BraakStage, std::vector<std::string>>& braak_region_names();

using NamingTable = std::vector<std::pair<std::string, int>>;

struct BraakAtlas {
  std::map<BraakStage, std::set<int>> stages;
  /// Region ids averaged for amyloid-beta (stages IV to VI plus rows named "neocortex").
  std::set<int> neocortex;
  /// Cerebral cortex seeding for amyloid-beta.
  std::set<int> abeta_seed;
  /// Entorhinal cortex plus parahippocampal gyrus; stage II when those names are absent.
  std::set<int> tau_seed;
  /// Anatomical names that matched no row (only populated in lenient mode).
  std::vector<std::string> unresolved;

  const std::set<int>& stage(BraakStage s) const { return stages.at(s); }
  std::set<int> all_regions() const;
};

/// Resolves the built-in stage table against a region naming table. Names are
/// compared after lower-casing and dropping non-alphanumerics; a row naming a
/// stage directly ("II", "braak_iii") assigns its id to that stage. In strict
/// mode any unmatched anatomical name of a stage without direct rows is an
/// error; in lenient mode only an empty stage is.
BraakAtlas build_braak_atlas(const NamingTable& labels, bool strict = true);

NamingTable parse_naming_table(const std::string& text, const std::string& source = "<string>");
NamingTable load_naming_table(const std::filesystem::path& path);
void write_naming_table(const NamingTable& table, const std::filesystem::path& path);

/// Checks that every atlas region exists in `domain_regions`.
void validate_atlas_against(const BraakAtlas& atlas, const std::set<int>& domain_regions);

}  // namespace fkneuro

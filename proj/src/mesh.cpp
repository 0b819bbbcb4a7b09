#include "fkneuro/mesh.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "fkneuro/errors.hpp"
#include "fkneuro/numfmt.hpp"

namespace fkneuro {

namespace {

using FacetKey = std::array<double, 9>;

struct FacetKeyHash {
  std::size_t operator()(const FacetKey& k) const noexcept {
    std::size_t h = 0;
    for (double v : k) h ^= std::hash<double>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

struct FacetOccurrence {
  std::size_t element;
  Simplex facet;
  Point opposite;
};

FacetKey make_key(std::array<Point, 3> pts, int count) {
  for (auto& p : pts) {
    for (auto& c : p) c += 0.0;  // folds -0.0 into +0.0
  }
  std::sort(pts.begin(), pts.begin() + count);
  FacetKey key{};
  for (int i = 0; i < count; ++i) {
    for (int a = 0; a < 3; ++a) key[3 * i + a] = pts[i][a];
  }
  return key;
}

}  // namespace

PolytopalMesh::PolytopalMesh(int dim, std::vector<Point> vertices, std::vector<Element> elements,
                             std::vector<std::string>* warnings)
    : dim_(dim), vertices_(std::move(vertices)), elements_(std::move(elements)) {
  if (dim_ != 2 && dim_ != 3) throw ValidationError("mesh dimension must be 2 or 3");
  if (elements_.empty()) throw ValidationError("mesh has no elements");

  for (std::size_t e = 0; e < elements_.size(); ++e) {
    Element& el = elements_[e];
    const std::string tag = "element " + std::to_string(e);
    if (el.vertex_ids.size() < static_cast<std::size_t>(dim_ + 1)) {
      throw TopologyError(tag + ": needs at least " + std::to_string(dim_ + 1) + " vertices");
    }
    for (std::size_t id : el.vertex_ids) {
      if (id >= vertices_.size()) throw TopologyError(tag + ": vertex id " + std::to_string(id) + " out of range");
    }
    if (el.sub_tessellation.empty()) {
      if (el.vertex_ids.size() != static_cast<std::size_t>(dim_ + 1)) {
        throw TopologyError(tag + ": non-simplex element without a sub-tessellation");
      }
      Simplex s;
      for (int i = 0; i <= dim_; ++i) s.vertices[i] = vertices_[el.vertex_ids[i]];
      el.sub_tessellation.push_back(s);
      el.explicit_sub_tessellation = false;
    }

    el.box.min = vertices_[el.vertex_ids.front()];
    el.box.max = el.box.min;
    for (std::size_t id : el.vertex_ids) {
      for (int a = 0; a < dim_; ++a) {
        el.box.min[a] = std::min(el.box.min[a], vertices_[id][a]);
        el.box.max[a] = std::max(el.box.max[a], vertices_[id][a]);
      }
    }
    el.diameter = 0.0;
    for (std::size_t i = 0; i < el.vertex_ids.size(); ++i) {
      for (std::size_t j = i + 1; j < el.vertex_ids.size(); ++j) {
        el.diameter = std::max(el.diameter, norm(vertices_[el.vertex_ids[i]] - vertices_[el.vertex_ids[j]]));
      }
    }
    if (!(el.diameter > 0.0)) throw TopologyError(tag + ": degenerate element (h = 0)");

    el.measure = 0.0;
    const double tol = 1e-12 * el.diameter;
    for (const Simplex& s : el.sub_tessellation) {
      for (int i = 0; i <= dim_; ++i) {
        if (!el.box.contains(s.vertices[i], dim_, tol)) {
          throw TopologyError(tag + ": sub-tessellation point outside the element bounding box");
        }
      }
      const double m = simplex_measure(std::span<const Point>(s.vertices.data(), dim_ + 1));
      if (!(m > 0.0)) throw TopologyError(tag + ": degenerate sub-tessellation simplex");
      el.measure += m;
    }

    for (int a = dim_; a < 3; ++a) el.axon[a] = 0.0;
    const double an = norm(el.axon);
    if (std::abs(an - 1.0) > 1e-12) {
      if (an < 0.9 || an > 1.1) {
        throw ValidationError(tag + ": axonal direction norm " + std::to_string(an) + " is not unit");
      }
      el.axon = (1.0 / an) * el.axon;
      if (warnings) warnings->push_back(tag + ": axonal direction normalized (norm was " + std::to_string(an) + ")");
    }
  }
  measure_ = 0.0;
  for (const Element& el : elements_) measure_ += el.measure;
  build_faces();
}

void PolytopalMesh::build_faces() {
  const int nf = dim_;  // vertices per facet
  std::unordered_map<FacetKey, std::size_t, FacetKeyHash> index;
  std::vector<std::vector<FacetOccurrence>> groups;

  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (const Simplex& s : elements_[e].sub_tessellation) {
      for (int skip = 0; skip <= dim_; ++skip) {
        FacetOccurrence occ{e, {}, s.vertices[skip]};
        std::array<Point, 3> pts{};
        int c = 0;
        for (int i = 0; i <= dim_; ++i) {
          if (i == skip) continue;
          occ.facet.vertices[c] = s.vertices[i];
          pts[c] = s.vertices[i];
          ++c;
        }
        const FacetKey key = make_key(pts, nf);
        auto [it, inserted] = index.try_emplace(key, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(occ);
      }
    }
  }

  for (auto& group : groups) {
    // Facets seen twice inside one element are interior to its sub-tessellation.
    std::map<std::size_t, int> per_element;
    for (const auto& occ : group) ++per_element[occ.element];
    std::vector<const FacetOccurrence*> owners;
    for (const auto& occ : group) {
      const int n = per_element[occ.element];
      if (n > 2) throw TopologyError("facet repeated more than twice inside element " + std::to_string(occ.element));
      if (n == 1) owners.push_back(&occ);
    }
    if (owners.empty()) continue;
    if (owners.size() > 2) {
      std::string ids;
      for (const auto* o : owners) ids += " " + std::to_string(o->element);
      throw TopologyError("face shared by more than two elements:" + ids);
    }
    const FacetOccurrence& first = *owners.front();
    const double m = simplex_measure(std::span<const Point>(first.facet.vertices.data(), nf));
    if (owners.size() == 1) {
      boundary_faces_.push_back(
          {first.facet, m, first.element,
           facet_normal(std::span<const Point>(first.facet.vertices.data(), nf), first.opposite, dim_)});
    } else {
      const FacetOccurrence* l = owners[0];
      const FacetOccurrence* r = owners[1];
      if (r->element < l->element) std::swap(l, r);
      internal_faces_.push_back(
          {l->facet, m, l->element, r->element,
           facet_normal(std::span<const Point>(l->facet.vertices.data(), nf), l->opposite, dim_)});
    }
  }
}

std::set<int> PolytopalMesh::region_ids() const {
  std::set<int> ids;
  for (const Element& el : elements_) ids.insert(el.region);
  return ids;
}

double PolytopalMesh::region_measure(const std::set<int>& regions) const {
  double m = 0.0;
  for (const Element& el : elements_) {
    if (regions.count(el.region)) m += el.measure;
  }
  return m;
}

// ---------------------------------------------------------------------------
// ASCII format

namespace {

class LineReader {
 public:
  LineReader(const std::string& text, std::string source) : in_(text), source_(std::move(source)) {}

  /// Next non-empty, non-comment line split into tokens.
  std::vector<std::string> next(const char* expecting) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string t; ss >> t;) tokens.push_back(t);
      if (!tokens.empty()) return tokens;
    }
    throw ParseError(source_, line_no_, std::string("unexpected end of file, expecting ") + expecting);
  }

  bool at_end() {
    const auto pos = in_.tellg();
    const std::size_t saved = line_no_;
    std::string line;
    while (std::getline(in_, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        in_.clear();
        in_.seekg(pos);
        line_no_ = saved;
        return false;
      }
    }
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

  double to_double(const std::string& t) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) fail("invalid number '" + t + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("invalid number '" + t + "'");
    }
  }

  long long to_int(const std::string& t) const {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(t, &used);
      if (used != t.size()) fail("invalid integer '" + t + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("invalid integer '" + t + "'");
    }
  }

  std::size_t to_count(const std::string& t) const {
    const long long v = to_int(t);
    if (v < 0) fail("negative count '" + t + "'");
    return static_cast<std::size_t>(v);
  }

 private:
  std::istringstream in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

}  // namespace

PolytopalMesh parse_mesh(const std::string& text, const std::string& source, std::vector<std::string>* warnings) {
  LineReader in(text, source);
  auto header = in.next("FKMESH header");
  if (header.size() != 3 || header[0] != "FKMESH") in.fail("expected header 'FKMESH <version> <dim>'");
  if (header[1] != "1") in.fail("unsupported mesh format version " + header[1]);
  const long long dim_ll = in.to_int(header[2]);
  if (dim_ll != 2 && dim_ll != 3) in.fail("dimension must be 2 or 3");
  const int dim = static_cast<int>(dim_ll);

  auto vh = in.next("VERTICES section");
  if (vh.size() != 2 || vh[0] != "VERTICES") in.fail("expected 'VERTICES <n>'");
  const std::size_t nv = in.to_count(vh[1]);
  std::vector<Point> vertices(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    auto t = in.next("vertex coordinates");
    if (t.size() != static_cast<std::size_t>(dim)) in.fail("expected " + std::to_string(dim) + " coordinates");
    for (int a = 0; a < dim; ++a) vertices[i][a] = in.to_double(t[a]);
  }

  auto eh = in.next("ELEMENTS section");
  if (eh.size() != 2 || eh[0] != "ELEMENTS") in.fail("expected 'ELEMENTS <m>'");
  const std::size_t ne = in.to_count(eh[1]);
  std::vector<Element> elements(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    auto t = in.next("element record");
    const std::size_t k = in.to_count(t[0]);
    if (t.size() != 1 + k + 1 + static_cast<std::size_t>(dim)) {
      in.fail("element record needs count, " + std::to_string(k) + " vertex ids, region and " +
              std::to_string(dim) + " axon components");
    }
    for (std::size_t i = 0; i < k; ++i) {
      const long long id = in.to_int(t[1 + i]);
      if (id < 0 || static_cast<std::size_t>(id) >= nv) in.fail("vertex id out of range");
      elements[e].vertex_ids.push_back(static_cast<std::size_t>(id));
    }
    elements[e].region = static_cast<int>(in.to_int(t[1 + k]));
    for (int a = 0; a < dim; ++a) elements[e].axon[a] = in.to_double(t[2 + k + a]);
    for (int a = dim; a < 3; ++a) elements[e].axon[a] = 0.0;
  }

  if (!in.at_end()) {
    auto sh = in.next("SUBTESS section");
    if (sh.size() != 2 || sh[0] != "SUBTESS") in.fail("expected 'SUBTESS <m>'");
    if (in.to_count(sh[1]) != ne) in.fail("SUBTESS count must equal the element count");
    const std::size_t per_simplex = static_cast<std::size_t>((dim + 1) * dim);
    for (std::size_t e = 0; e < ne; ++e) {
      auto t = in.next("sub-tessellation record");
      const std::size_t s = in.to_count(t[0]);
      if (t.size() != 1 + s * per_simplex) {
        in.fail("sub-tessellation record needs " + std::to_string(s * per_simplex) + " coordinates");
      }
      std::size_t p = 1;
      for (std::size_t j = 0; j < s; ++j) {
        Simplex simplex;
        for (int v = 0; v <= dim; ++v) {
          for (int a = 0; a < dim; ++a) simplex.vertices[v][a] = in.to_double(t[p++]);
        }
        elements[e].sub_tessellation.push_back(simplex);
      }
      elements[e].explicit_sub_tessellation = s > 0;
    }
    if (!in.at_end()) in.fail("trailing content after SUBTESS section");
  }
  return PolytopalMesh(dim, std::move(vertices), std::move(elements), warnings);
}

PolytopalMesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open mesh file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_mesh(ss.str(), path.string(), warnings);
}

std::string format_mesh(const PolytopalMesh& mesh) {
  const int d = mesh.dim();
  std::ostringstream out;
  out << "FKMESH 1 " << d << "\n";
  out << "VERTICES " << mesh.vertices().size() << "\n";
  for (const Point& p : mesh.vertices()) {
    for (int a = 0; a < d; ++a) out << (a ? " " : "") << fmt17(p[a]);
    out << "\n";
  }
  out << "ELEMENTS " << mesh.num_elements() << "\n";
  bool any_explicit = false;
  for (const Element& el : mesh.elements()) {
    out << el.vertex_ids.size();
    for (std::size_t id : el.vertex_ids) out << " " << id;
    out << " " << el.region;
    for (int a = 0; a < d; ++a) out << " " << fmt17(el.axon[a]);
    out << "\n";
    any_explicit = any_explicit || el.explicit_sub_tessellation;
  }
  if (any_explicit) {
    out << "SUBTESS " << mesh.num_elements() << "\n";
    for (const Element& el : mesh.elements()) {
      if (!el.explicit_sub_tessellation) {
        out << "0\n";
        continue;
      }
      out << el.sub_tessellation.size();
      for (const Simplex& s : el.sub_tessellation) {
        for (int v = 0; v <= d; ++v) {
          for (int a = 0; a < d; ++a) out << " " << fmt17(s.vertices[v][a]);
        }
      }
      out << "\n";
    }
  }
  return out.str();
}

void write_mesh(const PolytopalMesh& mesh, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write mesh file " + path.string());
  f << format_mesh(mesh);
}

// ---------------------------------------------------------------------------
// Structured generator

PolytopalMesh generate_structured_mesh(int dim, int n, double extent, const SlabLabeling& labeling,
                                       const Point& axon) {
  if (dim != 2 && dim != 3) throw ValidationError("generate_structured_mesh: dim must be 2 or 3");
  if (n < 1) throw ValidationError("generate_structured_mesh: need at least one cell per axis");
  if (!(extent > 0.0)) throw ValidationError("generate_structured_mesh: extent must be positive");
  if (labeling.labels.empty()) throw ValidationError("generate_structured_mesh: empty label list");
  if (labeling.axis < 0 || labeling.axis >= dim) throw ValidationError("generate_structured_mesh: bad slab axis");

  const std::size_t np = static_cast<std::size_t>(n) + 1;
  const double h = extent / n;
  auto vid = [np](std::size_t i, std::size_t j, std::size_t k) { return i + np * (j + np * k); };

  std::vector<Point> vertices;
  const std::size_t nk = dim == 3 ? np : 1;
  for (std::size_t k = 0; k < nk; ++k) {
    for (std::size_t j = 0; j < np; ++j) {
      for (std::size_t i = 0; i < np; ++i) {
        vertices.push_back({i * h, j * h, dim == 3 ? k * h : 0.0});
      }
    }
  }
  // Pin the far corner exactly at `extent` so the band labeling is exact.
  for (Point& p : vertices) {
    for (int a = 0; a < dim; ++a) {
      if (std::abs(p[a] - extent) < 1e-12 * extent) p[a] = extent;
    }
  }

  const int bands = static_cast<int>(labeling.labels.size());
  auto label_of = [&](const std::vector<std::size_t>& ids) {
    double c = 0.0;
    for (std::size_t id : ids) c += vertices[id][labeling.axis];
    c /= static_cast<double>(ids.size());
    int b = static_cast<int>(std::floor(c / extent * bands));
    b = std::clamp(b, 0, bands - 1);
    return labeling.labels[b];
  };

  std::vector<Element> elements;
  auto push = [&](std::vector<std::size_t> ids) {
    Element el;
    el.region = label_of(ids);
    el.vertex_ids = std::move(ids);
    el.axon = axon;
    elements.push_back(std::move(el));
  };

  const std::size_t un = static_cast<std::size_t>(n);
  if (dim == 2) {
    for (std::size_t j = 0; j < un; ++j) {
      for (std::size_t i = 0; i < un; ++i) {
        push({vid(i, j, 0), vid(i + 1, j, 0), vid(i + 1, j + 1, 0)});
        push({vid(i, j, 0), vid(i + 1, j + 1, 0), vid(i, j + 1, 0)});
      }
    }
  } else {
    std::array<int, 3> perm{0, 1, 2};
    std::vector<std::array<int, 3>> perms;
    do {
      perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (std::size_t k = 0; k < un; ++k) {
      for (std::size_t j = 0; j < un; ++j) {
        for (std::size_t i = 0; i < un; ++i) {
          for (const auto& p : perms) {
            std::array<std::size_t, 3> c{i, j, k};
            std::vector<std::size_t> ids{vid(c[0], c[1], c[2])};
            for (int step = 0; step < 3; ++step) {
              ++c[p[step]];
              ids.push_back(vid(c[0], c[1], c[2]));
            }
            push(std::move(ids));
          }
        }
      }
    }
  }
  return PolytopalMesh(dim, std::move(vertices), std::move(elements));
}

}  // namespace fkneuro

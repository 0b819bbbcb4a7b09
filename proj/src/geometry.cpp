#include "fkneuro/geometry.hpp"

#include "fkneuro/errors.hpp"

namespace fkneuro {

double simplex_measure(std::span<const Point> v) {
  switch (v.size()) {
    case 2:
      return norm(v[1] - v[0]);
    case 3:
      return 0.5 * norm(cross(v[1] - v[0], v[2] - v[0]));
    case 4:
      return std::abs(dot(v[1] - v[0], cross(v[2] - v[0], v[3] - v[0]))) / 6.0;
    default:
      throw ValidationError("simplex_measure: expected 2 to 4 vertices");
  }
}

Point facet_normal(std::span<const Point> facet, const Point& opposite, int dim) {
  Point n{};
  if (dim == 2) {
    const Point t = facet[1] - facet[0];
    n = {t[1], -t[0], 0.0};
  } else {
    n = cross(facet[1] - facet[0], facet[2] - facet[0]);
  }
  const double len = norm(n);
  if (len == 0.0) throw TopologyError("degenerate facet with zero measure");
  n = (1.0 / len) * n;
  if (dot(n, opposite - facet[0]) > 0.0) n = -1.0 * n;
  return n;
}

}  // namespace fkneuro

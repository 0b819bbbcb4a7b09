#pragma once

#include <span>
#include <vector>

#include "fkneuro/geometry.hpp"

namespace fkneuro {

struct QuadraturePoint {
  Point x{};
  double weight = 0.0;
};

/// Gauss-Legendre nodes and weights on [0, 1].
std::vector<std::pair<double, double>> gauss_legendre(int n);

/// Collapsed-coordinate (Stroud conical product) rule on the reference k-simplex,
/// exact for polynomials of total degree <= order. Points are barycentric-free
/// reference coordinates (first k entries), weights sum to 1/k!.
const std::vector<QuadraturePoint>& reference_simplex_rule(int k, int order);

/// Maps the reference rule onto the simplex spanned by `vertices` (k+1 points in R^3).
std::vector<QuadraturePoint> simplex_rule(std::span<const Point> vertices, int order);

}  // namespace fkneuro

#pragma once

#include <array>
#include <cmath>
#include <span>

namespace fkneuro {

/// Coordinates in mm. Two-dimensional data keep the third component at zero.
using Point = std::array<double, 3>;

inline Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Point operator*(double s, const Point& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }
inline Point cross(const Point& a, const Point& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// k-dimensional measure of the simplex spanned by k+1 points (k = 1, 2, 3).
double simplex_measure(std::span<const Point> vertices);

/// Unit normal of a facet (segment in 2D, triangle in 3D), oriented away from `opposite`.
Point facet_normal(std::span<const Point> facet, const Point& opposite, int dim);

}  // namespace fkneuro

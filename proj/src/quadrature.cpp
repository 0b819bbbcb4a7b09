#include "fkneuro/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "fkneuro/errors.hpp"

namespace fkneuro {

std::vector<std::pair<double, double>> gauss_legendre(int n) {
  if (n < 1) throw ValidationError("gauss_legendre: need at least one point");
  std::vector<std::pair<double, double>> rule(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule[static_cast<std::size_t>(i)] = {0.5 * (1.0 - x), 0.5 * w};
  }
  return rule;
}

const std::vector<QuadraturePoint>& reference_simplex_rule(int k, int order) {
  if (k < 1 || k > 3) throw ValidationError("reference_simplex_rule: k must be 1, 2 or 3");
  if (order < 0) throw ValidationError("reference_simplex_rule: negative order");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::vector<QuadraturePoint>> cache;
  std::lock_guard lock(mutex);
  auto [it, inserted] = cache.try_emplace({k, order});
  if (!inserted) return it->second;

  // The collapse Jacobian adds k-1 to the degree in the first direction.
  const int n = std::max(1, (order + k) / 2 + 1);
  const auto gl = gauss_legendre(n);
  std::vector<QuadraturePoint>& rule = it->second;
  if (k == 1) {
    for (const auto& [u, wu] : gl) rule.push_back({{u, 0.0, 0.0}, wu});
  } else if (k == 2) {
    for (const auto& [u, wu] : gl) {
      for (const auto& [v, wv] : gl) rule.push_back({{u, v * (1.0 - u), 0.0}, wu * wv * (1.0 - u)});
    }
  } else {
    for (const auto& [u, wu] : gl) {
      for (const auto& [v, wv] : gl) {
        for (const auto& [w, ww] : gl) {
          rule.push_back({{u, v * (1.0 - u), w * (1.0 - u) * (1.0 - v)},
                          wu * wv * ww * (1.0 - u) * (1.0 - u) * (1.0 - v)});
        }
      }
    }
  }
  return rule;
}

std::vector<QuadraturePoint> simplex_rule(std::span<const Point> vertices, int order) {
  const int k = static_cast<int>(vertices.size()) - 1;
  const auto& ref = reference_simplex_rule(k, order);
  const double ref_measure = k == 1 ? 1.0 : (k == 2 ? 0.5 : 1.0 / 6.0);
  const double scale = simplex_measure(vertices) / ref_measure;
  std::vector<QuadraturePoint> out;
  out.reserve(ref.size());
  for (const QuadraturePoint& q : ref) {
    Point x = vertices[0];
    for (int i = 0; i < k; ++i) x = x + q.x[i] * (vertices[i + 1] - vertices[0]);
    out.push_back({x, q.weight * scale});
  }
  return out;
}

}  // namespace fkneuro

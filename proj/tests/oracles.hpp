#pragma once

// Closed-form references shared by the unit and acceptance tests. Nothing here
// calls into the library.

#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

inline double logistic(double c0, double alpha, double t) {
  const double e = std::exp(alpha * t);
  return c0 * e / (1.0 - c0 + c0 * e);
}

/// Time at which the logistic curve from c0 reaches `level`.
inline double logistic_time(double c0, double alpha, double level) {
  return std::log(level * (1.0 - c0) / (c0 * (1.0 - level))) / alpha;
}

/// log2(e_coarse / e_fine) for successive halvings.
inline std::vector<double> observed_orders(const std::vector<double>& errors) {
  std::vector<double> out;
  for (std::size_t i = 1; i < errors.size(); ++i) out.push_back(std::log2(errors[i - 1] / errors[i]));
  return out;
}

/// One scalar extrapolated Crank-Nicolson step of c' = a c (1 - c) with c^{-1} = c^0.
/// sign = +1 is the consistent form, -1 the variant with the reaction subtracted on
/// the right-hand side.
inline double cn_scalar_step(double c, double c_prev, double alpha, double dt, double sign = 1.0) {
  const double e = 1.0 - 0.5 * (3.0 * c - c_prev);
  return c * (2.0 + sign * alpha * dt * e) / (2.0 - alpha * dt * e);
}

/// Manufactured solution c = exp(-t) (1 + cos(pi x) cos(pi y)) / 4 on [0,1]^2 with
/// D = diag(dxx, dyy); the forcing makes it solve the Fisher-Kolmogorov equation.
struct Manufactured {
  double dxx = 1.0;
  double dyy = 1.0;
  double alpha = 0.61;

  double exact(double x, double y, double t) const {
    return std::exp(-t) * (1.0 + std::cos(std::numbers::pi * x) * std::cos(std::numbers::pi * y)) / 4.0;
  }
  double source(double x, double y, double t) const {
    const double pi = std::numbers::pi;
    const double g = std::cos(pi * x) * std::cos(pi * y);
    const double c = exact(x, y, t);
    const double c_t = -c;
    const double div_flux = -std::exp(-t) * pi * pi * (dxx + dyy) * g / 4.0;
    return c_t - div_flux - alpha * c * (1.0 - c);
  }
};

}  // namespace oracle

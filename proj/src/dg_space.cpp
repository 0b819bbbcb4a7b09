#include "fkneuro/dg_space.hpp"

#include <cmath>

#include "fkneuro/errors.hpp"

namespace fkneuro {

std::vector<QuadraturePoint> element_rule(const Element& element, int dim, int order) {
  std::vector<QuadraturePoint> rule;
  for (const Simplex& s : element.sub_tessellation) {
    auto part = simplex_rule(std::span<const Point>(s.vertices.data(), dim + 1), order);
    rule.insert(rule.end(), part.begin(), part.end());
  }
  return rule;
}

DGSpace::DGSpace(std::shared_ptr<const PolytopalMesh> mesh, int degree) : mesh_(std::move(mesh)), degree_(degree) {
  if (!mesh_) throw ValidationError("DGSpace: null mesh");
  if (degree_ < 1) throw ValidationError("DGSpace: polynomial degree must be >= 1");
  const int d = mesh_->dim();
  for (int total = 0; total <= degree_; ++total) {
    if (d == 2) {
      for (int i = total; i >= 0; --i) exponents_.push_back({i, total - i, 0});
    } else {
      for (int i = total; i >= 0; --i) {
        for (int j = total - i; j >= 0; --j) exponents_.push_back({i, j, total - i - j});
      }
    }
  }

  const std::size_t nb = exponents_.size();
  if (nb > 64) throw ValidationError("DGSpace: polynomial degree too high (at most 64 local basis functions)");
  basis_.resize(mesh_->num_elements());
  std::vector<double> m(nb);
  std::vector<double> dm(3 * nb);
  for (std::size_t e = 0; e < mesh_->num_elements(); ++e) {
    const Element& el = mesh_->elements()[e];
    ElementBasis& b = basis_[e];
    for (int a = 0; a < 3; ++a) {
      b.center[a] = a < d ? 0.5 * (el.box.min[a] + el.box.max[a]) : 0.0;
      const double half = a < d ? 0.5 * (el.box.max[a] - el.box.min[a]) : 1.0;
      b.inverse_half_width[a] = 1.0 / half;
    }
    b.coefficients = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));

    const auto rule = element_rule(el, d, 2 * degree_);
    // Two Cholesky passes: the second cleans up round-off left by the first.
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
      Eigen::VectorXd phi(static_cast<Eigen::Index>(nb));
      for (const QuadraturePoint& q : rule) {
        monomials(e, q.x, m, dm);
        phi = b.coefficients * Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(nb));
        gram.noalias() += q.weight * phi * phi.transpose();
      }
      gram /= el.measure;
      Eigen::LLT<Eigen::MatrixXd> llt(gram);
      if (llt.info() != Eigen::Success) {
        throw Error("DGSpace: element " + std::to_string(e) + " basis Gram matrix is not positive definite");
      }
      Eigen::MatrixXd lower = llt.matrixL();
      b.coefficients = lower.triangularView<Eigen::Lower>().solve(b.coefficients);
    }
    // Fix the sign so phi_0 = +1.
    if (b.coefficients(0, 0) < 0.0) b.coefficients.row(0) *= -1.0;
  }
}

void DGSpace::monomials(std::size_t element, const Point& x, std::span<double> m, std::span<double> dm) const {
  const ElementBasis& b = basis_[element];
  const int d = mesh_->dim();
  std::array<double, 3> xi{};
  for (int a = 0; a < d; ++a) xi[a] = (x[a] - b.center[a]) * b.inverse_half_width[a];
  // pow tables up to degree
  std::array<std::array<double, 16>, 3> pw{};
  for (int a = 0; a < 3; ++a) {
    pw[a][0] = 1.0;
    for (int k = 1; k <= degree_; ++k) pw[a][k] = pw[a][k - 1] * xi[a];
  }
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    const auto& ex = exponents_[i];
    m[i] = pw[0][ex[0]] * pw[1][ex[1]] * pw[2][ex[2]];
    if (!dm.empty()) {
      for (int a = 0; a < 3; ++a) {
        if (ex[a] == 0 || a >= d) {
          dm[3 * i + a] = 0.0;
          continue;
        }
        double v = ex[a] * b.inverse_half_width[a];
        for (int c = 0; c < 3; ++c) v *= c == a ? pw[c][ex[c] - 1] : pw[c][ex[c]];
        dm[3 * i + a] = v;
      }
    }
  }
}

void DGSpace::values(std::size_t element, const Point& x, std::span<double> out) const {
  const std::size_t nb = local_size();
  std::array<double, 64> m{};
  monomials(element, x, std::span<double>(m.data(), nb), {});
  const Eigen::MatrixXd& c = basis_[element].coefficients;
  for (std::size_t i = 0; i < nb; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j <= i; ++j) v += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * m[j];
    out[i] = v;
  }
}

void DGSpace::values_and_gradients(std::size_t element, const Point& x, std::span<double> vals,
                                   std::span<double> grads) const {
  const std::size_t nb = local_size();
  std::array<double, 64> m{};
  std::array<double, 192> dm{};
  monomials(element, x, std::span<double>(m.data(), nb), std::span<double>(dm.data(), 3 * nb));
  const Eigen::MatrixXd& c = basis_[element].coefficients;
  for (std::size_t i = 0; i < nb; ++i) {
    double v = 0.0;
    double g[3] = {0.0, 0.0, 0.0};
    for (std::size_t j = 0; j <= i; ++j) {
      const double cij = c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      v += cij * m[j];
      for (int a = 0; a < 3; ++a) g[a] += cij * dm[3 * j + a];
    }
    vals[i] = v;
    for (int a = 0; a < 3; ++a) grads[3 * i + a] = g[a];
  }
}

std::vector<double> DGSpace::constant(double value) const {
  std::vector<double> c(size(), 0.0);
  for (std::size_t e = 0; e < mesh_->num_elements(); ++e) c[offset(e)] = value;
  return c;
}

double DGSpace::evaluate(std::span<const double> coeffs, std::size_t element, const Point& x) const {
  std::array<double, 64> phi{};
  values(element, x, std::span<double>(phi.data(), local_size()));
  double v = 0.0;
  for (std::size_t i = 0; i < local_size(); ++i) v += coeffs[offset(element) + i] * phi[i];
  return v;
}

}  // namespace fkneuro

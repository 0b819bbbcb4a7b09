#include "fkneuro/dg_system.hpp"

#include <algorithm>
#include <cmath>

#include "fkneuro/errors.hpp"

namespace fkneuro {

void DiffusionModel::validate() const {
  if (!(d_ext > 0.0)) throw ValidationError("d_ext must be positive");
  if (!(d_axn >= 0.0)) throw ValidationError("d_axn must be non-negative");
}

Eigen::Matrix3d DiffusionModel::tensor(const Point& axon, int dim) const {
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  for (int a = 0; a < dim; ++a) {
    d(a, a) = d_ext;
    for (int b = 0; b < dim; ++b) d(a, b) += d_axn * axon[a] * axon[b];
  }
  return d;
}

double harmonic_average(double plus, double minus) {
  if (!(plus + minus > 0.0)) throw ValidationError("harmonic_average: arguments must be positive");
  return 2.0 * plus * minus / (plus + minus);
}

double face_penalty(int degree, double eta0, double alpha, double h_plus, double h_minus, double dk_plus,
                    double dk_minus) {
  if (!(h_plus > 0.0) || !(h_minus > 0.0)) throw ValidationError("face_penalty: degenerate element (h = 0)");
  const double l2 = static_cast<double>(degree) * degree;
  return l2 / harmonic_average(h_plus, h_minus) * eta0 * std::max(harmonic_average(dk_plus, dk_minus), alpha);
}

DGSystem::DGSystem(std::shared_ptr<const DGSpace> space, DiffusionModel model, AssemblyParameters params)
    : space_(std::move(space)), model_(model), params_(params) {
  if (!space_) throw ValidationError("DGSystem: null space");
  model_.validate();
  if (!(params_.eta0 > 0.0)) throw ValidationError("eta0 must be positive");
  if (!std::isfinite(params_.alpha) || params_.alpha < 0.0) throw ValidationError("alpha must be non-negative");
  const int degree = space_->degree();
  order_ = params_.quadrature_order == 0 ? 3 * degree : params_.quadrature_order;
  if (order_ < 2 * degree) {
    throw ValidationError("quadrature order " + std::to_string(order_) + " is below 2*degree = " +
                          std::to_string(2 * degree));
  }

  const PolytopalMesh& mesh = space_->mesh();
  const int d = mesh.dim();
  const std::size_t nb = space_->local_size();
  const auto n = static_cast<Eigen::Index>(space_->size());

  std::vector<Eigen::Triplet<double>> mass_t;
  std::vector<Eigen::Triplet<double>> stiff_t;
  cache_.resize(mesh.num_elements());
  basis_integrals_.assign(space_->size(), 0.0);

  std::vector<double> phi(nb);
  std::vector<double> grad(3 * nb);
  Eigen::MatrixXd mloc(nb, nb);
  Eigen::MatrixXd aloc(nb, nb);

  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.elements()[e];
    const Eigen::Matrix3d dt = model_.tensor(el.axon, d);
    const auto rule = element_rule(el, d, order_);
    ElementCache& cache = cache_[e];
    cache.weights.reserve(rule.size());
    cache.phi.reserve(rule.size() * nb);
    mloc.setZero();
    aloc.setZero();
    for (const QuadraturePoint& q : rule) {
      space_->values_and_gradients(e, q.x, phi, grad);
      cache.weights.push_back(q.weight);
      cache.phi.insert(cache.phi.end(), phi.begin(), phi.end());
      for (std::size_t i = 0; i < nb; ++i) {
        const Eigen::Vector3d gi(grad[3 * i], grad[3 * i + 1], grad[3 * i + 2]);
        const Eigen::Vector3d dgi = dt * gi;
        basis_integrals_[space_->offset(e) + i] += q.weight * phi[i];
        for (std::size_t j = 0; j < nb; ++j) {
          const Eigen::Vector3d gj(grad[3 * j], grad[3 * j + 1], grad[3 * j + 2]);
          mloc(i, j) += q.weight * phi[i] * phi[j];
          aloc(i, j) += q.weight * dgi.dot(gj);
        }
      }
    }
    const auto off = static_cast<int>(space_->offset(e));
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t j = 0; j < nb; ++j) {
        mass_t.emplace_back(off + static_cast<int>(i), off + static_cast<int>(j), mloc(i, j));
        stiff_t.emplace_back(off + static_cast<int>(i), off + static_cast<int>(j), aloc(i, j));
      }
    }
  }

  // Internal faces: penalty and symmetric consistency terms.
  penalties_.reserve(mesh.internal_faces().size());
  std::vector<double> phi_l(nb), phi_r(nb), grad_l(3 * nb), grad_r(3 * nb), flux_l(nb), flux_r(nb);
  Eigen::MatrixXd block[2][2];
  for (auto& row : block) {
    for (auto& b : row) b.resize(nb, nb);
  }
  for (const InternalFace& f : mesh.internal_faces()) {
    const Element& el_l = mesh.elements()[f.left];
    const Element& el_r = mesh.elements()[f.right];
    const double eta = face_penalty(degree, params_.eta0, params_.alpha, el_l.diameter, el_r.diameter,
                                    model_.penalty_scale(), model_.penalty_scale());
    penalties_.push_back(eta);
    const Eigen::Matrix3d d_l = model_.tensor(el_l.axon, d);
    const Eigen::Matrix3d d_r = model_.tensor(el_r.axon, d);
    const Eigen::Vector3d nrm(f.normal[0], f.normal[1], f.normal[2]);
    const Eigen::Vector3d dn_l = d_l * nrm;
    const Eigen::Vector3d dn_r = d_r * nrm;

    for (auto& row : block) {
      for (auto& b : row) b.setZero();
    }
    const auto rule = simplex_rule(std::span<const Point>(f.geometry.vertices.data(), d), order_);
    for (const QuadraturePoint& q : rule) {
      space_->values_and_gradients(f.left, q.x, phi_l, grad_l);
      space_->values_and_gradients(f.right, q.x, phi_r, grad_r);
      for (std::size_t i = 0; i < nb; ++i) {
        flux_l[i] = dn_l[0] * grad_l[3 * i] + dn_l[1] * grad_l[3 * i + 1] + dn_l[2] * grad_l[3 * i + 2];
        flux_r[i] = dn_r[0] * grad_r[3 * i] + dn_r[1] * grad_r[3 * i + 1] + dn_r[2] * grad_r[3 * i + 2];
      }
      const std::vector<double>* val[2] = {&phi_l, &phi_r};
      const std::vector<double>* flux[2] = {&flux_l, &flux_r};
      const double sign[2] = {1.0, -1.0};
      // block[Y][X](i, j) = A_h(phi_j on X, phi_i on Y) restricted to this face.
      for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
          const double sxy = sign[x] * sign[y];
          for (std::size_t i = 0; i < nb; ++i) {
            const double vi = (*val[y])[i];
            const double fi = (*flux[y])[i];
            for (std::size_t j = 0; j < nb; ++j) {
              const double uj = (*val[x])[j];
              const double fj = (*flux[x])[j];
              block[y][x](i, j) +=
                  q.weight * (eta * sxy * uj * vi - 0.5 * sign[y] * vi * fj - 0.5 * sign[x] * uj * fi);
            }
          }
        }
      }
    }
    const int offs[2] = {static_cast<int>(space_->offset(f.left)), static_cast<int>(space_->offset(f.right))};
    for (int y = 0; y < 2; ++y) {
      for (int x = 0; x < 2; ++x) {
        for (std::size_t i = 0; i < nb; ++i) {
          for (std::size_t j = 0; j < nb; ++j) {
            stiff_t.emplace_back(offs[y] + static_cast<int>(i), offs[x] + static_cast<int>(j), block[y][x](i, j));
          }
        }
      }
    }
  }

  mass_.resize(n, n);
  mass_.setFromTriplets(mass_t.begin(), mass_t.end());
  stiffness_.resize(n, n);
  stiffness_.setFromTriplets(stiff_t.begin(), stiff_t.end());
  linear_reaction_ = params_.alpha * mass_;
}

void DGSystem::nonlinear_block(std::size_t element, std::span<const double> coeffs, std::span<double> block) const {
  const std::size_t nb = space_->local_size();
  const ElementCache& cache = cache_[element];
  const double* c = coeffs.data() + space_->offset(element);
  std::fill(block.begin(), block.end(), 0.0);
  for (std::size_t q = 0; q < cache.weights.size(); ++q) {
    const double* phi = cache.phi.data() + q * nb;
    double ch = 0.0;
    for (std::size_t k = 0; k < nb; ++k) ch += c[k] * phi[k];
    const double s = params_.alpha * cache.weights[q] * ch;
    for (std::size_t i = 0; i < nb; ++i) {
      const double si = s * phi[i];
      for (std::size_t j = 0; j < nb; ++j) block[i * nb + j] += si * phi[j];
    }
  }
}

SparseMatrix DGSystem::nonlinear_reaction(std::span<const double> coeffs) const {
  if (coeffs.size() != size()) throw ValidationError("nonlinear_reaction: coefficient vector has wrong length");
  const std::size_t nb = space_->local_size();
  std::vector<double> block(nb * nb);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(space_->mesh().num_elements() * nb * nb);
  for (std::size_t e = 0; e < space_->mesh().num_elements(); ++e) {
    nonlinear_block(e, coeffs, block);
    const auto off = static_cast<int>(space_->offset(e));
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t j = 0; j < nb; ++j) {
        t.emplace_back(off + static_cast<int>(i), off + static_cast<int>(j), block[i * nb + j]);
      }
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

std::vector<double> DGSystem::load_vector(const ScalarField& f) const {
  const PolytopalMesh& mesh = space_->mesh();
  const std::size_t nb = space_->local_size();
  std::vector<double> out(size(), 0.0);
  std::vector<double> phi(nb);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    for (const QuadraturePoint& q : element_rule(mesh.elements()[e], mesh.dim(), order_ + 2)) {
      space_->values(e, q.x, phi);
      const double fx = f(q.x);
      for (std::size_t i = 0; i < nb; ++i) out[space_->offset(e) + i] += q.weight * fx * phi[i];
    }
  }
  return out;
}

std::vector<double> DGSystem::project(const ScalarField& f) const {
  std::vector<double> rhs = load_vector(f);
  const std::size_t nb = space_->local_size();
  std::vector<double> out(size());
  for (std::size_t e = 0; e < space_->mesh().num_elements(); ++e) {
    const auto off = static_cast<Eigen::Index>(space_->offset(e));
    const Eigen::MatrixXd local = Eigen::MatrixXd(mass_.block(off, off, nb, nb));
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data() + off, static_cast<Eigen::Index>(nb));
    const Eigen::VectorXd x = local.llt().solve(b);
    for (std::size_t i = 0; i < nb; ++i) out[static_cast<std::size_t>(off) + i] = x[static_cast<Eigen::Index>(i)];
  }
  return out;
}

double DGSystem::l2_error(std::span<const double> coeffs, const ScalarField& f, int extra_order) const {
  const PolytopalMesh& mesh = space_->mesh();
  double err2 = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    for (const QuadraturePoint& q : element_rule(mesh.elements()[e], mesh.dim(), order_ + extra_order)) {
      const double diff = space_->evaluate(coeffs, e, q.x) - f(q.x);
      err2 += q.weight * diff * diff;
    }
  }
  return std::sqrt(err2);
}

DGSystem assemble(std::shared_ptr<const DGSpace> space, const DiffusionModel& model, const AssemblyParameters& params) {
  return DGSystem(std::move(space), model, params);
}

}  // namespace fkneuro

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fkneuro/dg_solver.hpp"
#include "fkneuro/dg_space.hpp"
#include "fkneuro/dg_system.hpp"
#include "fkneuro/errors.hpp"
#include "fkneuro/linear_solver.hpp"
#include "fkneuro/mesh.hpp"
#include "fkneuro/staging.hpp"
#include "fkneuro/trajectory.hpp"
#include "oracles.hpp"

using namespace fkneuro;

namespace {

std::shared_ptr<const DGSpace> make_space(int dim, int n, double extent, int degree, Point axon = {1, 0, 0},
                                          SlabLabeling labels = {}) {
  auto mesh = std::make_shared<const PolytopalMesh>(generate_structured_mesh(dim, n, extent, labels, axon));
  return std::make_shared<const DGSpace>(mesh, degree);
}

std::shared_ptr<const DGSpace> unit_square_polygon(int degree) {
  auto mesh = std::make_shared<const PolytopalMesh>(
      parse_mesh("FKMESH 1 2\nVERTICES 4\n0 0\n1 0\n1 1\n0 1\nELEMENTS 1\n4 0 1 2 3 1 1 0\n"
                 "SUBTESS 1\n2 0 0 1 0 1 1 0 0 1 1 0 1\n"));
  return std::make_shared<const DGSpace>(mesh, degree);
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

double rel_asymmetry(const SparseMatrix& a) {
  const Eigen::MatrixXd d(a);
  return (d - d.transpose()).cwiseAbs().maxCoeff() / d.cwiseAbs().maxCoeff();
}

}  // namespace

TEST(DGSpace, DofCounts) {
  const PolytopalMesh two = parse_mesh("FKMESH 1 2\nVERTICES 4\n0 0\n1 0\n1 1\n0 1\nELEMENTS 2\n3 0 1 2 1 1 0\n3 0 2 3 1 1 0\n");
  EXPECT_EQ(DGSpace(std::make_shared<const PolytopalMesh>(two), 2).size(), 12u);
  auto tet = std::make_shared<const PolytopalMesh>(
      parse_mesh("FKMESH 1 3\nVERTICES 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nELEMENTS 1\n4 0 1 2 3 1 1 0 0\n"));
  EXPECT_EQ(DGSpace(tet, 1).size(), 4u);
  EXPECT_EQ(make_space(3, 2, 1.0, 2)->size(), 480u);
  EXPECT_THROW(DGSpace(tet, 0), ValidationError);
}

TEST(DGSpace, BasisIsOrthogonalAgainstElementMeasure) {
  for (int dim : {2, 3}) {
    auto space = make_space(dim, 2, 3.0, 2);
    const DGSystem sys(space, {}, {});
    const Eigen::MatrixXd m(sys.mass());
    const std::size_t nb = space->local_size();
    for (std::size_t e = 0; e < space->mesh().num_elements(); ++e) {
      const double measure = space->mesh().elements()[e].measure;
      const Eigen::MatrixXd block = m.block(space->offset(e), space->offset(e), nb, nb) / measure;
      EXPECT_LE((block - Eigen::MatrixXd::Identity(nb, nb)).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
  // The first basis function is the constant one.
  auto space = make_space(2, 1, 1.0, 3);
  const auto one = space->constant(1.0);
  EXPECT_NEAR(space->evaluate(one, 0, {0.7, 0.2, 0.0}), 1.0, 1e-13);
}

TEST(DGSystem, PenaltyFormula) {
  EXPECT_DOUBLE_EQ(harmonic_average(3.0, 3.0), 3.0);
  EXPECT_NEAR(harmonic_average(2.0, 4.0), 8.0 / 3.0, 1e-15);
  EXPECT_EQ(face_penalty(2, 10.0, 0.61, 1.0, 1.0, 88.0, 88.0), 3520.0);
  EXPECT_DOUBLE_EQ(face_penalty(2, 10.0, 0.61, 2.0, 4.0, 88.0, 88.0), 4.0 / (8.0 / 3.0) * 10.0 * 88.0);
  EXPECT_EQ(face_penalty(1, 10.0, 100.0, 1.0, 1.0, 1.0, 1.0), 1000.0);
  EXPECT_DOUBLE_EQ(face_penalty(2, 10.0, 0.61, 2.0, 4.0, 88.0, 88.0), face_penalty(2, 10.0, 0.61, 4.0, 2.0, 88.0, 88.0));
  EXPECT_THROW(face_penalty(2, 10.0, 0.61, 0.0, 1.0, 88.0, 88.0), ValidationError);

  // On the two-triangle unit square both elements have diameter sqrt(2).
  auto space = make_space(2, 1, 1.0, 2);
  const DGSystem sys(space, {8.0, 80.0}, {0.61, 10.0, 0});
  ASSERT_EQ(sys.face_penalties().size(), 1u);
  EXPECT_NEAR(sys.face_penalties()[0], 4.0 / std::sqrt(2.0) * 10.0 * 88.0, 1e-9);
}

TEST(DGSystem, DiffusionTensorEigenvalues) {
  const DiffusionModel model{8.0, 80.0};
  const Eigen::Matrix3d d = model.tensor({0.6, 0.8, 0.0}, 3);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(d);
  EXPECT_NEAR(eig.eigenvalues()(0), 8.0, 1e-12);
  EXPECT_NEAR(eig.eigenvalues()(1), 8.0, 1e-12);
  EXPECT_NEAR(eig.eigenvalues()(2), 88.0, 1e-12);
  EXPECT_THROW((DiffusionModel{0.0, 1.0}.validate()), ValidationError);
}

TEST(DGSystem, StructuralAlgebra) {
  for (int dim : {2, 3}) {
    for (int degree : {1, 2}) {
      auto space = make_space(dim, 2, 5.0, degree, {0.6, 0.8, 0.0});
      const DGSystem sys(space, {8.0, 80.0}, {0.61, 10.0, 0});
      EXPECT_LE(rel_asymmetry(sys.mass()), 1e-12);
      EXPECT_LE(rel_asymmetry(sys.stiffness()), 1e-12);
      const Eigen::VectorXd one = to_eigen(space->constant(1.0));
      const Eigen::MatrixXd a(sys.stiffness());
      EXPECT_LE((a * one).norm(), 1e-10 * a.norm());
      EXPECT_NEAR(one.dot(sys.mass() * one), space->mesh().measure(), 1e-10 * space->mesh().measure());
      const Eigen::MatrixXd diff = Eigen::MatrixXd(sys.linear_reaction()) - 0.61 * Eigen::MatrixXd(sys.mass());
      EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-12 * Eigen::MatrixXd(sys.mass()).cwiseAbs().maxCoeff());
      Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(sys.mass()));
      EXPECT_EQ(llt.info(), Eigen::Success);
    }
  }
}

TEST(DGSystem, SparsityFollowsFaceAdjacency) {
  auto space = make_space(2, 3, 1.0, 1);
  const DGSystem sys(space, {}, {});
  const auto& mesh = space->mesh();
  std::set<std::pair<std::size_t, std::size_t>> adjacent;
  for (const auto& f : mesh.internal_faces()) {
    adjacent.insert({f.left, f.right});
    adjacent.insert({f.right, f.left});
  }
  const std::size_t nb = space->local_size();
  const SparseMatrix& a = sys.stiffness();
  for (int r = 0; r < a.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      const std::size_t er = static_cast<std::size_t>(r) / nb, ec = static_cast<std::size_t>(it.col()) / nb;
      if (er != ec) {
        EXPECT_TRUE(adjacent.count({er, ec})) << er << " " << ec;
      }
    }
  }
}

TEST(DGSystem, StiffnessOfGlobalLinearFunctions) {
  // For continuous linear u = a.x + b, v = c.x + d all face terms vanish and
  // A(u, v) = |Omega| a^T D c.
  for (int dim : {2, 3}) {
    auto space = make_space(dim, 2, 2.0, 1, {0.6, 0.8, 0.0});
    const DiffusionModel model{1.5, 4.0};
    const DGSystem sys(space, model, {0.3, 10.0, 0});
    const Eigen::Vector3d a(0.3, -1.2, dim == 3 ? 0.7 : 0.0);
    const Eigen::Vector3d c(2.0, 0.5, dim == 3 ? -0.4 : 0.0);
    const auto u = to_eigen(sys.project([&](const Point& x) { return 0.2 + a(0) * x[0] + a(1) * x[1] + a(2) * x[2]; }));
    const auto v = to_eigen(sys.project([&](const Point& x) { return -1.0 + c(0) * x[0] + c(1) * x[1] + c(2) * x[2]; }));
    const Eigen::Matrix3d d = model.tensor({0.6, 0.8, 0.0}, dim);
    const double expected = space->mesh().measure() * a.dot(d * c);
    EXPECT_NEAR(u.dot(sys.stiffness() * v), expected, 1e-10 * std::abs(expected));
  }
}

TEST(DGSystem, SingleSquareElementHandQuadrature) {
  // One unit-square polygon, D = I: A(u, v) = grad u . grad v for linear u, v.
  auto space = unit_square_polygon(1);
  const DGSystem sys(space, {1.0, 0.0}, {0.61, 10.0, 0});
  const auto ux = to_eigen(sys.project([](const Point& x) { return x[0]; }));
  const auto uy = to_eigen(sys.project([](const Point& x) { return x[1]; }));
  const auto one = to_eigen(space->constant(1.0));
  EXPECT_NEAR(ux.dot(sys.stiffness() * ux), 1.0, 1e-13);
  EXPECT_NEAR(uy.dot(sys.stiffness() * uy), 1.0, 1e-13);
  EXPECT_NEAR(ux.dot(sys.stiffness() * uy), 0.0, 1e-13);
  EXPECT_NEAR(one.dot(sys.stiffness() * ux), 0.0, 1e-13);
  // Mass of x: int x^2 = 1/3.
  EXPECT_NEAR(ux.dot(sys.mass() * ux), 1.0 / 3.0, 1e-13);
}

TEST(DGSystem, NonlinearReactionProperties) {
  auto space = make_space(2, 2, 1.0, 2);
  const DGSystem sys(space, {}, {0.61, 10.0, 0});
  const std::size_t n = sys.size();
  const Eigen::MatrixXd m_alpha(sys.linear_reaction());
  const double scale = m_alpha.cwiseAbs().maxCoeff();

  EXPECT_LE(Eigen::MatrixXd(sys.nonlinear_reaction(std::vector<double>(n, 0.0))).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((Eigen::MatrixXd(sys.nonlinear_reaction(space->constant(1.0))) - m_alpha).cwiseAbs().maxCoeff(),
            1e-10 * scale);
  EXPECT_LE((Eigen::MatrixXd(sys.nonlinear_reaction(space->constant(0.5))) - 0.5 * m_alpha).cwiseAbs().maxCoeff(),
            1e-10 * scale);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c1(n), c2(n), mix(n);
  for (std::size_t i = 0; i < n; ++i) {
    c1[i] = u(rng);
    c2[i] = u(rng);
    mix[i] = 0.3 * c1[i] - 1.7 * c2[i];
  }
  const Eigen::MatrixXd a(sys.nonlinear_reaction(c1));
  const Eigen::MatrixXd b(sys.nonlinear_reaction(c2));
  const Eigen::MatrixXd ab(sys.nonlinear_reaction(mix));
  EXPECT_LE((ab - (0.3 * a - 1.7 * b)).cwiseAbs().maxCoeff(), 1e-12 * ab.cwiseAbs().maxCoeff());
  EXPECT_LE((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
  EXPECT_THROW(sys.nonlinear_reaction(std::vector<double>(n + 1)), ValidationError);
}

TEST(DGSystem, QuadratureOrderTooLowIsRejected) {
  auto space = make_space(2, 1, 1.0, 2);
  EXPECT_THROW(DGSystem(space, {}, {0.61, 10.0, 3}), ValidationError);
  EXPECT_NO_THROW(DGSystem(space, {}, {0.61, 10.0, 4}));
}

TEST(DGSystem, ProjectionAndErrorNorm) {
  auto space = make_space(2, 2, 1.0, 2);
  const DGSystem sys(space, {}, {});
  auto quad = [](const Point& x) { return 1.0 + x[0] * x[1] - 2.0 * x[1] * x[1]; };
  const auto c = sys.project(quad);
  EXPECT_LE(sys.l2_error(c, quad), 1e-12);
  EXPECT_NEAR(sys.l2_error(space->constant(0.0), [](const Point&) { return 2.0; }), 2.0, 1e-12);
  // Region mean of a constant is that constant.
  const auto avg = region_average(sys, {1});
  EXPECT_NEAR(avg(space->constant(0.37)), 0.37, 1e-14);
}

// ---------------------------------------------------------------------------

TEST(DGStepper, SingleElementConstantMode) {
  auto space = unit_square_polygon(1);
  const DGSystem sys(space, {8.0, 80.0}, {0.61, 10.0, 0});
  SemiImplicitEulerStepper stepper(sys, 0.05);
  const auto next = stepper.step(space->constant(0.1));
  const double expected = 0.1 / (1.0 - 0.05 * 0.61 * (1.0 - 0.1));
  EXPECT_NEAR(next[0], expected, 1e-12);
  EXPECT_NEAR(next[0], 0.10282, 1e-5);
  for (std::size_t i = 1; i < next.size(); ++i) EXPECT_NEAR(next[i], 0.0, 1e-14);
}

TEST(DGStepper, UniformStateSeesNoDiffusion) {
  auto space = make_space(2, 3, 10.0, 2, {0.6, 0.8, 0.0});
  const DGSystem sys(space, {8.0, 80.0}, {0.0, 10.0, 0});
  SemiImplicitEulerStepper stepper(sys, 0.05);
  const auto c0 = space->constant(0.4);
  const auto c1 = stepper.step(c0);
  for (std::size_t i = 0; i < c0.size(); ++i) EXPECT_NEAR(c1[i], c0[i], 1e-10);
}

TEST(DGStepper, ZeroStaysZero) {
  auto space = make_space(2, 2, 10.0, 1);
  const DGSystem sys(space, {}, {0.61, 10.0, 0});
  const Trajectory traj = solve_fk_mesh(sys, std::vector<double>(sys.size(), 0.0), {0.05, 1.0, {}, {}});
  EXPECT_EQ(traj.states.size(), 21u);
  for (const auto& s : traj.states) {
    for (double v : s) EXPECT_EQ(v, 0.0);
  }
}

TEST(DGStepper, UniformSeedFollowsLogistic) {
  auto space = make_space(2, 4, 1.0, 2);
  const DGSystem sys(space, {}, {0.61, 10.0, 0});
  const Trajectory traj = solve_fk_mesh(sys, space->constant(0.1), {0.01, 40.0, {}, {}});
  const auto mean = spatial_average(traj, region_average(sys, {1}));
  double err = 0.0;
  for (std::size_t n = 0; n < mean.size(); ++n) {
    err = std::max(err, std::abs(mean[n] - oracle::logistic(0.1, 0.61, traj.times[n])));
  }
  EXPECT_LE(err, 5e-3);
  EXPECT_LE(std::abs(mean.back() - 1.0), 1e-3);
  for (const auto& st : traj.stats) EXPECT_LE(st.residual, 1e-10);
}

TEST(DGStepper, FasterConversionReachesHalfSooner) {
  auto space = make_space(2, 4, 20.0, 1, {1, 0, 0}, SlabLabeling{0, {1, 2}});
  std::vector<double> t_half;
  for (double alpha : {0.08, 8.54}) {
    const DGSystem sys(space, {}, {alpha, 10.0, 0});
    const Trajectory traj = solve_fk_mesh(sys, seed_regions(*space, {1}, 0.1), {0.05, 40.0, {}, {}});
    const auto mean = spatial_average(traj, region_average(sys, {1, 2}));
    t_half.push_back(crossing_time(traj.times, mean, 0.5).value_or(1e9));
  }
  EXPECT_LT(t_half[1], t_half[0]);
}

TEST(DGStepper, SeedingProjectsRegionIndicator) {
  auto space = make_space(2, 2, 1.0, 2, {1, 0, 0}, SlabLabeling{0, {1, 2}});
  const auto c = seed_regions(*space, {2}, 0.1);
  for (std::size_t e = 0; e < space->mesh().num_elements(); ++e) {
    const double expected = space->mesh().elements()[e].region == 2 ? 0.1 : 0.0;
    EXPECT_NEAR(space->evaluate(c, e, space->mesh().elements()[e].box.min), expected, 1e-14);
  }
}

TEST(DGStepper, ManufacturedSolutionConvergesLinear) {
  const oracle::Manufactured mms{2.0, 1.0, 0.61};
  std::vector<double> errors;
  for (int n : {2, 4, 8}) {
    auto space = make_space(2, n, 1.0, 1);
    const DGSystem sys(space, {1.0, 1.0}, {0.61, 10.0, 0});
    MeshRunOptions opts;
    opts.dt = 1e-4;
    opts.final_time = 0.02;
    opts.source = [&](const Point& x, double t) { return mms.source(x[0], x[1], t); };
    const auto c0 = sys.project([&](const Point& x) { return mms.exact(x[0], x[1], 0.0); });
    const Trajectory traj = solve_fk_mesh(sys, c0, opts);
    errors.push_back(sys.l2_error(traj.states.back(), [&](const Point& x) { return mms.exact(x[0], x[1], 0.02); }));
  }
  const auto orders = oracle::observed_orders(errors);
  EXPECT_GE(orders.back(), 1.8) << errors[0] << " " << errors[1] << " " << errors[2];
}

// ---------------------------------------------------------------------------

TEST(LinearSolver, ConjugateGradientsMatchDirect) {
  auto space = make_space(2, 3, 1.0, 2);
  const DGSystem sys(space, {}, {});
  const SparseMatrix a = SparseMatrix(sys.mass() + 0.05 * sys.stiffness());
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(a.rows(), -1.0, 2.0);
  Eigen::VectorXd x1 = Eigen::VectorXd::Zero(a.rows()), x2 = x1;
  const auto r1 = solve_symmetric(a, b, x1);
  const auto r2 = solve_direct(a, b, x2);
  EXPECT_FALSE(r1.used_direct);
  EXPECT_LE(r1.relative_residual, 1e-10);
  EXPECT_FALSE(r1.residual_history.empty());
  EXPECT_LE((x1 - x2).norm(), 1e-8 * x2.norm());
}

TEST(LinearSolver, IndefiniteSystemFallsBackOrFails) {
  Eigen::MatrixXd dense(3, 3);
  dense << 1, 0, 0, 0, -2, 0, 0, 0, 3;
  const SparseMatrix a = dense.sparseView();
  const Eigen::VectorXd b(Eigen::Vector3d(1, 1, 1));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  const auto rep = solve_symmetric(a, b, x);
  EXPECT_LE((a * x - b).norm(), 1e-12);
  (void)rep;

  Eigen::MatrixXd sing = Eigen::MatrixXd::Zero(3, 3);
  sing(0, 0) = 1.0;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
  LinearSolveOptions no_fallback;
  no_fallback.direct_fallback = false;
  try {
    solve_symmetric(SparseMatrix(sing.sparseView()), b, y, no_fallback);
    FAIL() << "expected a solver error";
  } catch (const SolverError& e) {
    EXPECT_FALSE(e.residuals().empty());
  }
}

// ---------------------------------------------------------------------------

TEST(Trajectory, StepCountAndDumpRoundTrip) {
  EXPECT_EQ(step_count(0.05, 40.0), 800u);
  EXPECT_THROW(step_count(0.0, 1.0), ValidationError);
  EXPECT_THROW(step_count(0.5, 0.1), ValidationError);
  EXPECT_THROW(step_count(0.3, 1.0), ValidationError);

  Trajectory t;
  t.dt = 0.5;
  t.times = {0.0, 0.5, 1.0};
  t.states = {{0.1, 0.2}, {0.3, 0.4}, {0.5, 1.0 / 3.0}};
  const auto path = std::filesystem::temp_directory_path() / "fkneuro_state.bin";
  write_state_dump(t, path);
  const Trajectory back = read_state_dump(path, 0.5);
  EXPECT_EQ(back.states, t.states);
  EXPECT_EQ(back.times, t.times);
  std::filesystem::remove(path);
}

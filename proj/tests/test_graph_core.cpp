#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fkneuro/connectome.hpp"
#include "fkneuro/errors.hpp"
#include "fkneuro/graph_solver.hpp"
#include "fkneuro/staging.hpp"
#include "oracles.hpp"

using namespace fkneuro;

namespace {

Connectome random_connected_graph(std::size_t m, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 5.0);
  std::vector<GraphNode> nodes;
  for (std::size_t i = 0; i < m; ++i) nodes.push_back({static_cast<int>(10 + i), {}, u(rng)});
  std::vector<GraphEdge> edges;
  for (std::size_t i = 1; i < m; ++i) edges.push_back({rng() % i, i, u(rng), u(rng)});
  for (std::size_t e = 0; e < m; ++e) {
    const std::size_t i = rng() % m, j = rng() % m;
    if (i != j) edges.push_back({i, j, u(rng), u(rng)});
  }
  return Connectome(nodes, edges, 1.0);
}

Connectome single_node() { return Connectome({{1}}, {}, 1.0); }

}  // namespace

TEST(GraphRhs, Examples) {
  const Connectome tri({{1}, {2}, {3}}, {{0, 1, 1, 1}, {1, 2, 1, 1}, {0, 2, 1, 1}}, 1.0);
  EXPECT_EQ(rhs_semidiscrete(tri, std::vector<double>{1, 1, 1}, 0.7), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(rhs_semidiscrete(tri, std::vector<double>{0, 0, 0}, 0.7), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(rhs_semidiscrete(tri, std::vector<double>{1, 0, 0}, 0.0), (std::vector<double>{-2, 1, 1}));
  const auto r = rhs_semidiscrete(tri, std::vector<double>{0.5, 0.5, 0.5}, 0.8);
  for (double v : r) EXPECT_DOUBLE_EQ(v, 0.8 * 0.25);
  EXPECT_THROW(rhs_semidiscrete(tri, std::vector<double>{1, 0}, 0.0), ValidationError);
}

TEST(GraphStepper, EdgelessWithoutReactionIsIdentity) {
  const Connectome g({{1}, {2}, {3}}, {}, 1.0, false);
  const CrankNicolsonStepper stepper(g, 0.0, 0.05);
  const std::vector<double> c{0.1, 0.7, 0.3};
  EXPECT_EQ(stepper.step(c, c), c);
}

TEST(GraphStepper, SingleNodeMatchesScalarRecurrence) {
  const Connectome g = single_node();
  const std::vector<double> c0{0.1};
  const double consistent = CrankNicolsonStepper(g, 0.61, 0.05).step(c0, c0)[0];
  EXPECT_NEAR(consistent, oracle::cn_scalar_step(0.1, 0.1, 0.61, 0.05), 1e-15);
  EXPECT_NEAR(consistent, 0.1 * 2.02745 / 1.97255, 1e-15);
  GraphStepOptions literal;
  literal.paper_literal_rhs = true;
  const double printed = CrankNicolsonStepper(g, 0.61, 0.05, literal).step(c0, c0)[0];
  EXPECT_NEAR(printed, oracle::cn_scalar_step(0.1, 0.1, 0.61, 0.05, -1.0), 1e-15);
  EXPECT_LT(printed, consistent);
}

TEST(GraphStepper, EquilibriaAreFixedPoints) {
  const Connectome g = random_connected_graph(20, 1);
  const CrankNicolsonStepper stepper(g, 0.7, 0.05);
  for (double v : {0.0, 1.0}) {
    const std::vector<double> c(20, v);
    StepStats stats;
    const auto next = stepper.step(c, c, &stats);
    for (double x : next) EXPECT_NEAR(x, v, 1e-12);
    EXPECT_LE(stats.residual, 1e-12);
  }
}

TEST(GraphStepper, DiffusionConservesMass) {
  const Connectome g = random_connected_graph(30, 2);
  const CrankNicolsonStepper stepper(g, 0.0, 0.05);
  std::vector<double> prev(30, 0.0);
  prev[3] = 1.0;
  prev[17] = 0.4;
  std::vector<double> cur = prev;
  const double total = std::accumulate(cur.begin(), cur.end(), 0.0);
  for (int n = 0; n < 800; ++n) {
    auto next = stepper.step(cur, prev);
    const double s0 = std::accumulate(cur.begin(), cur.end(), 0.0);
    const double s1 = std::accumulate(next.begin(), next.end(), 0.0);
    ASSERT_LE(std::abs(s1 - s0), 1e-12) << "step " << n;
    prev = std::move(cur);
    cur = std::move(next);
  }
  EXPECT_NEAR(std::accumulate(cur.begin(), cur.end(), 0.0), total, 1e-11);
  // Diffusion spreads the two seeds towards the uniform state.
  const auto [lo, hi] = std::minmax_element(cur.begin(), cur.end());
  EXPECT_LT(*hi - *lo, 0.5);
}

TEST(GraphStepper, SystemMatrixIsSymmetric) {
  const Connectome g = random_connected_graph(15, 3);
  const CrankNicolsonStepper stepper(g, 0.7, 0.05);
  std::vector<double> c(15), p(15);
  for (std::size_t i = 0; i < 15; ++i) {
    c[i] = 0.05 * static_cast<double>(i);
    p[i] = 0.04 * static_cast<double>(i);
  }
  const Eigen::MatrixXd a(stepper.system_matrix(c, p));
  EXPECT_LE((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-14 * a.cwiseAbs().maxCoeff());
}

TEST(GraphStepper, PermutationEquivariance) {
  std::vector<GraphNode> nodes{{1, {}, 1.0}, {2, {}, 2.0}, {3, {}, 1.5}, {4, {}, 1.0}};
  std::vector<GraphEdge> edges{{0, 1, 2, 1}, {1, 2, 1, 3}, {2, 3, 4, 2}, {0, 3, 1, 1}};
  const std::vector<std::size_t> perm{2, 0, 3, 1};  // new index of old node i
  std::vector<GraphNode> pn(4);
  for (std::size_t i = 0; i < 4; ++i) pn[perm[i]] = nodes[i];
  std::vector<GraphEdge> pe;
  for (const auto& e : edges) pe.push_back({perm[e.i], perm[e.j], e.tract_count, e.tract_length});
  const Connectome a(nodes, edges, 1.0), b(pn, pe, 1.0);
  GraphRunOptions opts{0.05, 2.0, {}};
  const Trajectory ta = solve_fk_graph(a, 0.7, seed_nodes(a, {1}, 0.3), opts);
  const Trajectory tb = solve_fk_graph(b, 0.7, seed_nodes(b, {1}, 0.3), opts);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(ta.states.back()[i], tb.states.back()[perm[i]], 1e-13);
}

TEST(GraphRun, UniformSeedFollowsLogistic) {
  for (double alpha : {0.61, 0.70}) {
    const Connectome g({{1}, {2}, {3}}, {}, 1.0, false);
    const Trajectory traj = solve_fk_graph(g, alpha, seed_nodes(g, {1, 2, 3}, 0.1), {0.05, 40.0, {}});
    ASSERT_EQ(traj.states.size(), 801u);
    double c = 0.1, p = 0.1, err_scalar = 0.0, err_logistic = 0.0;
    for (std::size_t n = 1; n < traj.states.size(); ++n) {
      const double next = oracle::cn_scalar_step(c, p, alpha, 0.05);
      p = c;
      c = next;
      for (double v : traj.states[n]) {
        err_scalar = std::max(err_scalar, std::abs(v - c));
        err_logistic = std::max(err_logistic, std::abs(v - oracle::logistic(0.1, alpha, traj.times[n])));
      }
    }
    EXPECT_LE(err_scalar, 1e-13);
    // Second-order scheme at dt = 0.05: the error constant puts it near 1e-4.
    EXPECT_LE(err_logistic, 1e-4);
  }
}

TEST(GraphRun, TemporalOrderIsTwo) {
  const Connectome g = single_node();
  std::vector<double> errors;
  for (double dt : {0.1, 0.05, 0.025}) {
    const Trajectory traj = solve_fk_graph(g, 0.7, {0.1}, {dt, 40.0, {}});
    double err = 0.0;
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
      err = std::max(err, std::abs(traj.states[n][0] - oracle::logistic(0.1, 0.7, traj.times[n])));
    }
    errors.push_back(err);
  }
  for (double q : oracle::observed_orders(errors)) {
    EXPECT_GE(q, 1.8);
    EXPECT_LE(q, 2.2);
  }
}

TEST(GraphRun, ChainActivationFollowsHopDistance) {
  const Connectome g = make_chain_graph({1, 2, 3, 4, 5, 6}, 1.0, 1.0, 0.5);
  const Trajectory traj = solve_fk_graph(g, 0.7, seed_nodes(g, {1}, 0.1), {0.05, 40.0, {}});
  double last = -1.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<double> curve;
    for (const auto& s : traj.states) curve.push_back(s[i]);
    const auto t = crossing_time(traj.times, curve, 0.5);
    ASSERT_TRUE(t.has_value()) << i;
    EXPECT_GT(*t, last);
    last = *t;
  }
}

TEST(GraphRun, SweepTimesDecreaseWithAlpha) {
  const Connectome g = make_chain_graph({1, 2, 3, 4, 5}, 1.0, 1.0, 0.5);
  double prev = 1e9;
  for (double alpha : {0.20, 0.37, 0.52, 0.70, 0.98, 1.33, 1.89, 2.57}) {
    const Trajectory traj = solve_fk_graph(g, alpha, seed_nodes(g, {1}, 0.1), {0.05, 40.0, {}});
    const auto mean = spatial_average(traj, region_average(g, {1, 2, 3, 4, 5}));
    const auto t = crossing_time(traj.times, mean, 0.5);
    ASSERT_TRUE(t.has_value()) << alpha;
    EXPECT_LT(*t, prev);
    prev = *t;
  }
}

TEST(GraphRun, VolumeWeightedAverage) {
  const Connectome g({{1, {}, 1.0}, {2, {}, 3.0}}, {{0, 1, 1, 1}}, 1.0);
  const auto avg = region_average(g, {1, 2});
  EXPECT_DOUBLE_EQ(avg(std::vector<double>{1.0, 0.0}), 0.25);
}

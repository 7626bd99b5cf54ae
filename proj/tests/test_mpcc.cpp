#include <cmath>

#include <gtest/gtest.h>

#include "bookshelf/geometry.hpp"
#include "bookshelf/instgen.hpp"
#include "bookshelf/mpcc.hpp"

using namespace bookshelf;

namespace {

MpccProblem scalar_problem(double target, double eps) {
  MpccProblem p;
  p.weights = Eigen::VectorXd::Ones(1);
  p.target = Eigen::VectorXd::Constant(1, target);
  p.lower = Eigen::VectorXd::Zero(1);
  p.upper = Eigen::VectorXd::Ones(1);
  p.linear.A.resize(0, 1);
  p.linear.lower.resize(0);
  p.linear.upper.resize(0);
  p.complementarity = {0};
  p.epsilon = eps;
  return p;
}

// Minimum of (x - t)^2 over the grid points of [0, 1] with x (1 - x) <= eps.
double grid_search(double t, double eps, int points) {
  double best_x = 0, best = INFINITY;
  for (int i = 0; i <= points; ++i) {
    const double x = static_cast<double>(i) / points;
    if (x * (1 - x) > eps) continue;
    const double v = (x - t) * (x - t);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace

TEST(Nlp, ScalarComplementarity) {
  for (double t : {0.3, 0.45, 0.7, 0.9}) {
    const double eps = 1e-8;
    const double ref = grid_search(t, eps, 1000000);
    const auto r = solve_nlp(scalar_problem(t, eps), Eigen::VectorXd::Constant(1, t));
    ASSERT_EQ(r.status, NlpStatus::kFeasibleOptimal) << t;
    EXPECT_NEAR(r.x[0], ref, 1e-4) << t;
    EXPECT_NEAR(r.x[0], t < 0.5 ? 0.0 : 1.0, 1e-4);
  }
}

TEST(Nlp, LinearAndBilinear) {
  // min (x-2)^2 + (y-2)^2 + (r-0)^2  s.t. r = x y, x + y <= 2
  MpccProblem p;
  p.weights = Eigen::VectorXd::Ones(3);
  p.target = Eigen::Vector3d(2, 2, 0);
  p.lower = Eigen::VectorXd::Constant(3, -10);
  p.upper = Eigen::VectorXd::Constant(3, 10);
  p.linear.A.resize(1, 3);
  p.linear.A.insert(0, 0) = 1;
  p.linear.A.insert(0, 1) = 1;
  p.linear.lower = Eigen::VectorXd::Constant(1, -INFINITY);
  p.linear.upper = Eigen::VectorXd::Constant(1, 2);
  p.linear.family = {Family::B};
  p.bilinear = {{2, 0, 1, Family::E}};
  const auto r = solve_nlp(p, Eigen::Vector3d::Zero());
  ASSERT_EQ(r.status, NlpStatus::kFeasibleOptimal);
  EXPECT_LE(p.max_violation(r.x), 1e-6);
  // (x-1)^2 + (y-1)^2 + t^4 along x = 1 + t, y = 1 - t plus 1: minimum 3
  EXPECT_NEAR(r.x[2], r.x[0] * r.x[1], 1e-6);
  EXPECT_LE(p.objective(r.x), 3.0 + 1e-6);
  EXPECT_GE(p.objective(r.x), 3.0 - 1e-6);
}

TEST(Mpcc, FromWitness) {
  for (int seed = 0; seed < 10; ++seed) {
    const Instance inst = generate_instance(derive_seed(3, kTestStream, seed), ShelfDims{});
    const auto f = build_default_problem(inst.params);
    const auto rep = solve_mpcc(f, inst.witness);
    ASSERT_TRUE(rep.success) << seed << " " << to_string(rep.status);
    EXPECT_LE(rep.objective, objective_value(f, inst.witness) + 1e-6);
    EXPECT_TRUE(evaluate_constraints(f, rep.x).feasible(1e-6));
  }
}

TEST(Mpcc, ZeroStartRarelySucceeds) {
  int ok = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const Instance inst = generate_instance(derive_seed(4, kTestStream, seed), ShelfDims{});
    const auto f = build_default_problem(inst.params);
    ok += solve_mpcc(f, DecisionVector::zeros(f.dim())).success;
  }
  EXPECT_LE(ok, 2);
}

TEST(Mpcc, DimensionMismatch) {
  const Instance inst = generate_instance(1, ShelfDims{});
  const auto f = build_default_problem(inst.params);
  EXPECT_THROW(solve_mpcc(f, DecisionVector::zeros(3)), std::invalid_argument);
}

TEST(ManualGuess, StoredBooksKeepPoses) {
  for (int seed = 0; seed < 20; ++seed) {
    const Instance inst = generate_instance(derive_seed(5, kTestStream, seed), ShelfDims{});
    const auto f = build_default_problem(inst.params);
    const DecisionVector g = manual_guess(f, inst);
    const Layout l = extract_layout(f, g);
    const int m = f.index.num_stored();
    for (int k = 0; k < m; ++k) {
      EXPECT_NEAR(l.poses[k].x, inst.params.stored[k].pose.x, 1e-12);
      EXPECT_NEAR(l.poses[k].theta, inst.params.stored[k].pose.theta, 1e-12);
    }
    EXPECT_EQ(l.modes[m], Mode::kUpright);
    EXPECT_NEAR(l.poses[m].x, 0.0, 1e-12);
    // stored neighbors, in x order, are separated by their fitted planes
    const auto quads = book_quads(f, g);
    for (int p = 0; p < f.index.num_pairs(); ++p) {
      const auto [i, j] = f.index.pair_books(p);
      const SeparatingPlane& pl = l.planes[p];
      EXPECT_NEAR(pl.normal.norm(), 1.0, 1e-9);
      if (j >= m) continue;
      for (const auto& v : quads[i]) EXPECT_LE(pl.normal.dot(v), pl.offset + 1e-9);
      for (const auto& v : quads[j]) EXPECT_GE(pl.normal.dot(v), pl.offset - 1e-9);
    }
  }
}

TEST(ManualGuess, TouchingQuadsGetUnitNormal) {
  const Quad a = vertex_positions(Pose{0, 1, 0}, BookGeometry{1, 2});
  const Quad b = vertex_positions(Pose{1, 1, 0}, BookGeometry{1, 2});
  const SeparatingPlane pl = fit_separating_plane(a, b);
  EXPECT_NEAR(pl.normal.norm(), 1.0, 1e-12);
  EXPECT_NEAR(pl.gap, 0.0, 1e-12);
  EXPECT_NEAR(std::abs(pl.normal.x()), 1.0, 1e-12);
}

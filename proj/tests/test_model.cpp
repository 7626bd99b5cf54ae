#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "bookshelf/geometry.hpp"
#include "bookshelf/instgen.hpp"
#include "bookshelf/model.hpp"

using namespace bookshelf;

namespace {

ProblemParams two_books() {
  ProblemParams p;
  p.shelf = ShelfDims{};
  p.stored.push_back({Pose{-4.0, 2.5, 0.0}, BookGeometry{1.0, 5.0}});
  p.new_book = BookGeometry{1.2, 4.0};
  return p;
}

}  // namespace

TEST(Vertices, AxisAligned) {
  const auto v = vertex_positions(Pose{0, 2, 0}, BookGeometry{2, 4});
  const double expect[4][2] = {{-1, 4}, {-1, 0}, {1, 0}, {1, 4}};
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(v[k].x(), expect[k][0], 1e-15);
    EXPECT_NEAR(v[k].y(), expect[k][1], 1e-15);
  }
}

TEST(Vertices, QuarterTurnSwapsExtents) {
  const auto v = vertex_positions(Pose{0, 1, std::numbers::pi / 2}, BookGeometry{2, 4});
  const double expect[4][2] = {{-2, 0}, {2, 0}, {2, 2}, {-2, 2}};
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(v[k].x(), expect[k][0], 1e-12);
    EXPECT_NEAR(v[k].y(), expect[k][1], 1e-12);
  }
  EXPECT_NEAR(max_x(v) - min_x(v), 4.0, 1e-12);
  EXPECT_NEAR(max_y(v) - min_y(v), 2.0, 1e-12);
}

TEST(Vertices, DiagonalDistance) {
  const auto v = vertex_positions(Pose{1, 3, std::numbers::pi / 4}, BookGeometry{2, 2});
  for (const auto& p : v) EXPECT_NEAR((p - Point2<double>(1, 3)).norm(), std::sqrt(2.0), 1e-12);
  // 45 degree turn of a square puts vertices on the axes through the center.
  EXPECT_NEAR(v[0].x(), 1.0 - std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(v[0].y(), 3.0, 1e-12);
}

TEST(Formulation, TwoBookProductCount) {
  const ProblemParams p = two_books();
  const auto f = build_default_problem(p);
  // Hand count: c^2, s^2 per book; a_x^2, a_y^2 for the single plane;
  // a_x v_x and a_y v_y for the 4 vertices of each book.
  const int expected = 2 * 2 + 2 + 2 * 4 * 2;
  EXPECT_EQ(static_cast<int>(f.bilinear.size()), expected);
  EXPECT_EQ(f.stats.bilinear_terms, 22);
  std::map<Family, int> by_family;
  for (const auto& t : f.bilinear) ++by_family[t.family];
  EXPECT_EQ(by_family[Family::C], 4);
  EXPECT_EQ(by_family[Family::F], 2);
  EXPECT_EQ(by_family[Family::E], 16);
}

TEST(Formulation, FourBookBinaries) {
  const Instance inst = generate_instance(5, ShelfDims{});
  const auto f = build_default_problem(inst.params);
  EXPECT_EQ(f.stats.mode_binaries, 4 * kNumModes);
  EXPECT_EQ(f.stats.slot_binaries, 4);
  EXPECT_EQ(f.stats.binaries, static_cast<int>(f.binaries.size()));
  EXPECT_EQ(f.stats.bilinear_terms, 2 * 4 + 18 * 6);
}

TEST(Formulation, ProductFactorsHaveFiniteBounds) {
  const auto f = build_default_problem(generate_instance(9, ShelfDims{}).params);
  for (const auto& t : f.bilinear) {
    for (int v : {t.r, t.p, t.q}) {
      EXPECT_TRUE(std::isfinite(f.lower[v]) && std::isfinite(f.upper[v])) << v;
    }
  }
}

TEST(Formulation, RejectsSingleBook) {
  ProblemParams p = two_books();
  p.stored.clear();
  EXPECT_THROW(build_default_problem(p), std::invalid_argument);
}

TEST(Formulation, RejectsIncompleteGrid) {
  const ProblemParams p = two_books();
  GridSpec g = GridSpec::table_one(p.shelf);
  g.axes.erase(GridClass::kNormal);
  EXPECT_THROW(build_problem(p, g), std::invalid_argument);
}

TEST(Evaluate, WitnessFeasible) {
  for (int seed = 0; seed < 20; ++seed) {
    const Instance inst = generate_instance(seed, ShelfDims{});
    const auto f = build_default_problem(inst.params);
    EXPECT_TRUE(evaluate_constraints(f, inst.witness).feasible(1e-6)) << seed;
  }
}

TEST(Evaluate, OrthogonalityResidual) {
  const Instance inst = generate_instance(2, ShelfDims{});
  const auto f = build_default_problem(inst.params);
  DecisionVector x = inst.witness;
  x[f.index.cos(0)] = 1.0;
  x[f.index.sin(0)] = 1.0;
  refresh_products(f, x);
  const auto v = evaluate_constraints(f, x);
  EXPECT_NEAR(v.by_family.at(Family::C), 1.0, 1e-12);
}

TEST(Evaluate, HalfIntegral) {
  const Instance inst = generate_instance(2, ShelfDims{});
  const auto f = build_default_problem(inst.params);
  DecisionVector x = inst.witness;
  for (int b = 0; b < f.index.num_books(); ++b) {
    for (int m = 0; m < kNumModes; ++m) x[f.index.mode(b, static_cast<Mode>(m))] = 0.5;
  }
  EXPECT_DOUBLE_EQ(evaluate_constraints(f, x).integrality, 0.5);
}

TEST(Evaluate, DimensionMismatch) {
  const auto f = build_default_problem(two_books());
  EXPECT_THROW(evaluate_constraints(f, DecisionVector::zeros(f.dim() - 1)), std::invalid_argument);
}

TEST(Objective, TargetIsZero) {
  const auto f = build_default_problem(generate_instance(4, ShelfDims{}).params);
  EXPECT_EQ(objective_value(f, DecisionVector(f.target)), 0.0);
}

TEST(Objective, DisplacedBook) {
  const auto f = build_default_problem(generate_instance(4, ShelfDims{}).params);
  DecisionVector x(f.target);
  x[f.index.pos_x(0)] += 2.0;
  EXPECT_DOUBLE_EQ(objective_value(f, x), 4.0);
}

TEST(Objective, DirectSummation) {
  const auto f = build_default_problem(generate_instance(6, ShelfDims{}).params);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> N(0.0, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    DecisionVector x(Eigen::VectorXd::NullaryExpr(f.dim(), [&] { return N(rng); }));
    double direct = 0.0;
    for (int i = 0; i < f.dim(); ++i) {
      const double d = x[i] - f.target[i];
      direct += f.weights[i] * d * d;
    }
    EXPECT_NEAR(objective_value(f, x), direct, 1e-12 * std::max(1.0, direct));
  }
}

TEST(Layout, AssembleExtractRoundTrip) {
  const Instance inst = generate_instance(12, ShelfDims{});
  const auto f = build_default_problem(inst.params);
  const Layout l = extract_layout(f, inst.witness);
  const DecisionVector again = assemble(f, l);
  EXPECT_TRUE(evaluate_constraints(f, again).feasible(1e-9));
  for (int b = 0; b < f.index.num_books(); ++b) {
    EXPECT_NEAR(again[f.index.pos_x(b)], inst.witness[f.index.pos_x(b)], 1e-12);
  }
}

TEST(Layout, LeaningBookPivotsOnFloor) {
  // A book leaning right rests on its bottom-right corner.
  std::set<Mode> seen;
  for (int seed = 0; seed < 200; ++seed) {
    const Instance inst = generate_instance(seed, ShelfDims{});
    const auto f = build_default_problem(inst.params);
    const Layout l = extract_layout(f, inst.witness);
    const auto quads = book_quads(f, inst.witness);
    for (int b = 0; b < f.index.num_books(); ++b) {
      if (l.modes[b] == Mode::kLeanRight) {
        EXPECT_NEAR(quads[b][kVertexBottomRight].y(), 0.0, 1e-3);
        seen.insert(l.modes[b]);
      } else if (l.modes[b] == Mode::kLeanLeft) {
        EXPECT_NEAR(quads[b][kVertexBottomLeft].y(), 0.0, 1e-3);
        seen.insert(l.modes[b]);
      }
    }
  }
  EXPECT_EQ(seen.size(), 2u);
}

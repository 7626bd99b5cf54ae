#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "bookshelf/warmstart.hpp"

using namespace bookshelf;

namespace {

Dataset scalar_dataset(std::initializer_list<double> values) {
  Dataset d;
  int i = 0;
  for (double v : values) {
    DatasetEntry e;
    e.index = i++;
    e.theta = Eigen::VectorXd::Constant(1, v);
    d.entries.push_back(e);
  }
  d.update_norm_stats();
  return d;
}

const Dataset& solved_dataset() {
  static const Dataset d = build_dataset(6, {}, 31);
  return d;
}

}  // namespace

TEST(Knn, NumberLine) {
  const Dataset d = scalar_dataset({0.0, 1.0, 2.0});
  const auto r = knn_query(d, Eigen::VectorXd::Constant(1, 0.4), 2);
  ASSERT_EQ(r.neighbors.size(), 2u);
  EXPECT_EQ(r.neighbors[0].entry, 0);
  EXPECT_EQ(r.neighbors[1].entry, 1);
}

TEST(Knn, ClampsToDatasetSize) {
  const Dataset d = scalar_dataset({0.0, 1.0, 2.0});
  EXPECT_EQ(knn_query(d, Eigen::VectorXd::Constant(1, 5.0), 10).neighbors.size(), 3u);
}

TEST(Knn, TiesByIndex) {
  const Dataset d = scalar_dataset({1.0, 3.0, 1.0, 3.0});
  const auto r = knn_query(d, Eigen::VectorXd::Constant(1, 2.0), 4);
  std::vector<int> order;
  for (const auto& n : r.neighbors) order.push_back(n.entry);
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Knn, Rejects) {
  const Dataset d = scalar_dataset({0.0, 1.0});
  EXPECT_THROW(knn_query(Dataset{}, Eigen::VectorXd::Zero(1), 1), std::invalid_argument);
  EXPECT_THROW(knn_query(d, Eigen::VectorXd::Zero(1), 0), std::invalid_argument);
  EXPECT_THROW(knn_query(d, Eigen::VectorXd::Zero(2), 1), std::invalid_argument);
  EXPECT_THROW(solve_online_mpcc(d, Eigen::VectorXd::Zero(1), 0), std::invalid_argument);
}

TEST(Knn, MatchesBruteForce) {
  std::mt19937_64 rng(500);
  std::normal_distribution<double> N(0.0, 1.0);
  Dataset d;
  const Eigen::VectorXd scale = Eigen::VectorXd::LinSpaced(17, 0.1, 10.0);
  for (int i = 0; i < 500; ++i) {
    DatasetEntry e;
    e.index = i;
    e.theta = Eigen::VectorXd::NullaryExpr(17, [&] { return N(rng); }).cwiseProduct(scale);
    d.entries.push_back(e);
  }
  d.update_norm_stats();
  // independent statistics: population mean and deviation per coordinate
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(17), sd = Eigen::VectorXd::Zero(17);
  for (const auto& e : d.entries) mean += e.theta;
  mean /= 500.0;
  for (const auto& e : d.entries) sd += (e.theta - mean).cwiseAbs2();
  sd = (sd / 500.0).cwiseSqrt();
  ASSERT_LE((mean - d.norm_stats.mean).lpNorm<Eigen::Infinity>(), 1e-12);
  const double rel = ((sd - d.norm_stats.stddev).cwiseQuotient(sd)).lpNorm<Eigen::Infinity>();
  // sample or population deviation; only the scale matters for the ordering
  ASSERT_LE(rel, 2e-3);

  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd q = Eigen::VectorXd::NullaryExpr(17, [&] { return N(rng); }).cwiseProduct(scale);
    std::vector<std::pair<double, int>> all;
    for (int i = 0; i < 500; ++i) {
      const Eigen::VectorXd diff = (d.entries[i].theta - q).cwiseQuotient(d.norm_stats.stddev);
      all.push_back({diff.norm(), i});
    }
    std::sort(all.begin(), all.end());
    const auto r = knn_query(d, q, 10);
    ASSERT_EQ(r.neighbors.size(), 10u);
    for (int k = 0; k < 10; ++k) {
      EXPECT_EQ(r.neighbors[k].entry, all[k].second);
      EXPECT_NEAR(r.neighbors[k].distance, all[k].first, 1e-12);
    }
  }
}

TEST(Online, MpccReplay) {
  const Dataset& d = solved_dataset();
  for (const auto& e : d.entries) {
    const auto r = solve_online_mpcc(d, e.theta, 3);
    ASSERT_TRUE(r.success) << e.index;
    EXPECT_EQ(r.trials, 1);
    EXPECT_LE(r.objective, e.objective + 1e-4);
  }
}

TEST(Online, MiqpReplay) {
  const Dataset& d = solved_dataset();
  const GridSpec g = GridSpec::table_one(d.shelf);
  for (const auto& e : d.entries) {
    const auto r = solve_online_miqp(d, e.theta, 10, g);
    ASSERT_TRUE(r.success) << e.index << " " << r.detail;
    EXPECT_EQ(r.trials, 1);
  }
}

TEST(Online, BadIntervalsMoveToNextNeighbor) {
  const Dataset& src = solved_dataset();
  const ShelfDims shelf = src.shelf;
  for (const auto& e : src.entries) {
    const auto f = build_default_problem(ProblemParams::from_theta(e.theta, shelf));
    const Layout l = extract_layout(f, e.x);
    int upright = -1;
    for (int b = 0; b < f.index.num_books(); ++b) {
      if (l.modes[b] == Mode::kUpright) upright = b;
    }
    if (upright < 0) continue;
    Dataset d;
    d.shelf = shelf;
    DatasetEntry bad = e;
    bad.index = 0;
    bad.x[f.index.cos(upright)] = 0.3;
    DatasetEntry good = e;
    good.index = 1;
    d.entries = {bad, good};
    d.update_norm_stats();
    const auto r = solve_online_miqp(d, e.theta, 2, GridSpec::table_one(shelf));
    ASSERT_TRUE(r.success) << r.detail;
    EXPECT_EQ(r.trials, 2);
    return;
  }
  GTEST_SKIP() << "no upright book in the dataset";
}

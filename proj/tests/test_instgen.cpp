#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "bookshelf/instgen.hpp"
#include "bookshelf/model.hpp"

using namespace bookshelf;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Mode read from the pose alone: pinned angles first, then the lean sign.
Mode mode_from_pose(double theta) {
  for (Mode m : {Mode::kFlatLeft, Mode::kUpright, Mode::kFlatRight}) {
    if (std::abs(theta - *pinned_angle(m)) < 1e-9) return m;
  }
  return theta > 0 ? Mode::kLeanLeft : Mode::kLeanRight;
}

}  // namespace

TEST(Generator, Deterministic) {
  const Instance a = generate_instance(123, ShelfDims{});
  const Instance b = generate_instance(123, ShelfDims{});
  const Eigen::VectorXd ta = a.params.theta(), tb = b.params.theta();
  ASSERT_EQ(ta.size(), tb.size());
  for (int i = 0; i < ta.size(); ++i) EXPECT_EQ(ta[i], tb[i]);
  EXPECT_EQ(a.witness.values, b.witness.values);
}

TEST(Generator, ThetaLayout) {
  const Instance a = generate_instance(3, ShelfDims{});
  EXPECT_EQ(a.params.theta().size(), ProblemParams::theta_dim(4));
  EXPECT_EQ(ProblemParams::theta_dim(4), 17);
  const ProblemParams back = ProblemParams::from_theta(a.params.theta(), a.params.shelf);
  EXPECT_EQ(back.theta(), a.params.theta());
}

TEST(Generator, WitnessFeasibleAndInside) {
  for (int seed = 100; seed < 200; ++seed) {
    const Instance inst = generate_instance(seed, ShelfDims{});
    const auto f = build_default_problem(inst.params);
    EXPECT_TRUE(evaluate_constraints(f, inst.witness).feasible(1e-6)) << seed;
    for (const auto& q : book_quads(f, inst.witness)) {
      EXPECT_GE(min_x(q), inst.params.shelf.left() - 1e-9);
      EXPECT_LE(max_x(q), inst.params.shelf.right() + 1e-9);
      EXPECT_GE(min_y(q), -1e-9);
      EXPECT_LE(max_y(q), inst.params.shelf.height + 1e-9);
    }
  }
}

TEST(Generator, AllModesAppear) {
  std::array<int, kNumModes> count{};
  for (int seed = 0; seed < 1000; ++seed) {
    const Instance inst = generate_instance(derive_seed(77, kTestStream, seed), ShelfDims{});
    const auto f = build_default_problem(inst.params);
    const Layout l = extract_layout(f, inst.witness);
    for (int b = 0; b < f.index.num_books(); ++b) {
      const Mode m = mode_from_pose(l.poses[b].theta);
      EXPECT_EQ(m, l.modes[b]);
      ++count[static_cast<int>(m)];
    }
  }
  int total = 0;
  for (int c : count) {
    EXPECT_GT(c, 0);
    total += c;
  }
  EXPECT_EQ(total, 4000);
}

TEST(Generator, TwoBooks) {
  GeneratorOptions o;
  o.num_books = 2;
  const Instance inst = generate_instance(1, ShelfDims{}, o);
  EXPECT_EQ(inst.params.num_books(), 2);
  EXPECT_TRUE(evaluate_constraints(build_default_problem(inst.params), inst.witness).feasible(1e-6));
}

TEST(Seeds, StreamsDisjoint) {
  std::set<std::uint64_t> a, b;
  for (int i = 0; i < 1000; ++i) {
    a.insert(derive_seed(5, kDatasetStream, i));
    b.insert(derive_seed(5, kTestStream, i));
  }
  EXPECT_EQ(a.size(), 1000u);
  for (auto s : b) EXPECT_EQ(a.count(s), 0u);
}

TEST(Dataset, SingleEntryStats) {
  const InstanceSolver witness_solver = [](const Instance& inst) {
    SolveReport r;
    r.success = true;
    r.status = SolveStatus::kSuccess;
    r.x = inst.witness;
    return r;
  };
  const Dataset d = build_dataset(1, witness_solver, 8);
  ASSERT_EQ(d.size(), 1);
  EXPECT_EQ(d.norm_stats.stddev, Eigen::VectorXd::Ones(17));
  EXPECT_EQ(d.norm_stats.mean, d.entries[0].theta);
}

TEST(Dataset, FailingSolverIsDiagnosed) {
  const InstanceSolver never = [](const Instance&) { return SolveReport{}; };
  EXPECT_THROW(build_dataset(5, never, 1), std::runtime_error);
}

TEST(Dataset, AdmmEntriesVerified) {
  const Dataset d = build_dataset(100, {}, 21);
  ASSERT_EQ(d.size(), 100);
  const ShelfDims shelf;
  for (const auto& e : d.entries) {
    const auto f = build_default_problem(ProblemParams::from_theta(e.theta, shelf));
    EXPECT_TRUE(evaluate_constraints(f, e.x).feasible(1e-6)) << e.index;
    EXPECT_NEAR(objective_value(f, e.x), e.objective, 1e-9);
  }
  const Dataset p = d.prefix(10);
  EXPECT_EQ(p.size(), 10);
  EXPECT_EQ(p.entries[9].x.values, d.entries[9].x.values);

  const std::string path = temp_path("bookshelf_dataset_roundtrip.txt");
  save_dataset(d, path);
  const Dataset back = load_dataset(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), d.size());
  for (int i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.entries[i].index, d.entries[i].index);
    EXPECT_EQ(back.entries[i].theta, d.entries[i].theta);
    EXPECT_EQ(back.entries[i].x.values, d.entries[i].x.values);
    EXPECT_EQ(back.entries[i].objective, d.entries[i].objective);
  }
  EXPECT_EQ(back.norm_stats.mean, d.norm_stats.mean);
  EXPECT_EQ(back.norm_stats.stddev, d.norm_stats.stddev);
}

TEST(Instances, RoundTrip) {
  std::vector<Instance> v;
  for (int i = 0; i < 5; ++i) v.push_back(generate_instance(derive_seed(2, kTestStream, i), ShelfDims{}));
  const std::string path = temp_path("bookshelf_instances_roundtrip.txt");
  save_instances(v, path);
  const auto back = load_instances(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(back[i].seed, v[i].seed);
    EXPECT_EQ(back[i].params.theta(), v[i].params.theta());
    EXPECT_EQ(back[i].witness.values, v[i].witness.values);
  }
}

TEST(Instances, MissingFile) {
  EXPECT_ANY_THROW(load_dataset("/nonexistent/dir/dataset.txt"));
}

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bookshelf/model.hpp"
#include "bookshelf/solve_report.hpp"

namespace bookshelf {

/// splitmix64 of (base, stream, index); streams keep dataset and test seeds
/// disjoint.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

inline constexpr std::uint64_t kDatasetStream = 1;
inline constexpr std::uint64_t kTestStream = 2;

struct GeneratorOptions {
  int num_books = 4;
  /// Book sizes as fractions of the shelf width / height.
  double min_width = 0.08;
  double max_width = 0.16;
  double min_height = 0.35;
  double max_height = 0.75;
  /// Lean angles (degrees) are drawn above the tipping angle atan(w / h).
  double min_lean_deg = 10.0;
  double lean_span_deg = 20.0;
  double max_gap = 1.0;
  int max_attempts = 2000;
};

struct Instance {
  ProblemParams params;
  /// Pre-removal layout with the removed book as the inserted one.
  DecisionVector witness;
  std::uint64_t seed = 0;
};

/// Throws std::runtime_error naming the seed once max_attempts layouts were
/// rejected.
Instance generate_instance(std::uint64_t seed, const ShelfDims& shelf,
                           const GeneratorOptions& opts = {});

/// Formulation used for witnesses and verification; the grid only bounds
/// the gridded variables, so any spec with the default ranges gives the same
/// feasible set.
ProblemFormulation build_default_problem(const ProblemParams& params);

struct DatasetEntry {
  int index = 0;
  Eigen::VectorXd theta;
  DecisionVector x;
  double objective = 0.0;
};

struct NormStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

struct Dataset {
  ShelfDims shelf;
  std::vector<DatasetEntry> entries;
  NormStats norm_stats;

  int size() const { return static_cast<int>(entries.size()); }
  /// Recomputes norm_stats; a standard deviation below 1e-12 becomes 1.
  void update_norm_stats();
  /// First n entries with their own statistics.
  Dataset prefix(int n) const;
};

using InstanceSolver = std::function<SolveReport(const Instance&)>;

struct DatasetOptions {
  ShelfDims shelf;
  GeneratorOptions generator;
  int threads = 1;
};

/// Solves instances drawn from the dataset seed stream until n succeed.
/// An empty solver selects consensus ADMM from the manual guess. Throws
/// std::runtime_error when more than half of the attempts fail.
Dataset build_dataset(int n, const InstanceSolver& solver, std::uint64_t seed,
                      const DatasetOptions& opts = {});

void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

void save_instances(const std::vector<Instance>& instances, const std::string& path);
std::vector<Instance> load_instances(const std::string& path);

}  // namespace bookshelf

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bookshelf/grid.hpp"
#include "bookshelf/instgen.hpp"
#include "bookshelf/solve_report.hpp"

namespace bookshelf {

enum class Method { kZeroMpcc, kManualMpcc, kAdmm, kKnnMpcc, kKnnMiqp };

std::string to_string(Method m);
/// zero_mpcc, manual_mpcc, admm, knn_mpcc, knn_miqp.
std::optional<Method> method_from_string(const std::string& name);
bool needs_dataset(Method m);

struct BenchConfig {
  Method method = Method::kKnnMpcc;
  int dataset_size = 500;
  /// <= 0 picks 3 for knn_mpcc and 10 for knn_miqp.
  int k = 0;
  int n_test = 200;
  std::uint64_t seed = 1;
  /// Seconds per solve; <= 0 disables the limit.
  double time_limit = 0.0;
  GridSpec grids;
  ShelfDims shelf;
  GeneratorOptions generator;
  int threads = 1;

  int effective_k() const;
  /// Throws std::invalid_argument on a bad field.
  void validate() const;
};

struct BenchRow {
  int index = 0;
  std::uint64_t seed = 0;
  SolveStatus status = SolveStatus::kMaxIter;
  /// Solver claimed success and the harness verified it.
  bool success = false;
  bool claimed = false;
  double objective = 0.0;
  double max_violation = 0.0;
  double seconds = 0.0;
  int trials = 0;
  int iterations = 0;
  /// Empty unless the solve threw.
  std::string error;
  DecisionVector x;
};

struct BenchReport {
  Method method = Method::kKnnMpcc;
  std::vector<BenchRow> rows;
  double success_rate = 0.0;
  double avg_seconds = 0.0;
  double max_seconds = 0.0;
  double avg_objective = 0.0;
  double avg_trials = 0.0;
  double avg_iterations = 0.0;
  int exceptions = 0;
  /// Claimed successes that failed verification.
  int rejected = 0;

  int successes() const;
};

/// Test instances of a benchmark: seeds from the test stream, so they never
/// coincide with dataset seeds.
std::vector<Instance> test_instances(const BenchConfig& cfg);

/// Runs the configured method on every test instance and verifies each
/// claimed success against the full formulation. Data-driven methods use
/// `dataset` when given, otherwise one is built from cfg.seed.
BenchReport run_benchmark(const BenchConfig& cfg, std::shared_ptr<const Dataset> dataset = nullptr);
BenchReport run_benchmark(const BenchConfig& cfg, const std::vector<Instance>& instances,
                          std::shared_ptr<const Dataset> dataset);

/// One solve of one instance with the configured method, verified.
BenchRow solve_instance(const BenchConfig& cfg, const Instance& inst, const Dataset* dataset);

/// Timings are left out unless asked for so that runs compare byte for byte.
std::string report_csv(const BenchReport& r, bool with_timing = false);
std::string report_table(const std::vector<BenchReport>& reports);

}  // namespace bookshelf

#pragma once

#include <string>

#include "bookshelf/model.hpp"

namespace bookshelf {

enum class SolveStatus {
  kSuccess,
  kInfeasible,
  kInfeasibleStall,
  kMaxIter,
  kTimeLimit,
  kNodeLimit,
  kNoConsensus,
  kAllTrialsFailed,
  kVerificationFailed,
};

std::string to_string(SolveStatus s);

/// Outcome of one solve through any of the pipelines. `success` is only set
/// after the solution passed evaluate_constraints at the path tolerance.
struct SolveReport {
  SolveStatus status = SolveStatus::kMaxIter;
  bool success = false;
  double objective = 0.0;
  double seconds = 0.0;
  int trials = 0;
  int iterations = 0;
  double max_violation = 0.0;
  DecisionVector x;
  std::string detail;
};

}  // namespace bookshelf

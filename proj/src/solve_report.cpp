#include "bookshelf/solve_report.hpp"

namespace bookshelf {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kSuccess: return "success";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kInfeasibleStall: return "infeasible_stall";
    case SolveStatus::kMaxIter: return "max_iter";
    case SolveStatus::kTimeLimit: return "time_limit";
    case SolveStatus::kNodeLimit: return "node_limit";
    case SolveStatus::kNoConsensus: return "no_consensus";
    case SolveStatus::kAllTrialsFailed: return "all_trials_failed";
    case SolveStatus::kVerificationFailed: return "verification_failed";
  }
  return "unknown";
}

}  // namespace bookshelf

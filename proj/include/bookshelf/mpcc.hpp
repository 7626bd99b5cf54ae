#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bookshelf/instgen.hpp"
#include "bookshelf/model.hpp"
#include "bookshelf/solve_report.hpp"

namespace bookshelf {

/// minimize sum_i w_i (x_i - t_i)^2 over lower <= x <= upper subject to
/// linear rows, x[r] = x[p] x[q] for every bilinear term and
/// x[j] (1 - x[j]) <= epsilon for every complementarity index.
struct MpccProblem {
  Eigen::VectorXd weights;
  Eigen::VectorXd target;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  LinearRows linear;
  std::vector<BilinearTerm> bilinear;
  std::vector<int> complementarity;
  double epsilon = 1e-8;

  int dim() const { return static_cast<int>(weights.size()); }
  double objective(const Eigen::VectorXd& x) const;
  /// Largest violation over bounds, rows, products and complementarity.
  double max_violation(const Eigen::VectorXd& x) const;
};

/// Binaries relaxed to [0, 1] with complementarity on each of them.
MpccProblem make_mpcc(const ProblemFormulation& f, double epsilon = 1e-8);

enum class NlpStatus { kFeasibleOptimal, kInfeasibleStall, kMaxIter };
const char* to_string(NlpStatus s);

struct NlpResult {
  Eigen::VectorXd x;
  NlpStatus status = NlpStatus::kMaxIter;
  double max_violation = 0.0;
  double projected_gradient = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
};

struct NlpOptions {
  double feasibility_tol = 1e-6;
  double optimality_tol = 1e-5;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double max_penalty = 1e8;
  int max_inner = 500;
  int max_outer = 40;
};

/// Augmented-Lagrangian method: multipliers and penalty in the outer loop,
/// projected Newton with an Armijo arc search on the box in the inner loop.
NlpResult solve_nlp(const MpccProblem& p, const Eigen::VectorXd& x0, const NlpOptions& opts = {});

struct MpccOptions {
  NlpOptions nlp;
  double epsilon = 1e-8;
  /// Verification tolerance of the rounded solution.
  double verify_tol = 1e-6;
};

/// Solves the complementarity relaxation from x0, rounds the binaries at 0.5
/// and verifies against the original formulation. A rounded point that fails
/// verification is re-solved once with the binaries fixed.
SolveReport solve_mpcc(const ProblemFormulation& f, const DecisionVector& x0,
                       const MpccOptions& opts = {});

/// Stored books at their recorded poses and witness modes, the new book
/// upright at the shelf center, planes fitted per pair, products consistent.
DecisionVector manual_guess(const Instance& inst);
DecisionVector manual_guess(const ProblemFormulation& f, const Instance& inst);

}  // namespace bookshelf

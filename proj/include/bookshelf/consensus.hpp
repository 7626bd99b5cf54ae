#pragma once

#include <Eigen/Core>

#include "bookshelf/instgen.hpp"
#include "bookshelf/miqp.hpp"
#include "bookshelf/model.hpp"
#include "bookshelf/mpcc.hpp"
#include "bookshelf/solve_report.hpp"

namespace bookshelf {

struct ConsensusState {
  DecisionVector x1;  // mixed-integer copy
  DecisionVector x2;  // nonlinear copy
  Eigen::VectorXd w;
  Eigen::VectorXd G;  // diagonal weights
  double gamma_scale = 1.1;
  int iteration = 0;
};

ConsensusState initial_state(const DecisionVector& init, double gamma_scale = 1.1);

/// w <- w + x1 - x2, G <- gamma G, w <- w / gamma.
void consensus_update(ConsensusState& s);

struct AdmmOptions {
  int max_iterations = 20;
  double tolerance = 1e-4;
  double gamma_scale = 1.1;
  double verify_tol = 1e-6;
  MiqpOptions mixed_integer;
  NlpOptions nonlinear = projection_defaults();

  static NlpOptions projection_defaults() {
    NlpOptions o;
    o.initial_penalty = 100.0;
    return o;
  }
};

/// Both sub-problems of one iteration over the same formulation.
class ConsensusProblem {
 public:
  explicit ConsensusProblem(const ProblemFormulation& f);

  const ProblemFormulation& formulation() const { return f_; }
  /// argmin ||x - target||_G over the mixed-integer linear rows.
  DecisionVector mixed_integer_step(const Eigen::VectorXd& target, const Eigen::VectorXd& G,
                                    const DecisionVector& previous,
                                    const MiqpOptions& opts) const;
  /// argmin ||x - target||_G over the nonlinear rows; binaries are relaxed
  /// to [0, 1] under the complementarity constraints of the MPCC engine.
  NlpResult nonlinear_step(const Eigen::VectorXd& target, const Eigen::VectorXd& G,
                           const DecisionVector& start, const NlpOptions& opts) const;

 private:
  ProblemFormulation f_;
  // Mixed-integer sub-problem on the variables its rows touch.
  std::vector<int> mi_vars_;
  std::vector<int> mi_binaries_;  // positions within mi_vars_
  Qp mi_qp_;
  MpccProblem nl_;
};

/// One three-step iteration. Throws std::runtime_error naming the
/// iteration when a sub-solver fails.
ConsensusState admm_step(const ConsensusState& state, const ConsensusProblem& problem,
                         const AdmmOptions& opts = {});
ConsensusState admm_step(const ConsensusState& state, const ProblemFormulation& f,
                         const AdmmOptions& opts = {});

SolveReport solve_admm(const ProblemFormulation& f, const DecisionVector& init,
                       const AdmmOptions& opts = {});
/// From the manual guess.
SolveReport solve_admm(const Instance& inst, const AdmmOptions& opts = {});

}  // namespace bookshelf

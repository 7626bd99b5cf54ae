#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bookshelf/grid.hpp"
#include "bookshelf/model.hpp"
#include "bookshelf/qp.hpp"
#include "bookshelf/solve_report.hpp"

namespace bookshelf {

/// ceil(log2((np + 1)(nq + 1))).
int envelope_binary_count(int np, int nq);

/// Variables that replace one product x[r] = x[p] x[q]:
///   x[p] = sum_i alpha_i xp^i,  x[q] = sum_j beta_j xq^j,
///   x[r] = sum_ij gamma_ij xp^i xq^j, row/column sums of gamma = alpha/beta,
/// and sos2 selection of a single cell through binaries delta.
struct EnvelopeBlock {
  int term = 0;
  int r = 0;
  int p = 0;
  int q = 0;
  AxisGrid grid_p;
  AxisGrid grid_q;
  Range alpha;
  Range beta;
  Range gamma;  // (np + 1) x (nq + 1), row-major in i
  Range cell;   // np x nq continuous cell weights
  Range delta;  // envelope binaries

  int np() const { return grid_p.segments; }
  int nq() const { return grid_q.segments; }
  int gamma_index(int i, int j) const { return gamma.start + i * (nq() + 1) + j; }
  /// Largest |x_r - x_p x_q| over the block: cell area / 4.
  double gap() const { return grid_p.cell_width() * grid_q.cell_width() / 4.0; }
};

/// Reflected Gray code of a cell index laid out boustrophedon over the
/// np x nq cell grid, so neighboring cells differ in one bit.
unsigned cell_code(int i, int j, int nq);

struct MiqpProblem {
  /// Convex QP over the original variables followed by the block variables;
  /// bounds are explicit identity rows at the end of A.
  Qp base;
  /// Original binaries plus every delta.
  std::vector<int> binaries;
  std::vector<EnvelopeBlock> blocks;
  /// Adds to base.objective() to give objective_value of the formulation.
  double objective_constant = 0.0;
  int num_original = 0;
  /// Rows of base.A that hold variable bounds start here.
  int bound_row_start = 0;
  ProblemFormulation formulation;

  int dim() const { return base.n(); }
  /// Per-term allowance |x_r - x_p x_q| <= gap used when verifying.
  Eigen::VectorXd gap_allowance() const;
};

/// Throws std::invalid_argument when the grid misses a bilinear variable or
/// a grid range does not contain the variable's bounds.
MiqpProblem reformulate_sos2(const ProblemFormulation& f, const GridSpec& grids);

/// Quadratic objective sum w (x - t)^2 as (P, q, constant).
void quadratic_objective(const Eigen::VectorXd& weights, const Eigen::VectorXd& target,
                         int total_dim, Eigen::SparseMatrix<double>& P, Eigen::VectorXd& q,
                         double& constant);

struct MiqpOptions {
  double gap = 1e-4;
  int node_limit = 100000;
  /// Seconds; <= 0 disables the limit.
  double time_limit = 0.0;
  double integrality_tol = 1e-6;
  QpSettings qp;
  /// Binary values (aligned with MiqpProblem::binaries) tried first as an
  /// incumbent.
  std::optional<Eigen::VectorXd> initial_binaries;
};

struct MiqpResult {
  SolveStatus status = SolveStatus::kInfeasible;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
  double bound = -std::numeric_limits<double>::infinity();
  int nodes = 0;
  int qp_iterations = 0;
  double seconds = 0.0;
  bool has_incumbent() const { return x.size() > 0; }
};

/// Best-first branch and bound on the most fractional binary. Incumbents are
/// re-solved with all binaries fixed, so their linear rows hold at the QP
/// tolerance.
MiqpResult solve_miqp(const MiqpProblem& m, const MiqpOptions& opts = {});

/// Same search over an explicit QP and binary index list.
MiqpResult branch_and_bound(const Qp& qp, const std::vector<int>& binaries,
                            double objective_constant, const MiqpOptions& opts = {});

/// Fixes every binary of the formulation to the candidate's (rounded) value
/// and replaces each product by the four-corner block of the grid cell that
/// holds the candidate's factors. Variables: x followed by 8 per term
/// (alpha_i, alpha_i+1, beta_j, beta_j+1, gamma over the cell corners).
/// Throws std::out_of_range when a factor lies outside its grid.
Qp fix_and_reduce(const MiqpProblem& m, const DecisionVector& candidate);

}  // namespace bookshelf

#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace bookshelf {

/// minimize 1/2 x^T P x + q^T x  subject to  l <= A x <= u.
struct Qp {
  Eigen::SparseMatrix<double> P;  // full symmetric storage
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  int n() const { return static_cast<int>(q.size()); }
  int m() const { return static_cast<int>(l.size()); }
  double objective(const Eigen::VectorXd& x) const;
  /// Throws std::invalid_argument on inconsistent dimensions or a P that is
  /// not symmetric within 1e-10.
  void validate() const;
};

enum class QpStatus { kOptimal, kPrimalInfeasible, kMaxIter };

const char* to_string(QpStatus s);

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd duals;
  QpStatus status = QpStatus::kMaxIter;
  int iterations = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
};

struct QpWarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd duals;
};

struct QpSettings {
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_prim_inf = 1e-6;
  int max_iter = 20000;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  bool polish = true;
  int scaling_iterations = 10;
};

/// Operator-splitting QP solver with Ruiz equilibration, adaptive penalty,
/// infeasibility certificates and an active-set polishing step. An
/// `kOptimal` result always has absolute primal and dual residuals within
/// `eps_abs`.
QpSolution solve_qp(const Qp& qp, const std::optional<QpWarmStart>& warm = std::nullopt,
                    const QpSettings& settings = {});

}  // namespace bookshelf

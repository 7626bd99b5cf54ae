#pragma once

#include <vector>

#include <Eigen/Core>

#include "bookshelf/grid.hpp"
#include "bookshelf/instgen.hpp"
#include "bookshelf/mpcc.hpp"
#include "bookshelf/qp.hpp"
#include "bookshelf/solve_report.hpp"

namespace bookshelf {

struct Neighbor {
  int entry = 0;  // position in Dataset::entries
  double distance = 0.0;
};

struct KnnQueryResult {
  /// Ascending by distance, ties by entry position.
  std::vector<Neighbor> neighbors;
  int k = 0;
};

struct KnnOptions {
  /// z-score the parameters with the dataset statistics before measuring.
  bool normalize = true;
};

/// Exact K-nearest-neighbor scan. Throws std::invalid_argument on an empty
/// dataset, K < 1 or a parameter dimension mismatch.
KnnQueryResult knn_query(const Dataset& d, const Eigen::VectorXd& theta, int k,
                         const KnnOptions& opts = {});

struct OnlineOptions {
  KnnOptions knn;
  MpccOptions mpcc;
  QpSettings qp = reduced_qp_defaults();
  /// After an MIQP-path success, one MPCC solve from the QP point to remove
  /// the envelope error of the products.
  bool polish = true;
  /// Seconds over all trials; <= 0 disables the limit.
  double time_limit = 0.0;

  /// Reduced QPs that have not converged or certified infeasibility after
  /// 4000 iterations are abandoned for the next neighbor.
  static QpSettings reduced_qp_defaults() {
    QpSettings s;
    s.max_iter = 4000;
    return s;
  }
};

/// Tries the neighbors' solutions in order as initial guesses for the MPCC
/// solver; the first verified success wins.
SolveReport solve_online_mpcc(const Dataset& d, const Eigen::VectorXd& theta, int k,
                              const OnlineOptions& opts = {});

/// For each neighbor, fixes its binaries and grid cells and solves the
/// reduced QP, warm-started from the previous trial.
SolveReport solve_online_miqp(const Dataset& d, const Eigen::VectorXd& theta, int k,
                              const GridSpec& grids, const OnlineOptions& opts = {});

}  // namespace bookshelf

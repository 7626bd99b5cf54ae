#include "bookshelf/warmstart.hpp"

#include <algorithm>
#include <chrono>
#include <optional>
#include <stdexcept>

#include "bookshelf/miqp.hpp"

namespace bookshelf {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_k(int k) {
  if (k < 1) throw std::invalid_argument("K must be at least 1");
}

ProblemFormulation query_problem(const Dataset& d, const Eigen::VectorXd& theta) {
  return build_default_problem(ProblemParams::from_theta(theta, d.shelf));
}

}  // namespace

KnnQueryResult knn_query(const Dataset& d, const Eigen::VectorXd& theta, int k,
                         const KnnOptions& opts) {
  if (d.entries.empty()) throw std::invalid_argument("empty dataset");
  check_k(k);
  const Eigen::Index dim = d.entries.front().theta.size();
  if (theta.size() != dim) throw std::invalid_argument("parameter dimension mismatch");
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(dim);
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(dim);
  if (opts.normalize) {
    if (d.norm_stats.mean.size() != dim || d.norm_stats.stddev.size() != dim) {
      throw std::invalid_argument("dataset statistics missing");
    }
    shift = d.norm_stats.mean;
    scale = d.norm_stats.stddev.cwiseInverse();
  }
  const Eigen::VectorXd q = (theta - shift).cwiseProduct(scale);
  KnnQueryResult out;
  out.k = k;
  out.neighbors.reserve(d.entries.size());
  for (int i = 0; i < d.size(); ++i) {
    const Eigen::VectorXd& t = d.entries[i].theta;
    if (t.size() != dim) throw std::invalid_argument("dataset entries differ in dimension");
    out.neighbors.push_back({i, ((t - shift).cwiseProduct(scale) - q).norm()});
  }
  const int keep = std::min(k, d.size());
  auto less = [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.entry < b.entry);
  };
  std::partial_sort(out.neighbors.begin(), out.neighbors.begin() + keep, out.neighbors.end(), less);
  out.neighbors.resize(keep);
  return out;
}

SolveReport solve_online_mpcc(const Dataset& d, const Eigen::VectorXd& theta, int k,
                              const OnlineOptions& opts) {
  const auto start = Clock::now();
  const KnnQueryResult knn = knn_query(d, theta, k, opts.knn);
  const ProblemFormulation f = query_problem(d, theta);
  SolveReport last;
  int trials = 0;
  for (const Neighbor& nb : knn.neighbors) {
    if (opts.time_limit > 0.0 && trials > 0 && elapsed(start) > opts.time_limit) {
      last.status = SolveStatus::kTimeLimit;
      last.success = false;
      last.detail = "time limit after " + std::to_string(trials) + " trials";
      last.trials = trials;
      last.seconds = elapsed(start);
      return last;
    }
    ++trials;
    const DecisionVector& guess = d.entries[nb.entry].x;
    if (guess.size() != f.dim()) throw std::invalid_argument("dataset solution dimension mismatch");
    last = solve_mpcc(f, guess, opts.mpcc);
    if (last.success) break;
  }
  last.trials = trials;
  last.seconds = elapsed(start);
  if (!last.success) {
    last.detail = "all " + std::to_string(trials) + " trials failed; last: " + to_string(last.status);
    last.status = SolveStatus::kAllTrialsFailed;
  }
  return last;
}

SolveReport solve_online_miqp(const Dataset& d, const Eigen::VectorXd& theta, int k,
                              const GridSpec& grids, const OnlineOptions& opts) {
  const auto start = Clock::now();
  const KnnQueryResult knn = knn_query(d, theta, k, opts.knn);
  const ProblemFormulation f = query_problem(d, theta);
  const MiqpProblem m = reformulate_sos2(f, grids);
  const Eigen::VectorXd allowance = m.gap_allowance();
  SolveReport rep;
  rep.status = SolveStatus::kAllTrialsFailed;
  std::optional<QpWarmStart> warm;
  int trials = 0;
  for (const Neighbor& nb : knn.neighbors) {
    if (opts.time_limit > 0.0 && trials > 0 && elapsed(start) > opts.time_limit) {
      rep.status = SolveStatus::kTimeLimit;
      rep.detail = "time limit after " + std::to_string(trials) + " trials";
      break;
    }
    ++trials;
    Qp qp;
    try {
      qp = fix_and_reduce(m, d.entries[nb.entry].x);
    } catch (const std::out_of_range&) {
      continue;
    }
    const QpSolution sol = solve_qp(qp, warm, opts.qp);
    rep.iterations += sol.iterations;
    if (sol.status != QpStatus::kOptimal) {
      warm.reset();
      continue;
    }
    warm = QpWarmStart{sol.x, sol.duals};
    const DecisionVector x(sol.x.head(f.dim()));
    const ViolationReport v = evaluate_constraints(f, x);
    if (!v.feasible_with_allowance(allowance, 1e-6)) continue;
    rep.status = SolveStatus::kSuccess;
    rep.success = true;
    rep.x = x;
    rep.objective = objective_value(f, x);
    rep.max_violation = v.max();
    break;
  }
  rep.trials = trials;
  if (rep.success && opts.polish) {
    const SolveReport polished = solve_mpcc(f, rep.x, opts.mpcc);
    rep.iterations += polished.iterations;
    if (polished.success) {
      rep.x = polished.x;
      rep.objective = polished.objective;
      rep.max_violation = polished.max_violation;
    } else {
      rep.detail = "polish failed: " + to_string(polished.status);
    }
  }
  if (!rep.success && rep.detail.empty()) {
    rep.detail = "all " + std::to_string(trials) + " trials failed";
  }
  rep.seconds = elapsed(start);
  return rep;
}

}  // namespace bookshelf

#include "bookshelf/consensus.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bookshelf {

namespace {

using Vec = Eigen::VectorXd;

LinearRows select_rows(const LinearRows& rows, bool mixed_integer) {
  std::vector<int> keep;
  for (int r = 0; r < rows.rows(); ++r) {
    const Family fam = rows.family[r];
    const bool mi = is_mixed_integer_linear(fam);
    if (mixed_integer ? mi : fam != Family::G) keep.push_back(r);
  }
  LinearRows out;
  std::vector<Eigen::Triplet<double>> trips;
  out.lower.resize(static_cast<int>(keep.size()));
  out.upper.resize(static_cast<int>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const int r = keep[k];
    for (SparseRowMatrix::InnerIterator it(rows.A, r); it; ++it) {
      trips.emplace_back(static_cast<int>(k), static_cast<int>(it.col()), it.value());
    }
    out.lower[static_cast<int>(k)] = rows.lower[r];
    out.upper[static_cast<int>(k)] = rows.upper[r];
    out.family.push_back(rows.family[r]);
  }
  out.A.resize(static_cast<int>(keep.size()), rows.A.cols());
  out.A.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

ConsensusState initial_state(const DecisionVector& init, double gamma_scale) {
  ConsensusState s;
  s.x1 = init;
  s.x2 = init;
  s.w = Vec::Zero(init.size());
  s.G = Vec::Ones(init.size());
  s.gamma_scale = gamma_scale;
  return s;
}

void consensus_update(ConsensusState& s) {
  s.w += s.x1.values - s.x2.values;
  s.G *= s.gamma_scale;
  s.w /= s.gamma_scale;
  ++s.iteration;
}

ConsensusProblem::ConsensusProblem(const ProblemFormulation& f) : f_(f) {
  const LinearRows mi = select_rows(f.linear, true);
  std::set<int> vars(f.binaries.begin(), f.binaries.end());
  for (int r = 0; r < mi.rows(); ++r) {
    for (SparseRowMatrix::InnerIterator it(mi.A, r); it; ++it) vars.insert(static_cast<int>(it.col()));
  }
  mi_vars_.assign(vars.begin(), vars.end());
  std::vector<int> local(f.dim(), -1);
  for (std::size_t k = 0; k < mi_vars_.size(); ++k) local[mi_vars_[k]] = static_cast<int>(k);
  for (int j : f.binaries) mi_binaries_.push_back(local[j]);

  const int n = static_cast<int>(mi_vars_.size());
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> lo, hi;
  for (int r = 0; r < mi.rows(); ++r) {
    for (SparseRowMatrix::InnerIterator it(mi.A, r); it; ++it) {
      trips.emplace_back(r, local[it.col()], it.value());
    }
    lo.push_back(mi.lower[r]);
    hi.push_back(mi.upper[r]);
  }
  for (int k = 0; k < n; ++k) {
    trips.emplace_back(static_cast<int>(lo.size()), k, 1.0);
    lo.push_back(f.lower[mi_vars_[k]]);
    hi.push_back(f.upper[mi_vars_[k]]);
  }
  mi_qp_.A.resize(static_cast<int>(lo.size()), n);
  mi_qp_.A.setFromTriplets(trips.begin(), trips.end());
  mi_qp_.l = Eigen::Map<Vec>(lo.data(), static_cast<int>(lo.size()));
  mi_qp_.u = Eigen::Map<Vec>(hi.data(), static_cast<int>(hi.size()));
  mi_qp_.q = Vec::Zero(n);
  mi_qp_.P.resize(n, n);

  nl_ = make_mpcc(f);
  nl_.linear = select_rows(f.linear, false);
}

DecisionVector ConsensusProblem::mixed_integer_step(const Vec& target, const Vec& G,
                                                    const DecisionVector& previous,
                                                    const MiqpOptions& opts) const {
  const int n = static_cast<int>(mi_vars_.size());
  Qp qp = mi_qp_;
  Vec wl(n), tl(n);
  for (int k = 0; k < n; ++k) {
    wl[k] = G[mi_vars_[k]];
    tl[k] = target[mi_vars_[k]];
  }
  double constant = 0.0;
  quadratic_objective(wl, tl, n, qp.P, qp.q, constant);
  MiqpOptions o = opts;
  Vec guess(static_cast<int>(mi_binaries_.size()));
  for (std::size_t b = 0; b < mi_binaries_.size(); ++b) {
    guess[static_cast<int>(b)] = previous[mi_vars_[mi_binaries_[b]]] >= 0.5 ? 1.0 : 0.0;
  }
  o.initial_binaries = guess;
  const MiqpResult r = branch_and_bound(qp, mi_binaries_, constant, o);
  if (!r.has_incumbent()) {
    throw std::runtime_error(std::string("mixed-integer step failed: ") + to_string(r.status));
  }
  DecisionVector x(target.cwiseMax(f_.lower).cwiseMin(f_.upper));
  for (int k = 0; k < n; ++k) x[mi_vars_[k]] = r.x[k];
  return x;
}

NlpResult ConsensusProblem::nonlinear_step(const Vec& target, const Vec& G,
                                           const DecisionVector& start,
                                           const NlpOptions& opts) const {
  MpccProblem p = nl_;
  p.weights = G;
  p.target = target;
  return solve_nlp(p, start.values, opts);
}

ConsensusState admm_step(const ConsensusState& state, const ConsensusProblem& problem,
                         const AdmmOptions& opts) {
  const ProblemFormulation& f = problem.formulation();
  if (state.x1.size() != f.dim() || state.x2.size() != f.dim() || state.w.size() != f.dim() ||
      state.G.size() != f.dim()) {
    throw std::invalid_argument("consensus state does not match the formulation");
  }
  ConsensusState next = state;
  try {
    next.x1 = problem.mixed_integer_step(state.x2.values - state.w, state.G, state.x1,
                                         opts.mixed_integer);
  } catch (const std::exception& e) {
    throw std::runtime_error("iteration " + std::to_string(state.iteration + 1) + ": " + e.what());
  }
  const NlpResult nl =
      problem.nonlinear_step(next.x1.values + state.w, state.G, state.x2, opts.nonlinear);
  if (nl.status != NlpStatus::kFeasibleOptimal) {
    throw std::runtime_error("iteration " + std::to_string(state.iteration + 1) +
                             ": nonlinear step " + to_string(nl.status));
  }
  next.x2 = DecisionVector(nl.x);
  consensus_update(next);
  return next;
}

ConsensusState admm_step(const ConsensusState& state, const ProblemFormulation& f,
                         const AdmmOptions& opts) {
  return admm_step(state, ConsensusProblem(f), opts);
}

SolveReport solve_admm(const ProblemFormulation& f, const DecisionVector& init,
                       const AdmmOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  SolveReport rep;
  auto finish = [&](SolveStatus status, const DecisionVector& x) {
    rep.status = status;
    rep.success = status == SolveStatus::kSuccess;
    rep.x = x;
    rep.objective = objective_value(f, x);
    rep.max_violation = evaluate_constraints(f, x).max();
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  };
  const ConsensusProblem problem(f);
  ConsensusState s = initial_state(init, opts.gamma_scale);
  bool converged = false;
  try {
    while (s.iteration < opts.max_iterations) {
      s = admm_step(s, problem, opts);
      rep.trials = s.iteration;
      if ((s.x1.values - s.x2.values).lpNorm<Eigen::Infinity>() <= opts.tolerance) {
        converged = true;
        break;
      }
    }
  } catch (const std::exception& e) {
    rep.detail = e.what();
    return finish(SolveStatus::kNoConsensus, s.x2);
  }
  rep.iterations = s.iteration;
  if (!converged) {
    rep.detail = "no consensus within the iteration limit";
    return finish(SolveStatus::kNoConsensus, s.x2);
  }
  // Round the binaries and project the rest back onto the nonlinear rows.
  Vec x = s.x2.values;
  for (int j : f.binaries) x[j] = x[j] >= 0.5 ? 1.0 : 0.0;
  if (evaluate_constraints(f, DecisionVector(x)).feasible(opts.verify_tol)) {
    return finish(SolveStatus::kSuccess, DecisionVector(x));
  }
  MpccProblem polish = make_mpcc(f);
  polish.complementarity.clear();
  for (int j : f.binaries) polish.lower[j] = polish.upper[j] = x[j];
  polish.weights = Vec::Ones(f.dim());
  polish.target = x;
  const NlpResult r = solve_nlp(polish, x, opts.nonlinear);
  if (r.status == NlpStatus::kFeasibleOptimal &&
      evaluate_constraints(f, DecisionVector(r.x)).feasible(opts.verify_tol)) {
    return finish(SolveStatus::kSuccess, DecisionVector(r.x));
  }
  rep.detail = "consensus point failed verification";
  return finish(SolveStatus::kVerificationFailed, DecisionVector(r.x));
}

SolveReport solve_admm(const Instance& inst, const AdmmOptions& opts) {
  const ProblemFormulation f = build_default_problem(inst.params);
  return solve_admm(f, manual_guess(f, inst), opts);
}

}  // namespace bookshelf

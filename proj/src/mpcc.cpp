#include "bookshelf/mpcc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace bookshelf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

enum class ConKind { kLinear, kBilinear, kComplementarity };

// Every constraint becomes c(x) - s = 0 with a boxed slack s, or c(x) = rhs
// for equalities, so the augmented Lagrangian stays smooth and all
// inequalities live in the box.
struct Constraint {
  ConKind kind = ConKind::kLinear;
  // Linear: coefficients. Bilinear: r, p, q. Complementarity: r.
  std::vector<std::pair<int, double>> coefs;
  int r = -1, p = -1, q = -1;
  int slack = -1;
  double rhs = 0.0;
  double unit = 1.0;
  // Hessian value slots for each pair (a, b), a <= b, of gradient entries.
  std::vector<int> pair_slots;
  int curvature_slot = -1;
  double curvature = 0.0;
};

class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const MpccProblem& prob, const NlpOptions& opts)
      : p_(prob), opts_(opts), n_(prob.dim()) {
    build_constraints();
    build_pattern();
  }

  NlpResult solve(const Vec& x0) {
    NlpResult res;
    Vec z(dim_);
    z.head(n_) = x0;
    z = clip(z);
    for (const auto& c : cons_) {
      if (c.slack >= 0) z[c.slack] = std::clamp(raw(c, z), lower_[c.slack], upper_[c.slack]);
    }
    const int m = static_cast<int>(cons_.size());
    Vec y = Vec::Zero(m);
    double rho = opts_.initial_penalty;
    double prev_violation = kInf;
    for (int outer = 1; outer <= opts_.max_outer; ++outer) {
      res.outer_iterations = outer;
      double omega = std::max(0.5 * opts_.optimality_tol, std::pow(0.1, outer));
      if (prev_violation < kInf && prev_violation > opts_.feasibility_tol) {
        omega = std::min(omega, std::max(0.1 * opts_.feasibility_tol, 0.1 * prev_violation));
      }
      double pg = 0.0;
      const int used = inner(z, y, rho, omega, &pg);
      res.inner_iterations += used;
      double violation = 0.0;
      for (int k = 0; k < m; ++k) {
        const double r = residual(cons_[k], z);
        violation = std::max(violation, std::abs(r) * cons_[k].unit);
        y[k] = std::clamp(y[k] + rho * r, -1e12, 1e12);
      }
      res.x = z.head(n_);
      res.max_violation = violation;
      res.projected_gradient = pg;
      if (violation <= opts_.feasibility_tol && pg <= opts_.optimality_tol) {
        res.status = NlpStatus::kFeasibleOptimal;
        return res;
      }
      if (violation > opts_.feasibility_tol && violation > 0.25 * prev_violation) {
        rho *= opts_.penalty_growth;
        if (rho > opts_.max_penalty) {
          res.status = NlpStatus::kInfeasibleStall;
          return res;
        }
      }
      prev_violation = violation;
    }
    res.status = NlpStatus::kMaxIter;
    return res;
  }

 private:
  int add_slack(double lo, double hi) {
    lower_.push_back(lo);
    upper_.push_back(hi);
    return dim_++;
  }

  void set_range(Constraint& c, double lo, double hi) {
    if (lo == hi) {
      c.rhs = lo;
    } else {
      c.slack = add_slack(lo, hi);
    }
  }

  void build_constraints() {
    dim_ = n_;
    lower_.assign(p_.lower.data(), p_.lower.data() + n_);
    upper_.assign(p_.upper.data(), p_.upper.data() + n_);
    const LinearRows& L = p_.linear;
    for (int r = 0; r < L.rows(); ++r) {
      Constraint c;
      c.kind = ConKind::kLinear;
      for (SparseRowMatrix::InnerIterator it(L.A, r); it; ++it) {
        if (it.value() != 0.0) c.coefs.emplace_back(static_cast<int>(it.col()), it.value());
      }
      if (c.coefs.empty()) continue;
      double scale = 0.0;
      for (const auto& e : c.coefs) scale = std::max(scale, std::abs(e.second));
      if (c.coefs.size() == 1 && L.lower[r] != L.upper[r]) {
        // A single-variable row is a bound.
        const auto [i, a] = c.coefs.front();
        double lo = L.lower[r] / a;
        double hi = L.upper[r] / a;
        if (a < 0.0) std::swap(lo, hi);
        lower_[i] = std::max(lower_[i], lo);
        upper_[i] = std::min(upper_[i], hi);
        continue;
      }
      // Rows are equilibrated; `unit` maps residuals back to row units.
      for (auto& e : c.coefs) e.second /= scale;
      c.unit = scale;
      set_range(c, L.lower[r] / scale, L.upper[r] / scale);
      cons_.push_back(std::move(c));
    }
    for (const auto& t : p_.bilinear) {
      Constraint c;
      c.kind = ConKind::kBilinear;
      c.r = t.r;
      c.p = t.p;
      c.q = t.q;
      c.curvature = t.p == t.q ? -2.0 : -1.0;
      cons_.push_back(std::move(c));
    }
    for (int j : p_.complementarity) {
      Constraint c;
      c.kind = ConKind::kComplementarity;
      c.r = j;
      c.curvature = -2.0;
      set_range(c, -kInf, p_.epsilon);
      cons_.push_back(std::move(c));
    }
    for (int i = 0; i < n_; ++i) {
      if (lower_[i] > upper_[i]) lower_[i] = upper_[i] = 0.5 * (lower_[i] + upper_[i]);
    }
    lo_vec_ = Eigen::Map<const Vec>(lower_.data(), dim_);
    hi_vec_ = Eigen::Map<const Vec>(upper_.data(), dim_);
  }

  /// Gradient entries of a residual; the index set is fixed, values vary.
  void gradient(const Constraint& c, const Vec& z, std::vector<std::pair<int, double>>& out) const {
    out.clear();
    switch (c.kind) {
      case ConKind::kLinear:
        out = c.coefs;
        break;
      case ConKind::kBilinear:
        out.emplace_back(c.r, 1.0);
        if (c.p == c.q) {
          out.emplace_back(c.p, -2.0 * z[c.p]);
        } else {
          out.emplace_back(c.p, -z[c.q]);
          out.emplace_back(c.q, -z[c.p]);
        }
        break;
      case ConKind::kComplementarity:
        out.emplace_back(c.r, 1.0 - 2.0 * z[c.r]);
        break;
    }
    if (c.slack >= 0) out.emplace_back(c.slack, -1.0);
  }

  double raw(const Constraint& c, const Vec& z) const {
    switch (c.kind) {
      case ConKind::kLinear: {
        double v = 0.0;
        for (const auto& [i, a] : c.coefs) v += a * z[i];
        return v;
      }
      case ConKind::kBilinear:
        return z[c.r] - z[c.p] * z[c.q];
      case ConKind::kComplementarity:
        return z[c.r] * (1.0 - z[c.r]);
    }
    return 0.0;
  }

  double residual(const Constraint& c, const Vec& z) const {
    return raw(c, z) - (c.slack >= 0 ? z[c.slack] : c.rhs);
  }

  void build_pattern() {
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < dim_; ++i) trips.emplace_back(i, i, 0.0);
    std::vector<std::pair<int, double>> g;
    const Vec probe = Vec::Ones(dim_);
    for (const auto& c : cons_) {
      gradient(c, probe, g);
      for (std::size_t a = 0; a < g.size(); ++a) {
        for (std::size_t b = a; b < g.size(); ++b) {
          trips.emplace_back(std::max(g[a].first, g[b].first), std::min(g[a].first, g[b].first), 0.0);
        }
      }
    }
    H_.resize(dim_, dim_);
    H_.setFromTriplets(trips.begin(), trips.end());
    H_.makeCompressed();
    auto slot = [&](int i, int j) {
      const int row = std::max(i, j);
      const int col = std::min(i, j);
      const int* begin = H_.innerIndexPtr() + H_.outerIndexPtr()[col];
      const int* end = H_.innerIndexPtr() + H_.outerIndexPtr()[col + 1];
      return static_cast<int>(std::lower_bound(begin, end, row) - H_.innerIndexPtr());
    };
    for (auto& c : cons_) {
      gradient(c, probe, g);
      for (std::size_t a = 0; a < g.size(); ++a) {
        for (std::size_t b = a; b < g.size(); ++b) c.pair_slots.push_back(slot(g[a].first, g[b].first));
      }
      if (c.kind == ConKind::kBilinear) c.curvature_slot = slot(c.p, c.q);
      if (c.kind == ConKind::kComplementarity) c.curvature_slot = slot(c.r, c.r);
    }
    diag_slot_.resize(dim_);
    for (int i = 0; i < dim_; ++i) diag_slot_[i] = slot(i, i);
    nz_row_.resize(H_.nonZeros());
    nz_col_.resize(H_.nonZeros());
    for (int col = 0; col < dim_; ++col) {
      for (int k = H_.outerIndexPtr()[col]; k < H_.outerIndexPtr()[col + 1]; ++k) {
        nz_row_[k] = H_.innerIndexPtr()[k];
        nz_col_[k] = col;
      }
    }
    llt_.analyzePattern(H_);
  }

  /// AL value; fills the gradient and, when `hess` is set, the Hessian values.
  double evaluate(const Vec& z, const Vec& y, double rho, Vec* grad, bool hess) {
    const auto x = z.head(n_);
    double phi = (p_.weights.array() * (x - p_.target).array().square()).sum();
    if (grad) {
      grad->setZero(dim_);
      grad->head(n_) = 2.0 * p_.weights.cwiseProduct(x - p_.target);
    }
    double* hv = H_.valuePtr();
    if (hess) {
      std::fill(hv, hv + H_.nonZeros(), 0.0);
      for (int i = 0; i < n_; ++i) hv[diag_slot_[i]] = 2.0 * p_.weights[i];
    }
    std::vector<std::pair<int, double>> g;
    for (std::size_t k = 0; k < cons_.size(); ++k) {
      const Constraint& c = cons_[k];
      const double r = residual(c, z);
      const double yk = y[static_cast<int>(k)];
      phi += yk * r + 0.5 * rho * r * r;
      if (!grad) continue;
      const double lambda = yk + rho * r;
      gradient(c, z, g);
      for (const auto& [i, a] : g) (*grad)[i] += lambda * a;
      if (!hess) continue;
      std::size_t slot = 0;
      for (std::size_t a = 0; a < g.size(); ++a) {
        for (std::size_t b = a; b < g.size(); ++b) {
          double v = rho * g[a].second * g[b].second;
          if (a != b && g[a].first == g[b].first) v *= 2.0;
          hv[c.pair_slots[slot++]] += v;
        }
      }
      if (c.curvature_slot >= 0) hv[c.curvature_slot] += lambda * c.curvature;
    }
    return phi;
  }

  Vec clip(const Vec& v) const { return v.cwiseMax(lo_vec_).cwiseMin(hi_vec_); }

  /// Trust-region projected Newton on the box: a Cauchy point along the
  /// projected gradient path, then a Newton step on its free variables.
  /// Returns iterations used.
  int inner(Vec& z, const Vec& y, double rho, double omega, double* pg_out) {
    Vec g(dim_);
    std::vector<char> fixed(dim_);
    double phi = evaluate(z, y, rho, &g, true);
    double pg = (z - clip(z - g)).lpNorm<Eigen::Infinity>();
    double radius = std::max(1.0, 10.0 * pg);
    double t = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
    int it = 0;
    for (; it < opts_.max_inner; ++it) {
      if (pg <= omega) break;
      const auto H = H_.selfadjointView<Eigen::Lower>();
      const Vec lo = lo_vec_.cwiseMax((z.array() - radius).matrix());
      const Vec hi = hi_vec_.cwiseMin((z.array() + radius).matrix());
      auto box = [&](const Vec& v) { return Vec(v.cwiseMax(lo).cwiseMin(hi)); };
      auto model = [&](const Vec& s) { return g.dot(s) + 0.5 * s.dot(H * s); };

      // Cauchy step.
      Vec s = box(z - t * g) - z;
      double q = model(s);
      if (q <= 0.01 * g.dot(s)) {
        for (int k = 0; k < 20; ++k) {
          const Vec s2 = box(z - 2.0 * t * g) - z;
          const double q2 = model(s2);
          if (q2 > 0.01 * g.dot(s2) || (s2 - s).lpNorm<Eigen::Infinity>() == 0.0) break;
          t *= 2.0;
          s = s2;
          q = q2;
        }
      } else {
        for (int k = 0; k < 60 && q > 0.01 * g.dot(s); ++k) {
          t *= 0.5;
          s = box(z - t * g) - z;
          q = model(s);
        }
      }

      // Newton steps on the free variables, starting at the Cauchy point;
      // repeated while the projected search runs into new bounds.
      Vec gc;
      for (int sub = 0; sub < 4; ++sub) {
        gc = g + H * s;
        for (int i = 0; i < dim_; ++i) {
          fixed[i] = z[i] + s[i] <= lo[i] || z[i] + s[i] >= hi[i];
          if (fixed[i]) gc[i] = 0.0;
        }
        if (gc.lpNorm<Eigen::Infinity>() == 0.0) break;
        const Vec d = newton_direction(gc, fixed);
        if (d.size() != dim_) break;
        const Vec zc = z + s;
        bool clipped = false;
        bool moved = false;
        double alpha = 1.0;
        for (int k = 0; k < 30 && !moved; ++k, alpha *= 0.5) {
          const Vec raw_step = zc + alpha * d;
          const Vec s2 = box(raw_step) - z;
          const double q2 = model(s2);
          if (q2 <= q + 0.01 * gc.dot(s2 - s)) {
            clipped = (raw_step - z - s2).lpNorm<Eigen::Infinity>() > 0.0;
            s = s2;
            q = q2;
            moved = true;
          }
        }
        if (!moved || !clipped) break;
      }

      const double snorm = s.lpNorm<Eigen::Infinity>();
      if (snorm == 0.0 || q >= 0.0) break;
      const Vec z_new = z + s;
      const double phi_new = evaluate(z_new, y, rho, nullptr, false);
      const double ratio = (phi_new - phi) / q;
      if (ratio < 0.25) {
        radius = 0.25 * snorm;
      } else if (ratio > 0.75 && snorm >= 0.99 * radius) {
        radius *= 2.0;
      }
      if (ratio > 1e-4) {
        z = z_new;
        phi = evaluate(z, y, rho, &g, true);
        pg = (z - clip(z - g)).lpNorm<Eigen::Infinity>();
      }
      if (radius < 1e-14) break;
    }
    if (pg_out) *pg_out = pg;
    return it;
  }

  /// Modified-Cholesky Newton step on the free variables; the Hessian
  /// values must be current. Returns an empty vector on failure.
  Vec newton_direction(const Vec& g, const std::vector<char>& active) {
    SpMat K = H_;
    double* kv = K.valuePtr();
    double max_diag = 0.0;
    for (int k = 0; k < K.nonZeros(); ++k) {
      const int r = nz_row_[k];
      const int c = nz_col_[k];
      if (active[r] || active[c]) {
        kv[k] = r == c ? 1.0 : 0.0;
      } else if (r == c) {
        max_diag = std::max(max_diag, std::abs(kv[k]));
      }
    }
    const Vec rhs = -g;
    double tau = 1e-10 * std::max(1.0, max_diag);
    for (int attempt = 0; attempt < 25; ++attempt) {
      SpMat Kt = K;
      for (int i = 0; i < dim_; ++i) {
        if (!active[i]) Kt.valuePtr()[diag_slot_[i]] += tau;
      }
      llt_.factorize(Kt);
      if (llt_.info() == Eigen::Success) {
        Vec d = llt_.solve(rhs);
        double dec = 0.0;
        bool any_free = false;
        for (int i = 0; i < dim_; ++i) {
          if (active[i]) continue;
          dec += g[i] * d[i];
          any_free = any_free || g[i] != 0.0;
        }
        if (d.allFinite() && (dec < 0.0 || !any_free)) return d;
      }
      tau *= 10.0;
    }
    return {};
  }

  const MpccProblem& p_;
  NlpOptions opts_;
  int n_;
  int dim_ = 0;
  std::vector<double> lower_, upper_;
  Vec lo_vec_, hi_vec_;
  std::vector<Constraint> cons_;
  SpMat H_;
  std::vector<int> diag_slot_;
  std::vector<int> nz_row_, nz_col_;
  Eigen::SimplicialLLT<SpMat, Eigen::Lower> llt_;
};

}  // namespace

const char* to_string(NlpStatus s) {
  switch (s) {
    case NlpStatus::kFeasibleOptimal: return "feasible_optimal";
    case NlpStatus::kInfeasibleStall: return "infeasible_stall";
    case NlpStatus::kMaxIter: return "max_iter";
  }
  return "?";
}

double MpccProblem::objective(const Eigen::VectorXd& x) const {
  return (weights.array() * (x - target).array().square()).sum();
}

double MpccProblem::max_violation(const Eigen::VectorXd& x) const {
  double v = 0.0;
  for (int i = 0; i < dim(); ++i) v = std::max({v, lower[i] - x[i], x[i] - upper[i]});
  const Vec ax = linear.A * x;
  for (int r = 0; r < linear.rows(); ++r) {
    v = std::max({v, linear.lower[r] - ax[r], ax[r] - linear.upper[r]});
  }
  for (const auto& t : bilinear) v = std::max(v, std::abs(x[t.r] - x[t.p] * x[t.q]));
  for (int j : complementarity) v = std::max(v, x[j] * (1.0 - x[j]) - epsilon);
  return v;
}

MpccProblem make_mpcc(const ProblemFormulation& f, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("complementarity relaxation must be positive");
  MpccProblem p;
  p.weights = f.weights;
  p.target = f.target;
  p.lower = f.lower;
  p.upper = f.upper;
  p.linear = f.linear;
  p.bilinear = f.bilinear;
  p.complementarity = f.binaries;
  p.epsilon = epsilon;
  return p;
}

NlpResult solve_nlp(const MpccProblem& p, const Eigen::VectorXd& x0, const NlpOptions& opts) {
  if (x0.size() != p.dim()) throw std::invalid_argument("initial point dimension mismatch");
  AugmentedLagrangian al(p, opts);
  return al.solve(x0);
}

SolveReport solve_mpcc(const ProblemFormulation& f, const DecisionVector& x0,
                       const MpccOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  SolveReport rep;
  rep.trials = 1;
  if (x0.size() != f.dim()) throw std::invalid_argument("initial point dimension mismatch");
  MpccProblem p = make_mpcc(f, opts.epsilon);
  NlpResult res = solve_nlp(p, x0.values, opts.nlp);
  rep.iterations = res.inner_iterations;
  auto finish = [&](SolveStatus status, const Vec& x) {
    rep.status = status;
    rep.x = DecisionVector(x);
    rep.objective = objective_value(f, rep.x);
    rep.max_violation = evaluate_constraints(f, rep.x).max();
    rep.success = status == SolveStatus::kSuccess;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  };
  if (res.status != NlpStatus::kFeasibleOptimal) {
    rep.detail = to_string(res.status);
    return finish(res.status == NlpStatus::kInfeasibleStall ? SolveStatus::kInfeasibleStall
                                                            : SolveStatus::kMaxIter,
                  res.x);
  }
  Vec x = res.x;
  for (int j : f.binaries) x[j] = x[j] >= 0.5 ? 1.0 : 0.0;
  if (evaluate_constraints(f, DecisionVector(x)).feasible(opts.verify_tol)) {
    return finish(SolveStatus::kSuccess, x);
  }
  MpccProblem fixed = p;
  fixed.complementarity.clear();
  for (int j : f.binaries) fixed.lower[j] = fixed.upper[j] = x[j];
  NlpResult again = solve_nlp(fixed, x, opts.nlp);
  rep.iterations += again.inner_iterations;
  if (again.status == NlpStatus::kFeasibleOptimal &&
      evaluate_constraints(f, DecisionVector(again.x)).feasible(opts.verify_tol)) {
    return finish(SolveStatus::kSuccess, again.x);
  }
  rep.detail = "rounded solution failed verification";
  return finish(SolveStatus::kVerificationFailed, again.x);
}

DecisionVector manual_guess(const ProblemFormulation& f, const Instance& inst) {
  const ProblemParams& params = inst.params;
  const int m = static_cast<int>(params.stored.size());
  Layout witness = extract_layout(f, inst.witness);
  Layout guess;
  int slot = 0;
  for (int k = 0; k < m; ++k) {
    guess.poses.push_back(params.stored[k].pose);
    guess.modes.push_back(witness.modes[k]);
    if (params.stored[k].pose.x < 0.0) slot = k + 1;
  }
  guess.poses.push_back({0.0, 0.5 * params.new_book.height, 0.0});
  guess.modes.push_back(Mode::kUpright);
  guess.slot = slot;
  return assemble(f, guess);
}

DecisionVector manual_guess(const Instance& inst) {
  return manual_guess(build_default_problem(inst.params), inst);
}

}  // namespace bookshelf

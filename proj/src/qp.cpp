#include "bookshelf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCholesky>

namespace bookshelf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqScale = 1e3;
constexpr double kScaleMin = 1e-4;
constexpr double kScaleMax = 1e4;

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

Vec clip(const Vec& v, const Vec& lo, const Vec& hi) { return v.cwiseMax(lo).cwiseMin(hi); }

Vec col_inf_norms(const SpMat& M) {
  Vec out = Vec::Zero(M.cols());
  for (int j = 0; j < M.outerSize(); ++j) {
    for (SpMat::InnerIterator it(M, j); it; ++it) {
      out[j] = std::max(out[j], std::abs(it.value()));
    }
  }
  return out;
}

Vec row_inf_norms(const SpMat& M) {
  Vec out = Vec::Zero(M.rows());
  for (int j = 0; j < M.outerSize(); ++j) {
    for (SpMat::InnerIterator it(M, j); it; ++it) {
      out[it.row()] = std::max(out[it.row()], std::abs(it.value()));
    }
  }
  return out;
}

Vec bounded_inverse_sqrt(const Vec& norms) {
  Vec out(norms.size());
  for (int i = 0; i < norms.size(); ++i) {
    const double v = norms[i] < 1e-8 ? 1.0 : norms[i];
    out[i] = std::clamp(1.0 / std::sqrt(v), kScaleMin, kScaleMax);
  }
  return out;
}

/// Ruiz-equilibrated copy of the problem: Ps = c D P D, qs = c D q,
/// As = E A D, ls = E l, us = E u.
struct Scaled {
  SpMat P, A;
  Vec q, l, u;
  Vec D, E;
  double c = 1.0;
};

Scaled equilibrate(const Qp& qp, int iterations) {
  Scaled s;
  s.P = qp.P;
  s.A = qp.A;
  s.q = qp.q;
  s.D = Vec::Ones(qp.n());
  s.E = Vec::Ones(qp.m());
  for (int it = 0; it < iterations; ++it) {
    Vec col = col_inf_norms(s.P).cwiseMax(col_inf_norms(s.A));
    const Vec d = bounded_inverse_sqrt(col);
    const Vec e = bounded_inverse_sqrt(row_inf_norms(s.A));
    s.P = d.asDiagonal() * s.P * d.asDiagonal();
    s.A = e.asDiagonal() * s.A * d.asDiagonal();
    s.q = d.cwiseProduct(s.q);
    s.D = s.D.cwiseProduct(d);
    s.E = s.E.cwiseProduct(e);
    // Cost scaling.
    const Vec pc = col_inf_norms(s.P);
    const double mean_p = pc.size() ? pc.mean() : 0.0;
    double scale = std::max(mean_p, inf_norm(s.q));
    scale = scale < 1e-8 ? 1.0 : scale;
    const double gamma = std::clamp(1.0 / scale, kScaleMin, kScaleMax);
    s.P *= gamma;
    s.q *= gamma;
    s.c *= gamma;
  }
  s.l = qp.l;
  s.u = qp.u;
  for (int i = 0; i < qp.m(); ++i) {
    if (std::isfinite(s.l[i])) s.l[i] *= s.E[i];
    if (std::isfinite(s.u[i])) s.u[i] *= s.E[i];
  }
  return s;
}

SpMat identity(int n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

struct Residuals {
  double prim = 0.0, dual = 0.0;
  double prim_scale = 0.0, dual_scale = 0.0;
};

/// Unscaled residuals computed from the scaled iterates.
Residuals residuals(const Scaled& s, const Vec& x, const Vec& z, const Vec& y) {
  Residuals r;
  const Vec Ax = s.A * x;
  const Vec Px = s.P * x;
  const Vec Aty = s.A.transpose() * y;
  const Vec Einv = s.E.cwiseInverse();
  const Vec Dinv = s.D.cwiseInverse();
  r.prim = inf_norm(Einv.cwiseProduct(Ax - z));
  r.prim_scale = std::max(inf_norm(Einv.cwiseProduct(Ax)), inf_norm(Einv.cwiseProduct(z)));
  r.dual = inf_norm(Dinv.cwiseProduct(Px + s.q + Aty)) / s.c;
  r.dual_scale = std::max({inf_norm(Dinv.cwiseProduct(Px)), inf_norm(Dinv.cwiseProduct(Aty)),
                           inf_norm(Dinv.cwiseProduct(s.q))}) /
                 s.c;
  return r;
}

bool primal_infeasible(const Scaled& s, const Vec& dy, double eps) {
  // Unscaled direction E dy; A^T (E dy) = D^{-1} As^T dy.
  Vec dyu = s.E.cwiseProduct(dy);
  const double norm = inf_norm(dyu);
  if (norm < 1e-12) return false;
  double support = 0.0;
  for (int i = 0; i < dyu.size(); ++i) {
    const double hi = s.u[i] / s.E[i];
    const double lo = s.l[i] / s.E[i];
    if (dyu[i] > 0.0) {
      if (!std::isfinite(hi)) {
        if (dyu[i] > eps * norm) return false;
        dyu[i] = 0.0;
        continue;
      }
      support += hi * dyu[i];
    } else if (dyu[i] < 0.0) {
      if (!std::isfinite(lo)) {
        if (-dyu[i] > eps * norm) return false;
        dyu[i] = 0.0;
        continue;
      }
      support += lo * dyu[i];
    }
  }
  const Vec Aty = s.D.cwiseInverse().cwiseProduct(s.A.transpose() * s.E.cwiseInverse().cwiseProduct(dyu));
  return inf_norm(Aty) <= eps * norm && support < -eps * norm;
}

struct Polished {
  Vec x, y;
  double prim = kInf, dual = kInf;
  bool ok = false;
};

/// Solve the equality-constrained KKT system on the active set guessed from
/// the ADMM iterate, with regularization and iterative refinement.
Polished polish(const Qp& qp, const Vec& z, const Vec& y, double tol) {
  const int n = qp.n();
  const int m = qp.m();
  std::vector<int> active;
  std::vector<double> target;
  std::vector<int> side;  // -1 lower, +1 upper, 0 equality
  for (int i = 0; i < m; ++i) {
    if (qp.l[i] == qp.u[i]) {
      active.push_back(i);
      target.push_back(qp.l[i]);
      side.push_back(0);
    } else if (std::isfinite(qp.l[i]) && z[i] - qp.l[i] < -y[i]) {
      active.push_back(i);
      target.push_back(qp.l[i]);
      side.push_back(-1);
    } else if (std::isfinite(qp.u[i]) && qp.u[i] - z[i] < y[i]) {
      active.push_back(i);
      target.push_back(qp.u[i]);
      side.push_back(1);
    }
  }
  const int k = static_cast<int>(active.size());
  // Build A_act (k x n) in triplets.
  const SpMat At = qp.A.transpose();  // column i of At = row i of A
  std::vector<Eigen::Triplet<double>> trips;
  const double delta = 1e-9;
  for (int j = 0; j < qp.P.outerSize(); ++j) {
    for (SpMat::InnerIterator it(qp.P, j); it; ++it) {
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, delta);
  std::vector<Eigen::Triplet<double>> act_trips;
  for (int r = 0; r < k; ++r) {
    for (SpMat::InnerIterator it(At, active[r]); it; ++it) {
      trips.emplace_back(n + r, static_cast<int>(it.row()), it.value());
      trips.emplace_back(static_cast<int>(it.row()), n + r, it.value());
      act_trips.emplace_back(r, static_cast<int>(it.row()), it.value());
    }
    trips.emplace_back(n + r, n + r, -delta);
  }
  SpMat K(n + k, n + k);
  K.setFromTriplets(trips.begin(), trips.end());
  SpMat Aact(k, n);
  Aact.setFromTriplets(act_trips.begin(), act_trips.end());

  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(K);
  Polished out;
  if (ldlt.info() != Eigen::Success) return out;

  Vec rhs(n + k);
  rhs.head(n) = -qp.q;
  for (int r = 0; r < k; ++r) rhs[n + r] = target[r];
  Vec sol = ldlt.solve(rhs);
  for (int it = 0; it < 5; ++it) {
    const Vec xs = sol.head(n);
    const Vec ys = sol.tail(k);
    Vec res(n + k);
    res.head(n) = -qp.q - qp.P * xs - Aact.transpose() * ys;
    res.tail(k) = rhs.tail(k) - Aact * xs;
    if (inf_norm(res) < 1e-13) break;
    sol += ldlt.solve(res);
  }
  out.x = sol.head(n);
  out.y = Vec::Zero(m);
  for (int r = 0; r < k; ++r) out.y[active[r]] = sol[n + r];

  for (int r = 0; r < k; ++r) {
    const double yr = out.y[active[r]];
    if ((side[r] < 0 && yr > tol) || (side[r] > 0 && yr < -tol)) return out;
  }
  const Vec Ax = qp.A * out.x;
  out.prim = inf_norm(Ax - clip(Ax, qp.l, qp.u));
  out.dual = inf_norm(qp.P * out.x + qp.q + qp.A.transpose() * out.y);
  out.ok = true;
  return out;
}

}  // namespace

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kPrimalInfeasible: return "primal_infeasible";
    case QpStatus::kMaxIter: return "max_iter";
  }
  return "?";
}

double Qp::objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(P * x) + q.dot(x); }

void Qp::validate() const {
  if (P.rows() != n() || P.cols() != n()) throw std::invalid_argument("P has wrong shape");
  if (A.cols() != n() || A.rows() != m() || u.size() != m()) {
    throw std::invalid_argument("constraint dimensions are inconsistent");
  }
  const SpMat Pt = P.transpose();
  if (n() > 0 && (SpMat(P - Pt)).coeffs().cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("P is not symmetric");
  }
}

QpSolution solve_qp(const Qp& qp, const std::optional<QpWarmStart>& warm,
                    const QpSettings& settings) {
  qp.validate();
  const int n = qp.n();
  const int m = qp.m();
  QpSolution sol;
  for (int i = 0; i < m; ++i) {
    if (qp.l[i] > qp.u[i]) {
      sol.status = QpStatus::kPrimalInfeasible;
      sol.x = Vec::Zero(n);
      sol.duals = Vec::Zero(m);
      return sol;
    }
  }

  const Scaled s = equilibrate(qp, settings.scaling_iterations);

  // Iterates in the scaled space.
  Vec x = Vec::Zero(n);
  Vec y = Vec::Zero(m);
  if (warm) {
    if (warm->x.size() == n) x = s.D.cwiseInverse().cwiseProduct(warm->x);
    if (warm->duals.size() == m) y = s.c * s.E.cwiseInverse().cwiseProduct(warm->duals);
  }
  Vec z = clip(s.A * x, s.l, s.u);

  double rho = settings.rho;
  Vec rho_vec(m);
  auto set_rho = [&](double r) {
    rho = std::clamp(r, kRhoMin, kRhoMax);
    for (int i = 0; i < m; ++i) {
      const bool lo_inf = !std::isfinite(s.l[i]);
      const bool hi_inf = !std::isfinite(s.u[i]);
      if (lo_inf && hi_inf) {
        rho_vec[i] = kRhoMin;
      } else if (s.l[i] == s.u[i]) {
        rho_vec[i] = kRhoEqScale * rho;
      } else {
        rho_vec[i] = rho;
      }
    }
  };
  set_rho(rho);

  const SpMat At = s.A.transpose();
  const SpMat I = identity(n);
  Eigen::SimplicialLLT<SpMat> llt;
  bool pattern_done = false;
  auto factor = [&]() {
    SpMat K = s.P + settings.sigma * I + At * rho_vec.asDiagonal() * s.A;
    if (!pattern_done) {
      llt.analyzePattern(K);
      pattern_done = true;
    }
    llt.factorize(K);
  };
  factor();

  bool need_absolute = false;
  Vec y_prev = y;
  const double alpha = settings.alpha;
  const double sigma = settings.sigma;
  int iter = 0;
  for (iter = 1; iter <= settings.max_iter; ++iter) {
    y_prev = y;
    const Vec rhs = sigma * x - s.q + At * (rho_vec.cwiseProduct(z) - y);
    const Vec xt = llt.solve(rhs);
    const Vec zt = s.A * xt;
    const Vec x_new = alpha * xt + (1.0 - alpha) * x;
    const Vec z_relaxed = alpha * zt + (1.0 - alpha) * z;
    const Vec z_new = clip(z_relaxed + y.cwiseQuotient(rho_vec), s.l, s.u);
    y = y + rho_vec.cwiseProduct(z_relaxed - z_new);
    x = x_new;
    z = z_new;

    const bool check = iter <= 50 || iter % 10 == 0 || iter == settings.max_iter;
    if (!check) continue;

    const Residuals r = residuals(s, x, z, y);
    const double eps_p = settings.eps_abs + (need_absolute ? 0.0 : settings.eps_rel * r.prim_scale);
    const double eps_d = settings.eps_abs + (need_absolute ? 0.0 : settings.eps_rel * r.dual_scale);
    if (r.prim <= eps_p && r.dual <= eps_d) {
      const Vec xu = s.D.cwiseProduct(x);
      const Vec zu = s.E.cwiseInverse().cwiseProduct(z);
      const Vec yu = s.E.cwiseProduct(y) / s.c;
      if (settings.polish) {
        const Polished p = polish(qp, zu, yu, 1e-7);
        if (p.ok && p.prim <= settings.eps_abs && p.dual <= settings.eps_abs) {
          sol.x = p.x;
          sol.duals = p.y;
          sol.primal_residual = p.prim;
          sol.dual_residual = p.dual;
          sol.polished = true;
          sol.status = QpStatus::kOptimal;
          sol.iterations = iter;
          sol.objective = qp.objective(sol.x);
          return sol;
        }
      }
      if (r.prim <= settings.eps_abs && r.dual <= settings.eps_abs) {
        sol.x = xu;
        sol.duals = yu;
        sol.primal_residual = r.prim;
        sol.dual_residual = r.dual;
        sol.status = QpStatus::kOptimal;
        sol.iterations = iter;
        sol.objective = qp.objective(sol.x);
        return sol;
      }
      need_absolute = true;
    }

    if (primal_infeasible(s, y - y_prev, settings.eps_prim_inf)) {
      sol.status = QpStatus::kPrimalInfeasible;
      sol.x = s.D.cwiseProduct(x);
      sol.duals = s.E.cwiseProduct(y) / s.c;
      sol.iterations = iter;
      sol.primal_residual = r.prim;
      sol.dual_residual = r.dual;
      sol.objective = qp.objective(sol.x);
      return sol;
    }

    if (settings.adaptive_rho && iter % settings.adaptive_rho_interval == 0) {
      const double pn = r.prim / (r.prim_scale + 1e-10);
      const double dn = r.dual / (r.dual_scale + 1e-10);
      const double ratio = std::sqrt(pn / (dn + 1e-12));
      if (ratio > 5.0 || ratio < 0.2) {
        set_rho(rho * ratio);
        factor();
      }
    }
  }

  sol.status = QpStatus::kMaxIter;
  sol.x = s.D.cwiseProduct(x);
  sol.duals = s.E.cwiseProduct(y) / s.c;
  sol.iterations = settings.max_iter;
  const Residuals r = residuals(s, x, z, y);
  sol.primal_residual = r.prim;
  sol.dual_residual = r.dual;
  sol.objective = qp.objective(sol.x);
  return sol;
}

}  // namespace bookshelf

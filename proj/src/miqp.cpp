#include "bookshelf/miqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace bookshelf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Accumulates rows l <= a^T x <= u.
class Rows {
 public:
  int add(double lo, double hi) {
    lower_.push_back(lo);
    upper_.push_back(hi);
    return static_cast<int>(lower_.size()) - 1;
  }
  void coef(int row, int col, double v) {
    if (v != 0.0) trips_.emplace_back(row, col, v);
  }
  int count() const { return static_cast<int>(lower_.size()); }

  void finish(int cols, Qp& qp) const {
    qp.A.resize(count(), cols);
    qp.A.setFromTriplets(trips_.begin(), trips_.end());
    qp.A.makeCompressed();
    qp.l = Eigen::Map<const Vec>(lower_.data(), count());
    qp.u = Eigen::Map<const Vec>(upper_.data(), count());
  }

 private:
  Triplets trips_;
  std::vector<double> lower_, upper_;
};

void copy_linear_rows(const ProblemFormulation& f, Rows& rows) {
  for (int r = 0; r < f.linear.rows(); ++r) {
    const int row = rows.add(f.linear.lower[r], f.linear.upper[r]);
    for (SparseRowMatrix::InnerIterator it(f.linear.A, r); it; ++it) {
      rows.coef(row, static_cast<int>(it.col()), it.value());
    }
  }
}

void check_range(const ProblemFormulation& f, int var, const AxisGrid& g) {
  if (f.lower[var] < g.lower - 1e-12 || f.upper[var] > g.upper + 1e-12) {
    throw std::invalid_argument("grid range does not contain the bounds of variable " +
                                std::to_string(var));
  }
}

}  // namespace

int envelope_binary_count(int np, int nq) {
  const long long cells = static_cast<long long>(np + 1) * (nq + 1);
  int bits = 0;
  while ((1LL << bits) < cells) ++bits;
  return bits;
}

unsigned cell_code(int i, int j, int nq) {
  const int jj = i % 2 == 0 ? j : nq - 1 - j;
  const unsigned idx = static_cast<unsigned>(i * nq + jj);
  return idx ^ (idx >> 1);
}

void quadratic_objective(const Vec& weights, const Vec& target, int total_dim, SpMat& P, Vec& q,
                         double& constant) {
  Triplets trips;
  q = Vec::Zero(total_dim);
  constant = 0.0;
  for (int i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    trips.emplace_back(i, i, 2.0 * weights[i]);
    q[i] = -2.0 * weights[i] * target[i];
    constant += weights[i] * target[i] * target[i];
  }
  P.resize(total_dim, total_dim);
  P.setFromTriplets(trips.begin(), trips.end());
}

Eigen::VectorXd MiqpProblem::gap_allowance() const {
  Vec out = Vec::Zero(static_cast<int>(blocks.size()));
  for (const auto& b : blocks) out[b.term] = b.gap();
  return out;
}

MiqpProblem reformulate_sos2(const ProblemFormulation& f, const GridSpec& grids) {
  MiqpProblem m;
  m.formulation = f;
  m.num_original = f.dim();
  int cursor = f.dim();
  auto take = [&cursor](int count) {
    Range r{cursor, count};
    cursor += count;
    return r;
  };
  for (std::size_t s = 0; s < f.bilinear.size(); ++s) {
    const BilinearTerm& t = f.bilinear[s];
    if (!f.grid_class[t.p] || !f.grid_class[t.q]) {
      throw std::invalid_argument("bilinear factor without a grid class");
    }
    if (!grids.covers(*f.grid_class[t.p]) || !grids.covers(*f.grid_class[t.q])) {
      throw std::invalid_argument("grid spec misses a bilinear variable class");
    }
    EnvelopeBlock b;
    b.term = static_cast<int>(s);
    b.r = t.r;
    b.p = t.p;
    b.q = t.q;
    b.grid_p = grids.at(*f.grid_class[t.p]);
    b.grid_q = grids.at(*f.grid_class[t.q]);
    check_range(f, t.p, b.grid_p);
    check_range(f, t.q, b.grid_q);
    b.alpha = take(b.np() + 1);
    b.beta = take(b.nq() + 1);
    b.gamma = take((b.np() + 1) * (b.nq() + 1));
    b.cell = take(b.np() * b.nq());
    b.delta = take(envelope_binary_count(b.np(), b.nq()));
    m.blocks.push_back(b);
  }
  const int n = cursor;

  Rows rows;
  copy_linear_rows(f, rows);
  for (const EnvelopeBlock& b : m.blocks) {
    const auto xp = b.grid_p.breakpoints();
    const auto xq = b.grid_q.breakpoints();
    int row = rows.add(0.0, 0.0);  // x_p = sum alpha x^i
    rows.coef(row, b.p, 1.0);
    for (int i = 0; i <= b.np(); ++i) rows.coef(row, b.alpha.start + i, -xp[i]);
    row = rows.add(1.0, 1.0);
    for (int i = 0; i <= b.np(); ++i) rows.coef(row, b.alpha.start + i, 1.0);
    row = rows.add(0.0, 0.0);
    rows.coef(row, b.q, 1.0);
    for (int j = 0; j <= b.nq(); ++j) rows.coef(row, b.beta.start + j, -xq[j]);
    row = rows.add(1.0, 1.0);
    for (int j = 0; j <= b.nq(); ++j) rows.coef(row, b.beta.start + j, 1.0);
    row = rows.add(0.0, 0.0);  // x_r = sum gamma x^i y^j
    rows.coef(row, b.r, 1.0);
    for (int i = 0; i <= b.np(); ++i) {
      for (int j = 0; j <= b.nq(); ++j) rows.coef(row, b.gamma_index(i, j), -xp[i] * xq[j]);
    }
    for (int i = 0; i <= b.np(); ++i) {
      row = rows.add(0.0, 0.0);
      rows.coef(row, b.alpha.start + i, -1.0);
      for (int j = 0; j <= b.nq(); ++j) rows.coef(row, b.gamma_index(i, j), 1.0);
    }
    for (int j = 0; j <= b.nq(); ++j) {
      row = rows.add(0.0, 0.0);
      rows.coef(row, b.beta.start + j, -1.0);
      for (int i = 0; i <= b.np(); ++i) rows.coef(row, b.gamma_index(i, j), 1.0);
    }
    row = rows.add(1.0, 1.0);
    for (int c = 0; c < b.cell.size; ++c) rows.coef(row, b.cell.start + c, 1.0);
    // gamma_ij <= sum of the weights of the cells touching (i, j).
    for (int i = 0; i <= b.np(); ++i) {
      for (int j = 0; j <= b.nq(); ++j) {
        row = rows.add(-kInf, 0.0);
        rows.coef(row, b.gamma_index(i, j), 1.0);
        for (int ci = std::max(0, i - 1); ci <= std::min(i, b.np() - 1); ++ci) {
          for (int cj = std::max(0, j - 1); cj <= std::min(j, b.nq() - 1); ++cj) {
            rows.coef(row, b.cell.start + ci * b.nq() + cj, -1.0);
          }
        }
      }
    }
    // sum_c mu_c code_c = delta: only a single cell can carry weight.
    for (int bit = 0; bit < b.delta.size; ++bit) {
      row = rows.add(0.0, 0.0);
      rows.coef(row, b.delta.start + bit, -1.0);
      for (int ci = 0; ci < b.np(); ++ci) {
        for (int cj = 0; cj < b.nq(); ++cj) {
          if ((cell_code(ci, cj, b.nq()) >> bit) & 1u) {
            rows.coef(row, b.cell.start + ci * b.nq() + cj, 1.0);
          }
        }
      }
    }
  }
  m.bound_row_start = rows.count();
  for (int i = 0; i < n; ++i) {
    const double lo = i < f.dim() ? f.lower[i] : 0.0;
    const double hi = i < f.dim() ? f.upper[i] : 1.0;
    const int row = rows.add(lo, hi);
    rows.coef(row, i, 1.0);
  }
  rows.finish(n, m.base);
  quadratic_objective(f.weights, f.target, n, m.base.P, m.base.q, m.objective_constant);

  m.binaries = f.binaries;
  for (const auto& b : m.blocks) {
    for (int k = 0; k < b.delta.size; ++k) m.binaries.push_back(b.delta.start + k);
  }
  std::sort(m.binaries.begin(), m.binaries.end());
  return m;
}

// ---------------------------------------------------------------------------
// Branch and bound

namespace {

struct Node {
  double bound = -kInf;
  long id = 0;
  Vec lo, hi;  // per binary
  Vec warm_x, warm_y;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

}  // namespace

MiqpResult branch_and_bound(const Qp& qp_in, const std::vector<int>& binaries,
                            double objective_constant, const MiqpOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  qp_in.validate();
  const int nb = static_cast<int>(binaries.size());

  // Locate (or append) an identity row for each binary to carry node bounds.
  Qp qp = qp_in;
  std::vector<int> bound_row(nb, -1);
  {
    const SpMat At = qp.A.transpose();
    std::vector<int> row_nnz(qp.m(), 0);
    for (int k = 0; k < At.outerSize(); ++k) {
      for (SpMat::InnerIterator it(At, k); it; ++it) ++row_nnz[k];
    }
    std::vector<int> single(qp.n(), -1);
    for (int k = 0; k < At.outerSize(); ++k) {
      if (row_nnz[k] != 1) continue;
      SpMat::InnerIterator it(At, k);
      if (it.value() == 1.0 && single[it.row()] < 0) single[it.row()] = k;
    }
    Triplets extra;
    std::vector<double> el, eu;
    for (int b = 0; b < nb; ++b) {
      const int var = binaries[b];
      if (single[var] >= 0) {
        bound_row[b] = single[var];
      } else {
        bound_row[b] = qp.m() + static_cast<int>(el.size());
        extra.emplace_back(static_cast<int>(el.size()), var, 1.0);
        el.push_back(0.0);
        eu.push_back(1.0);
      }
    }
    if (!el.empty()) {
      const int m0 = qp.m();
      const int me = static_cast<int>(el.size());
      Triplets all;
      for (int k = 0; k < qp.A.outerSize(); ++k) {
        for (SpMat::InnerIterator it(qp.A, k); it; ++it) {
          all.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        }
      }
      for (const auto& t : extra) all.emplace_back(m0 + t.row(), t.col(), t.value());
      qp.A.resize(m0 + me, qp.n());
      qp.A.setFromTriplets(all.begin(), all.end());
      qp.l.conservativeResize(m0 + me);
      qp.u.conservativeResize(m0 + me);
      for (int k = 0; k < me; ++k) {
        qp.l[m0 + k] = el[k];
        qp.u[m0 + k] = eu[k];
      }
    }
  }
  Vec root_lo(nb), root_hi(nb);
  for (int b = 0; b < nb; ++b) {
    root_lo[b] = std::max(0.0, std::ceil(qp.l[bound_row[b]] - opts.integrality_tol));
    root_hi[b] = std::min(1.0, std::floor(qp.u[bound_row[b]] + opts.integrality_tol));
  }

  MiqpResult res;
  double incumbent = kInf;
  auto solve_with = [&](const Vec& lo, const Vec& hi, const Vec& wx, const Vec& wy) {
    Qp node = qp;
    for (int b = 0; b < nb; ++b) {
      node.l[bound_row[b]] = lo[b];
      node.u[bound_row[b]] = hi[b];
    }
    std::optional<QpWarmStart> warm;
    if (wx.size() == qp.n()) warm = QpWarmStart{wx, wy};
    QpSolution sol = solve_qp(node, warm, opts.qp);
    res.qp_iterations += sol.iterations;
    return sol;
  };
  auto try_incumbent = [&](const Vec& x, const Vec& y) {
    Vec lo(nb), hi(nb);
    for (int b = 0; b < nb; ++b) lo[b] = hi[b] = std::round(std::clamp(x[binaries[b]], 0.0, 1.0));
    for (int b = 0; b < nb; ++b) {
      if (lo[b] < root_lo[b] || hi[b] > root_hi[b]) return;
    }
    QpSolution sol = solve_with(lo, hi, x, y);
    if (sol.status != QpStatus::kOptimal) return;
    const double obj = sol.objective + objective_constant;
    if (obj < incumbent) {
      incumbent = obj;
      res.x = sol.x;
      for (int b = 0; b < nb; ++b) res.x[binaries[b]] = lo[b];
      res.objective = obj;
    }
  };

  if (opts.initial_binaries && opts.initial_binaries->size() == nb) {
    Vec guess = Vec::Zero(qp.n());
    for (int b = 0; b < nb; ++b) guess[binaries[b]] = (*opts.initial_binaries)[b];
    try_incumbent(guess, Vec());
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push(Node{-kInf, next_id++, root_lo, root_hi, Vec(), Vec()});
  bool exhausted = true;
  SolveStatus limit_status = SolveStatus::kSuccess;
  auto tolerance = [&]() { return opts.gap * std::max(1.0, std::abs(incumbent)); };

  while (!open.empty()) {
    if (std::isfinite(incumbent) && open.top().bound >= incumbent - tolerance()) break;
    if (res.nodes >= opts.node_limit) {
      exhausted = false;
      limit_status = SolveStatus::kNodeLimit;
      break;
    }
    if (opts.time_limit > 0.0 && elapsed() > opts.time_limit) {
      exhausted = false;
      limit_status = SolveStatus::kTimeLimit;
      break;
    }
    Node node = open.top();
    open.pop();
    ++res.nodes;
    bool empty_box = false;
    for (int b = 0; b < nb; ++b) empty_box |= node.lo[b] > node.hi[b];
    if (empty_box) continue;
    QpSolution sol = solve_with(node.lo, node.hi, node.warm_x, node.warm_y);
    if (sol.status != QpStatus::kOptimal) continue;
    const double bound = sol.objective + objective_constant;
    if (std::isfinite(incumbent) && bound >= incumbent - tolerance()) continue;

    int branch = -1;
    double best_frac = opts.integrality_tol;
    for (int b = 0; b < nb; ++b) {
      const double v = sol.x[binaries[b]];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > best_frac + 1e-12) {
        best_frac = frac;
        branch = b;
      }
    }
    if (branch < 0) {
      try_incumbent(sol.x, sol.duals);
      continue;
    }
    for (int side = 0; side < 2; ++side) {
      Node child{bound, next_id++, node.lo, node.hi, sol.x, sol.duals};
      if (side == 0) {
        child.hi[branch] = 0.0;
      } else {
        child.lo[branch] = 1.0;
      }
      open.push(std::move(child));
    }
  }

  res.bound = open.empty() ? incumbent : std::min(incumbent, open.top().bound);
  res.seconds = elapsed();
  if (!exhausted) {
    res.status = limit_status;
  } else {
    res.status = res.has_incumbent() ? SolveStatus::kSuccess : SolveStatus::kInfeasible;
  }
  return res;
}

MiqpResult solve_miqp(const MiqpProblem& m, const MiqpOptions& opts) {
  return branch_and_bound(m.base, m.binaries, m.objective_constant, opts);
}

// ---------------------------------------------------------------------------
// Interval fixing

Qp fix_and_reduce(const MiqpProblem& m, const DecisionVector& candidate) {
  const ProblemFormulation& f = m.formulation;
  if (candidate.size() < f.dim()) throw std::invalid_argument("candidate dimension mismatch");
  const int n0 = f.dim();
  const int n = n0 + 8 * static_cast<int>(m.blocks.size());
  Rows rows;
  copy_linear_rows(f, rows);
  for (std::size_t s = 0; s < m.blocks.size(); ++s) {
    const EnvelopeBlock& b = m.blocks[s];
    const int i = b.grid_p.locate(candidate[b.p]);
    const int j = b.grid_q.locate(candidate[b.q]);
    const double p0 = b.grid_p.breakpoint(i), p1 = b.grid_p.breakpoint(i + 1);
    const double q0 = b.grid_q.breakpoint(j), q1 = b.grid_q.breakpoint(j + 1);
    const int base = n0 + 8 * static_cast<int>(s);
    const int a0 = base, a1 = base + 1, b0 = base + 2, b1 = base + 3;
    const int g00 = base + 4, g01 = base + 5, g10 = base + 6, g11 = base + 7;
    int row = rows.add(0.0, 0.0);
    rows.coef(row, b.p, 1.0);
    rows.coef(row, a0, -p0);
    rows.coef(row, a1, -p1);
    row = rows.add(1.0, 1.0);
    rows.coef(row, a0, 1.0);
    rows.coef(row, a1, 1.0);
    row = rows.add(0.0, 0.0);
    rows.coef(row, b.q, 1.0);
    rows.coef(row, b0, -q0);
    rows.coef(row, b1, -q1);
    row = rows.add(1.0, 1.0);
    rows.coef(row, b0, 1.0);
    rows.coef(row, b1, 1.0);
    row = rows.add(0.0, 0.0);
    rows.coef(row, b.r, 1.0);
    rows.coef(row, g00, -p0 * q0);
    rows.coef(row, g01, -p0 * q1);
    rows.coef(row, g10, -p1 * q0);
    rows.coef(row, g11, -p1 * q1);
    const int marg[4][3] = {{g00, g01, a0}, {g10, g11, a1}, {g00, g10, b0}, {g01, g11, b1}};
    for (const auto& mg : marg) {
      row = rows.add(0.0, 0.0);
      rows.coef(row, mg[0], 1.0);
      rows.coef(row, mg[1], 1.0);
      rows.coef(row, mg[2], -1.0);
    }
  }
  for (int v = 0; v < n; ++v) {
    double lo = v < n0 ? f.lower[v] : 0.0;
    double hi = v < n0 ? f.upper[v] : 1.0;
    if (v < n0 && f.is_binary(v)) lo = hi = candidate[v] >= 0.5 ? 1.0 : 0.0;
    const int row = rows.add(lo, hi);
    rows.coef(row, v, 1.0);
  }
  Qp qp;
  rows.finish(n, qp);
  double constant = 0.0;
  quadratic_objective(f.weights, f.target, n, qp.P, qp.q, constant);
  return qp;
}

}  // namespace bookshelf

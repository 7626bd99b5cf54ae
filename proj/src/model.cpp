#include "bookshelf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bookshelf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(Family f) {
  switch (f) {
    case Family::A: return "A";
    case Family::B: return "B";
    case Family::C: return "C";
    case Family::D: return "D";
    case Family::E: return "E";
    case Family::F: return "F";
    case Family::G: return "G";
    case Family::H1: return "H1";
    case Family::I1: return "I1";
    case Family::J1: return "J1";
    case Family::K1: return "K1";
    case Family::K2: return "K2";
    case Family::K3: return "K3";
    case Family::L1: return "L1";
    case Family::L2: return "L2";
    case Family::L3: return "L3";
  }
  return "?";
}

bool is_mixed_integer_linear(Family f) {
  switch (f) {
    case Family::C:
    case Family::E:
    case Family::F:
    case Family::K1:
    case Family::L1:
      return false;
    default:
      return true;
  }
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kFlatLeft: return "flat_left";
    case Mode::kUpright: return "upright";
    case Mode::kFlatRight: return "flat_right";
    case Mode::kLeanLeft: return "lean_left";
    case Mode::kLeanRight: return "lean_right";
  }
  return "?";
}

std::optional<double> pinned_angle(Mode m) {
  switch (m) {
    case Mode::kFlatLeft: return -std::numbers::pi / 2;
    case Mode::kUpright: return 0.0;
    case Mode::kFlatRight: return std::numbers::pi / 2;
    default: return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// ProblemParams

Eigen::VectorXd ProblemParams::theta() const {
  const int m = static_cast<int>(stored.size());
  Eigen::VectorXd t(theta_dim(m + 1));
  for (int k = 0; k < m; ++k) {
    t[2 * k] = stored[k].pose.x;
    t[2 * k + 1] = stored[k].pose.y;
    t[2 * m + k] = stored[k].pose.theta;
    t[3 * m + k] = stored[k].geom.height;
    t[4 * m + k] = stored[k].geom.width;
  }
  t[5 * m] = new_book.height;
  t[5 * m + 1] = new_book.width;
  return t;
}

ProblemParams ProblemParams::from_theta(const Eigen::VectorXd& theta, const ShelfDims& shelf) {
  if ((theta.size() - 2) % 5 != 0 || theta.size() < 7) {
    throw std::invalid_argument("parameter vector has invalid length " +
                                std::to_string(theta.size()));
  }
  const int m = static_cast<int>((theta.size() - 2) / 5);
  ProblemParams p;
  p.shelf = shelf;
  p.stored.resize(m);
  for (int k = 0; k < m; ++k) {
    p.stored[k].pose = {theta[2 * k], theta[2 * k + 1], theta[2 * m + k]};
    p.stored[k].geom = {theta[4 * m + k], theta[3 * m + k]};
  }
  p.new_book = {theta[5 * m + 1], theta[5 * m]};
  return p;
}

void ProblemParams::validate() const {
  if (stored.empty()) throw std::invalid_argument("need at least two books (N >= 2)");
  if (!(shelf.width > 0.0 && shelf.height > 0.0)) {
    throw std::invalid_argument("shelf dimensions must be positive");
  }
  for (const auto& b : stored) {
    if (!valid_geometry(b.geom, shelf)) throw std::invalid_argument("stored book does not fit");
  }
  if (!valid_geometry(new_book, shelf)) throw std::invalid_argument("new book does not fit");
}

// ---------------------------------------------------------------------------
// IndexMap

IndexMap::IndexMap(int num_books) : num_books_(num_books) {
  num_pairs_ = num_books * (num_books - 1) / 2;
  int cursor = 0;
  auto take = [&cursor](int n) {
    Range r{cursor, n};
    cursor += n;
    return r;
  };
  pos_ = take(2 * num_books);
  rot_ = take(2 * num_books);
  vert_ = take(8 * num_books);
  z_ = take(3 * num_books);
  lean_ = take(2 * num_books);
  slot_ = take(num_books);
  normal_ = take(2 * num_pairs_);
  offset_ = take(num_pairs_);
  products_ = take(2 * num_books + 18 * num_pairs_);
  dim_ = cursor;
}

int IndexMap::mode(int book, Mode m) const {
  const int mi = static_cast<int>(m);
  if (mi < 3) return z_.start + 3 * book + mi;
  return lean_.start + 2 * book + (mi - 3);
}

int IndexMap::pair_index(int i, int j) const {
  if (i == j) throw std::invalid_argument("pair of identical books");
  if (i > j) std::swap(i, j);
  // Row-major enumeration of the strict upper triangle.
  return i * num_books_ - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<int, int> IndexMap::pair_books(int pair) const {
  for (int i = 0; i < num_books_; ++i) {
    const int row = num_books_ - i - 1;
    if (pair < row) return {i, i + 1 + pair};
    pair -= row;
  }
  throw std::out_of_range("pair index out of range");
}

std::vector<std::pair<std::string, Range>> IndexMap::named_ranges() const {
  return {{"position", pos_},     {"rotation", rot_}, {"vertex", vert_},
          {"mode", z_},           {"lean", lean_},    {"slot", slot_},
          {"plane_normal", normal_}, {"plane_offset", offset_}, {"product", products_}};
}

// ---------------------------------------------------------------------------
// build_problem

namespace {

class RowBuilder {
 public:
  explicit RowBuilder(int cols) : cols_(cols) {}

  struct Row {
    std::vector<std::pair<int, double>> terms;
    double lower = -kInf;
    double upper = kInf;
    Family family = Family::A;
  };

  Row& add(Family family, double lower, double upper) {
    rows_.push_back({{}, lower, upper, family});
    return rows_.back();
  }

  LinearRows finish() const {
    LinearRows out;
    std::vector<Eigen::Triplet<double>> trips;
    out.lower.resize(rows_.size());
    out.upper.resize(rows_.size());
    out.family.reserve(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      for (const auto& [c, v] : rows_[r].terms) trips.emplace_back(static_cast<int>(r), c, v);
      out.lower[r] = rows_[r].lower;
      out.upper[r] = rows_[r].upper;
      out.family.push_back(rows_[r].family);
    }
    out.A.resize(static_cast<int>(rows_.size()), cols_);
    out.A.setFromTriplets(trips.begin(), trips.end());
    return out;
  }

 private:
  int cols_;
  std::vector<Row> rows_;
};

using Terms = std::vector<std::pair<int, double>>;

Terms operator+(Terms a, const Terms& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Terms scaled(Terms a, double s) {
  for (auto& t : a) t.second *= s;
  return a;
}

/// Affine expression c0 + sum coef * x in binaries, used for neighbor slack.
struct Affine {
  double constant = 0.0;
  Terms terms;
};

struct Neighbor {
  int book = -1;  // -1 = wall
  Affine slack;   // 0 exactly when this neighbor is the adjacent one
};

Affine one_minus(int var) { return {1.0, {{var, -1.0}}}; }
Affine just(int var) { return {0.0, {{var, 1.0}}}; }

std::vector<Neighbor> left_neighbors(const IndexMap& ix, int book) {
  const int m = ix.num_stored();
  if (book == ix.inserted()) {
    std::vector<Neighbor> out;
    for (int k = 0; k <= m; ++k) out.push_back({k == 0 ? -1 : k - 1, one_minus(ix.slot(k))});
    return out;
  }
  const int k = book;
  return {{k == 0 ? -1 : k - 1, just(ix.slot(k))}, {ix.inserted(), one_minus(ix.slot(k))}};
}

std::vector<Neighbor> right_neighbors(const IndexMap& ix, int book) {
  const int m = ix.num_stored();
  if (book == ix.inserted()) {
    std::vector<Neighbor> out;
    for (int k = 0; k <= m; ++k) out.push_back({k == m ? -1 : k, one_minus(ix.slot(k))});
    return out;
  }
  const int k = book;
  return {{k == m - 1 ? -1 : k + 1, just(ix.slot(k + 1))},
          {ix.inserted(), one_minus(ix.slot(k + 1))}};
}

std::pair<double, double> product_bounds(double pl, double pu, double ql, double qu, bool square) {
  if (square) {
    const double hi = std::max(pl * pl, pu * pu);
    const double lo = (pl <= 0.0 && pu >= 0.0) ? 0.0 : std::min(pl * pl, pu * pu);
    return {lo, hi};
  }
  const double c[4] = {pl * ql, pl * qu, pu * ql, pu * qu};
  return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
}

}  // namespace

bool ProblemFormulation::is_binary(int i) const {
  return std::binary_search(binaries.begin(), binaries.end(), i);
}

std::pair<SparseRowMatrix, Eigen::VectorXd> ProblemFormulation::inequality_form() const {
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> rhs;
  int out_row = 0;
  for (int r = 0; r < linear.rows(); ++r) {
    for (double sign : {1.0, -1.0}) {
      const double bound = sign > 0 ? linear.upper[r] : -linear.lower[r];
      if (!std::isfinite(bound)) continue;
      for (SparseRowMatrix::InnerIterator it(linear.A, r); it; ++it) {
        trips.emplace_back(out_row, static_cast<int>(it.col()), sign * it.value());
      }
      rhs.push_back(bound);
      ++out_row;
    }
  }
  SparseRowMatrix A(out_row, dim());
  A.setFromTriplets(trips.begin(), trips.end());
  return {A, Eigen::Map<Eigen::VectorXd>(rhs.data(), static_cast<int>(rhs.size()))};
}

ProblemFormulation build_problem(const ProblemParams& params, const GridSpec& grids,
                                 const BuildOptions& opts) {
  params.validate();
  grids.validate();
  for (GridClass c : {GridClass::kCos, GridClass::kSin, GridClass::kNormal,
                      GridClass::kVertexX, GridClass::kVertexY}) {
    if (!grids.covers(c)) {
      throw std::invalid_argument("grid spec misses bilinear variable class " + to_string(c));
    }
  }

  const int n_books = params.num_books();
  const int m = n_books - 1;
  const ShelfDims& shelf = params.shelf;

  ProblemFormulation f;
  f.params = params;
  f.index = IndexMap(n_books);
  const IndexMap& ix = f.index;
  const int n = ix.dim();
  f.big_m = opts.big_m > 0.0 ? opts.big_m : 2.0 * (shelf.width + shelf.height);
  f.ground_tolerance = opts.ground_tolerance;
  const double M = f.big_m;

  std::vector<BookGeometry> geom(n_books);
  for (int k = 0; k < m; ++k) geom[k] = params.stored[k].geom;
  geom[m] = params.new_book;

  // Bounds. Gridded classes take the grid range intersected with the shelf.
  f.lower = Eigen::VectorXd::Constant(n, -kInf);
  f.upper = Eigen::VectorXd::Constant(n, kInf);
  f.grid_class.assign(n, std::nullopt);
  auto set_bounds = [&](int i, double lo, double hi) {
    f.lower[i] = lo;
    f.upper[i] = hi;
  };
  auto set_gridded = [&](int i, GridClass c, double lo, double hi) {
    const AxisGrid& g = grids.at(c);
    set_bounds(i, std::max(lo, g.lower), std::min(hi, g.upper));
    f.grid_class[i] = c;
  };
  for (int b = 0; b < n_books; ++b) {
    set_bounds(ix.pos_x(b), shelf.left(), shelf.right());
    set_bounds(ix.pos_y(b), 0.0, shelf.height);
    set_gridded(ix.cos(b), GridClass::kCos, 0.0, 1.0);  // D: theta in [-pi/2, pi/2]
    set_gridded(ix.sin(b), GridClass::kSin, -1.0, 1.0);
    for (int k = 0; k < 4; ++k) {
      set_gridded(ix.vertex_x(b, k), GridClass::kVertexX, shelf.left(), shelf.right());  // B
      set_gridded(ix.vertex_y(b, k), GridClass::kVertexY, 0.0, shelf.height);           // B
    }
    for (int mo = 0; mo < kNumModes; ++mo) f.binaries.push_back(ix.mode(b, static_cast<Mode>(mo)));
  }
  for (int k = 0; k < ix.num_slots(); ++k) f.binaries.push_back(ix.slot(k));
  for (int i : f.binaries) set_bounds(i, 0.0, 1.0);
  std::sort(f.binaries.begin(), f.binaries.end());
  const double b_max = 0.5 * shelf.width + shelf.height;
  for (int p = 0; p < ix.num_pairs(); ++p) {
    set_gridded(ix.normal_x(p), GridClass::kNormal, -1.0, 1.0);
    set_gridded(ix.normal_y(p), GridClass::kNormal, -1.0, 1.0);
    set_bounds(ix.offset(p), -b_max, b_max);
  }

  // Products.
  f.bilinear.resize(ix.num_products());
  auto add_term = [&](int term, int p, int q, Family fam) {
    f.bilinear[term] = {ix.product(term), p, q, fam};
  };
  for (int b = 0; b < n_books; ++b) {
    add_term(ix.term_cos_sq(b), ix.cos(b), ix.cos(b), Family::C);
    add_term(ix.term_sin_sq(b), ix.sin(b), ix.sin(b), Family::C);
  }
  for (int p = 0; p < ix.num_pairs(); ++p) {
    const auto [bi, bj] = ix.pair_books(p);
    add_term(ix.term_normal_sq(p, 0), ix.normal_x(p), ix.normal_x(p), Family::F);
    add_term(ix.term_normal_sq(p, 1), ix.normal_y(p), ix.normal_y(p), Family::F);
    for (int side = 0; side < 2; ++side) {
      const int book = side == 0 ? bi : bj;
      for (int k = 0; k < 4; ++k) {
        add_term(ix.term_plane_vertex(p, side, k, 0), ix.normal_x(p), ix.vertex_x(book, k),
                 Family::E);
        add_term(ix.term_plane_vertex(p, side, k, 1), ix.normal_y(p), ix.vertex_y(book, k),
                 Family::E);
      }
    }
  }
  for (const auto& t : f.bilinear) {
    const auto [lo, hi] =
        product_bounds(f.lower[t.p], f.upper[t.p], f.lower[t.q], f.upper[t.q], t.p == t.q);
    set_bounds(t.r, lo, hi);
  }

  // Linear rows.
  RowBuilder rows(n);
  const double tau = opts.ground_tolerance;

  for (int b = 0; b < n_books; ++b) {
    const auto offsets = vertex_offsets(geom[b].width, geom[b].height);
    // A: v = x + R h, linear in (c, s).
    for (int k = 0; k < 4; ++k) {
      const double hx = offsets[k].x();
      const double hy = offsets[k].y();
      rows.add(Family::A, 0.0, 0.0).terms = {
          {ix.vertex_x(b, k), 1.0}, {ix.pos_x(b), -1.0}, {ix.cos(b), -hx}, {ix.sin(b), hy}};
      rows.add(Family::A, 0.0, 0.0).terms = {
          {ix.vertex_y(b, k), 1.0}, {ix.pos_y(b), -1.0}, {ix.sin(b), -hx}, {ix.cos(b), -hy}};
    }
    // C: c^2 + s^2 = 1 through the product variables.
    rows.add(Family::C, 1.0, 1.0).terms = {{ix.product(ix.term_cos_sq(b)), 1.0},
                                           {ix.product(ix.term_sin_sq(b)), 1.0}};
    // G: exactly one configuration.
    auto& onehot = rows.add(Family::G, 1.0, 1.0);
    for (int mo = 0; mo < kNumModes; ++mo) {
      onehot.terms.push_back({ix.mode(b, static_cast<Mode>(mo)), 1.0});
    }

    // Pinned poses: expr <= rhs + M (1 - z)  <=>  expr + M z <= rhs + M.
    auto pin_le = [&](Family fam, int z, Terms expr, double rhs) {
      auto& r = rows.add(fam, -kInf, rhs + M);
      r.terms = expr + Terms{{z, M}};
    };
    auto pin_ge = [&](Family fam, int z, Terms expr, double rhs) {
      auto& r = rows.add(fam, rhs - M, kInf);
      r.terms = expr + Terms{{z, -M}};
    };
    const int c = ix.cos(b);
    const int s = ix.sin(b);
    {  // H1: flat on its right side, theta = +pi/2, vertices 1 and 2 on the floor.
      const int z = ix.mode(b, Mode::kFlatRight);
      pin_le(Family::H1, z, {{c, 1.0}}, 0.0);
      pin_ge(Family::H1, z, {{s, 1.0}}, 1.0);
      pin_le(Family::H1, z, {{ix.vertex_y(b, kVertexTopLeft), 1.0}}, 0.0);
      pin_le(Family::H1, z, {{ix.vertex_y(b, kVertexBottomLeft), 1.0}}, 0.0);
    }
    {  // I1: upright, theta = 0, vertices 2 and 3 on the floor.
      const int z = ix.mode(b, Mode::kUpright);
      pin_ge(Family::I1, z, {{c, 1.0}}, 1.0);
      pin_le(Family::I1, z, {{s, 1.0}}, 0.0);
      pin_ge(Family::I1, z, {{s, 1.0}}, 0.0);
      pin_le(Family::I1, z, {{ix.vertex_y(b, kVertexBottomLeft), 1.0}}, 0.0);
      pin_le(Family::I1, z, {{ix.vertex_y(b, kVertexBottomRight), 1.0}}, 0.0);
    }
    {  // J1: flat on its left side, theta = -pi/2, vertices 3 and 4 on the floor.
      const int z = ix.mode(b, Mode::kFlatLeft);
      pin_le(Family::J1, z, {{c, 1.0}}, 0.0);
      pin_le(Family::J1, z, {{s, 1.0}}, -1.0);
      pin_le(Family::J1, z, {{ix.vertex_y(b, kVertexBottomRight), 1.0}}, 0.0);
      pin_le(Family::J1, z, {{ix.vertex_y(b, kVertexTopRight), 1.0}}, 0.0);
    }

    // Leaning. `contact` is the vertex that rests on the neighbor, `pivot`
    // the one on the floor.
    struct LeanSpec {
      Mode mode;
      Family contact_family, support_family, ground_family;
      int contact, pivot;
      std::vector<Neighbor> neighbors;
      double wall_x;
      double order_sign;  // +1: neighbor x <= own x, -1: own x <= neighbor x
    };
    const LeanSpec lean_specs[2] = {
        {Mode::kLeanLeft, Family::K1, Family::K2, Family::K3, kVertexTopLeft,
         kVertexBottomLeft, left_neighbors(ix, b), shelf.left(), 1.0},
        {Mode::kLeanRight, Family::L1, Family::L2, Family::L3, kVertexTopRight,
         kVertexBottomRight, right_neighbors(ix, b), shelf.right(), -1.0},
    };
    for (const LeanSpec& ls : lean_specs) {
      const int lam = ix.mode(b, ls.mode);
      for (const Neighbor& nb : ls.neighbors) {
        // Active when kappa = (1 - lam) + slack == 0.
        // |expr| <= M kappa  <=>  expr + M kappa >= 0 and expr - M kappa <= 0.
        Terms kappa_terms = Terms{{lam, -1.0}} + nb.slack.terms;
        const double kappa_const = 1.0 + nb.slack.constant;
        Terms contact_expr;
        double contact_const = 0.0;
        if (nb.book < 0) {
          contact_expr = {{ix.vertex_x(b, ls.contact), 1.0}};
          contact_const = -ls.wall_x;
        } else {
          const int p = ix.pair_index(b, nb.book);
          const int side = b < nb.book ? 0 : 1;
          contact_expr = {{ix.product(ix.term_plane_vertex(p, side, ls.contact, 0)), 1.0},
                          {ix.product(ix.term_plane_vertex(p, side, ls.contact, 1)), 1.0},
                          {ix.offset(p), -1.0}};
        }
        // expr_terms + contact_const + M (kappa_terms + kappa_const) >= 0
        rows.add(ls.contact_family, -contact_const - M * kappa_const, kInf).terms =
            contact_expr + scaled(kappa_terms, M);
        rows.add(ls.contact_family, -kInf, -contact_const + M * kappa_const).terms =
            contact_expr + scaled(kappa_terms, -M);
        if (nb.book >= 0) {
          // Support: the neighbor's center lies on the side the book leans to.
          // order_sign * (x_nb - x_b) <= M kappa
          Terms expr = {{ix.pos_x(nb.book), ls.order_sign}, {ix.pos_x(b), -ls.order_sign}};
          rows.add(ls.support_family, -kInf, M * kappa_const).terms =
              expr + scaled(kappa_terms, -M);
        }
      }
      // Support: own center between the pivot and the neighbor.
      // lean left: x_b - v_pivot.x <= M (1 - lam); lean right: v_pivot.x - x_b <= ...
      rows.add(ls.support_family, -kInf, M).terms = {{ix.pos_x(b), ls.order_sign},
                                                     {ix.vertex_x(b, ls.pivot), -ls.order_sign},
                                                     {lam, M}};
      // Ground: pivot within tau of the floor.
      rows.add(ls.ground_family, -kInf, tau + M).terms = {{ix.vertex_y(b, ls.pivot), 1.0},
                                                          {lam, M}};
    }
  }

  // G: slot one-hot and left-to-right ordering.
  {
    auto& r = rows.add(Family::G, 1.0, 1.0);
    for (int k = 0; k < ix.num_slots(); ++k) r.terms.push_back({ix.slot(k), 1.0});
  }
  for (int k = 0; k + 1 < m; ++k) {
    rows.add(Family::G, -kInf, 0.0).terms = {{ix.pos_x(k), 1.0}, {ix.pos_x(k + 1), -1.0}};
  }
  const int ins = ix.inserted();
  for (int k = 0; k <= m; ++k) {
    if (k >= 1) {
      rows.add(Family::G, -kInf, M).terms = {
          {ix.pos_x(k - 1), 1.0}, {ix.pos_x(ins), -1.0}, {ix.slot(k), M}};
    }
    if (k < m) {
      rows.add(Family::G, -kInf, M).terms = {
          {ix.pos_x(ins), 1.0}, {ix.pos_x(k), -1.0}, {ix.slot(k), M}};
    }
  }

  // E and F.
  for (int p = 0; p < ix.num_pairs(); ++p) {
    for (int side = 0; side < 2; ++side) {
      for (int k = 0; k < 4; ++k) {
        Terms expr = {{ix.product(ix.term_plane_vertex(p, side, k, 0)), 1.0},
                      {ix.product(ix.term_plane_vertex(p, side, k, 1)), 1.0},
                      {ix.offset(p), -1.0}};
        if (side == 0) {
          rows.add(Family::E, -kInf, 0.0).terms = expr;
        } else {
          rows.add(Family::E, 0.0, kInf).terms = expr;
        }
      }
    }
    rows.add(Family::F, 1.0, 1.0).terms = {{ix.product(ix.term_normal_sq(p, 0)), 1.0},
                                           {ix.product(ix.term_normal_sq(p, 1)), 1.0}};
  }
  f.linear = rows.finish();

  // Objective: minimal disturbance of the stored books.
  f.weights = Eigen::VectorXd::Zero(n);
  f.target = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < m; ++k) {
    const Pose& pose = params.stored[k].pose;
    f.weights[ix.pos_x(k)] = opts.position_weight;
    f.weights[ix.pos_y(k)] = opts.position_weight;
    f.weights[ix.cos(k)] = opts.angle_weight;
    f.weights[ix.sin(k)] = opts.angle_weight;
    f.target[ix.pos_x(k)] = pose.x;
    f.target[ix.pos_y(k)] = pose.y;
    f.target[ix.cos(k)] = std::cos(pose.theta);
    f.target[ix.sin(k)] = std::sin(pose.theta);
  }

  f.stats.mode_binaries = kNumModes * n_books;
  f.stats.slot_binaries = ix.num_slots();
  f.stats.binaries = static_cast<int>(f.binaries.size());
  f.stats.bilinear_terms = static_cast<int>(f.bilinear.size());
  f.stats.linear_rows = f.linear.rows();
  f.stats.variables = n;
  return f;
}

// ---------------------------------------------------------------------------
// Evaluation

double ViolationReport::max() const {
  return std::max({linear, bounds, integrality, bilinear});
}

bool ViolationReport::feasible_with_allowance(const Eigen::VectorXd& allowance,
                                              double tol) const {
  if (std::max({linear, bounds, integrality}) > tol) return false;
  for (int s = 0; s < bilinear_residuals.size(); ++s) {
    if (bilinear_residuals[s] > allowance[s] + tol) return false;
  }
  return true;
}

ViolationReport evaluate_constraints(const ProblemFormulation& f, const DecisionVector& x) {
  if (x.size() != f.dim()) {
    std::ostringstream msg;
    msg << "decision vector has " << x.size() << " entries, formulation expects " << f.dim();
    throw std::invalid_argument(msg.str());
  }
  ViolationReport rep;
  const Eigen::VectorXd ax = f.linear.A * x.values;
  for (int r = 0; r < f.linear.rows(); ++r) {
    const double v = std::max({0.0, f.linear.lower[r] - ax[r], ax[r] - f.linear.upper[r]});
    rep.linear = std::max(rep.linear, v);
    auto& slot = rep.by_family[f.linear.family[r]];
    slot = std::max(slot, v);
  }
  for (int i = 0; i < f.dim(); ++i) {
    const double v = std::max({0.0, f.lower[i] - x[i], x[i] - f.upper[i]});
    rep.bounds = std::max(rep.bounds, v);
    if (f.grid_class[i] == GridClass::kVertexX || f.grid_class[i] == GridClass::kVertexY) {
      rep.by_family[Family::B] = std::max(rep.by_family[Family::B], v);
    } else if (f.grid_class[i] == GridClass::kCos) {
      rep.by_family[Family::D] = std::max(rep.by_family[Family::D], v);
    }
  }
  for (int j : f.binaries) {
    const double v = std::min(std::abs(x[j]), std::abs(1.0 - x[j]));
    rep.integrality = std::max(rep.integrality, v);
  }
  rep.by_family[Family::G] = std::max(rep.by_family[Family::G], rep.integrality);
  rep.bilinear_residuals.resize(static_cast<int>(f.bilinear.size()));
  for (std::size_t s = 0; s < f.bilinear.size(); ++s) {
    const auto& t = f.bilinear[s];
    const double v = std::abs(x[t.r] - x[t.p] * x[t.q]);
    rep.bilinear_residuals[static_cast<int>(s)] = v;
    rep.bilinear = std::max(rep.bilinear, v);
    auto& slot = rep.by_family[t.family];
    slot = std::max(slot, v);
  }
  return rep;
}

double objective_value(const ProblemFormulation& f, const DecisionVector& x) {
  if (x.size() != f.dim()) throw std::invalid_argument("decision vector dimension mismatch");
  return (f.weights.array() * (x.values - f.target).array().square()).sum();
}

// ---------------------------------------------------------------------------
// Layout <-> decision vector

void refresh_products(const ProblemFormulation& f, DecisionVector& x) {
  for (const auto& t : f.bilinear) x[t.r] = x[t.p] * x[t.q];
}

std::vector<Quad> book_quads(const ProblemFormulation& f, const DecisionVector& x) {
  const IndexMap& ix = f.index;
  std::vector<Quad> out(ix.num_books());
  for (int b = 0; b < ix.num_books(); ++b) {
    for (int k = 0; k < 4; ++k) out[b][k] = {x[ix.vertex_x(b, k)], x[ix.vertex_y(b, k)]};
  }
  return out;
}

DecisionVector assemble(const ProblemFormulation& f, const Layout& layout) {
  const IndexMap& ix = f.index;
  const int n_books = ix.num_books();
  if (static_cast<int>(layout.poses.size()) != n_books ||
      static_cast<int>(layout.modes.size()) != n_books) {
    throw std::invalid_argument("layout does not match the number of books");
  }
  DecisionVector x = DecisionVector::zeros(f.dim());
  std::vector<Quad> quads(n_books);
  for (int b = 0; b < n_books; ++b) {
    const BookGeometry g = b < ix.num_stored() ? f.params.stored[b].geom : f.params.new_book;
    const Pose& pose = layout.poses[b];
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    x[ix.pos_x(b)] = pose.x;
    x[ix.pos_y(b)] = pose.y;
    x[ix.cos(b)] = c;
    x[ix.sin(b)] = s;
    quads[b] = vertex_positions(pose, g);
    for (int k = 0; k < 4; ++k) {
      x[ix.vertex_x(b, k)] = quads[b][k].x();
      x[ix.vertex_y(b, k)] = quads[b][k].y();
    }
    x[ix.mode(b, layout.modes[b])] = 1.0;
  }
  x[ix.slot(layout.slot)] = 1.0;
  for (int p = 0; p < ix.num_pairs(); ++p) {
    SeparatingPlane plane;
    if (!layout.planes.empty()) {
      plane = layout.planes.at(p);
    } else {
      const auto [bi, bj] = ix.pair_books(p);
      plane = fit_separating_plane(quads[bi], quads[bj]);
    }
    x[ix.normal_x(p)] = plane.normal.x();
    x[ix.normal_y(p)] = plane.normal.y();
    x[ix.offset(p)] = plane.offset;
  }
  refresh_products(f, x);
  return x;
}

Layout extract_layout(const ProblemFormulation& f, const DecisionVector& x) {
  const IndexMap& ix = f.index;
  Layout out;
  for (int b = 0; b < ix.num_books(); ++b) {
    out.poses.push_back({x[ix.pos_x(b)], x[ix.pos_y(b)], std::atan2(x[ix.sin(b)], x[ix.cos(b)])});
    int best = 0;
    for (int mo = 1; mo < kNumModes; ++mo) {
      if (x[ix.mode(b, static_cast<Mode>(mo))] > x[ix.mode(b, static_cast<Mode>(best))]) best = mo;
    }
    out.modes.push_back(static_cast<Mode>(best));
  }
  int slot = 0;
  for (int k = 1; k < ix.num_slots(); ++k) {
    if (x[ix.slot(k)] > x[ix.slot(slot)]) slot = k;
  }
  out.slot = slot;
  for (int p = 0; p < ix.num_pairs(); ++p) {
    SeparatingPlane plane;
    plane.normal = {x[ix.normal_x(p)], x[ix.normal_y(p)]};
    plane.offset = x[ix.offset(p)];
    out.planes.push_back(plane);
  }
  return out;
}

}  // namespace bookshelf

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "bookshelf/geometry.hpp"
#include "bookshelf/grid.hpp"

namespace bookshelf {

/// Constraint families of the book placement program.
///   A  vertex definition          B  vertices inside the shelf
///   C  rotation orthogonality     D  angle box (cos >= 0)
///   E  separating planes          F  unit plane normals
///   G  one-hot modes, slot choice and left-to-right ordering
///   H1/I1/J1  flat-right / upright / flat-left pose pinning
///   K1..K3 / L1..L3  leaning left / right: contact, support, ground
enum class Family { A, B, C, D, E, F, G, H1, I1, J1, K1, K2, K3, L1, L2, L3 };

std::string to_string(Family f);

/// Rows that only touch product variables through the plane/rotation terms
/// belong to the nonlinear half of the split used by consensus ADMM.
bool is_mixed_integer_linear(Family f);

enum class Mode { kFlatLeft = 0, kUpright = 1, kFlatRight = 2, kLeanLeft = 3, kLeanRight = 4 };
inline constexpr int kNumModes = 5;

std::string to_string(Mode m);
/// Angle the mode pins the book to; lean modes return nullopt.
std::optional<double> pinned_angle(Mode m);

struct StoredBook {
  Pose pose;
  BookGeometry geom;
};

struct ProblemParams {
  /// Books already on the shelf, ordered left to right by center x.
  std::vector<StoredBook> stored;
  BookGeometry new_book;
  ShelfDims shelf;

  int num_books() const { return static_cast<int>(stored.size()) + 1; }

  /// Centers, angles, heights, widths of the stored books followed by the
  /// new book's height and width: 5(N-1) + 2 entries.
  Eigen::VectorXd theta() const;
  static ProblemParams from_theta(const Eigen::VectorXd& theta, const ShelfDims& shelf);
  static int theta_dim(int num_books) { return 5 * (num_books - 1) + 2; }

  /// Throws std::invalid_argument on fewer than two books or a book that
  /// does not fit the shelf.
  void validate() const;
};

struct Range {
  int start = 0;
  int size = 0;
  int end() const { return start + size; }
  bool contains(int i) const { return i >= start && i < end(); }
};

/// Layout of the flat decision vector. Books 0..N-2 are the stored books in
/// order, book N-1 is the inserted one. Planes exist for every unordered pair
/// (i, j), i < j, with book i on the a^T v <= b side.
class IndexMap {
 public:
  IndexMap() = default;
  explicit IndexMap(int num_books);

  int num_books() const { return num_books_; }
  int num_stored() const { return num_books_ - 1; }
  int inserted() const { return num_books_ - 1; }
  int num_pairs() const { return num_pairs_; }
  int num_slots() const { return num_books_; }
  int num_products() const { return products_.size; }
  int dim() const { return dim_; }

  int pos_x(int book) const { return pos_.start + 2 * book; }
  int pos_y(int book) const { return pos_.start + 2 * book + 1; }
  int cos(int book) const { return rot_.start + 2 * book; }
  int sin(int book) const { return rot_.start + 2 * book + 1; }
  int vertex_x(int book, int k) const { return vert_.start + 8 * book + 2 * k; }
  int vertex_y(int book, int k) const { return vert_.start + 8 * book + 2 * k + 1; }
  /// Flat-left / upright / flat-right binaries live in `z`, the two lean
  /// indicators in `lean`; mode() hides the split.
  int mode(int book, Mode m) const;
  int slot(int k) const { return slot_.start + k; }
  int normal_x(int pair) const { return normal_.start + 2 * pair; }
  int normal_y(int pair) const { return normal_.start + 2 * pair + 1; }
  int offset(int pair) const { return offset_.start + pair; }
  int product(int term) const { return products_.start + term; }

  int pair_index(int i, int j) const;
  std::pair<int, int> pair_books(int pair) const;

  // Product-term numbering: per book cos^2, sin^2; then per pair the two
  // normal squares followed by 16 plane-vertex products.
  int term_cos_sq(int book) const { return 2 * book; }
  int term_sin_sq(int book) const { return 2 * book + 1; }
  int term_normal_sq(int pair, int axis) const { return 2 * num_books_ + 18 * pair + axis; }
  /// side 0 = lower-index book of the pair, 1 = upper.
  int term_plane_vertex(int pair, int side, int k, int axis) const {
    return 2 * num_books_ + 18 * pair + 2 + 8 * side + 2 * k + axis;
  }

  std::vector<std::pair<std::string, Range>> named_ranges() const;

 private:
  int num_books_ = 0;
  int num_pairs_ = 0;
  int dim_ = 0;
  Range pos_, rot_, vert_, z_, lean_, slot_, normal_, offset_, products_;
};

struct BilinearTerm {
  int r = 0;
  int p = 0;
  int q = 0;
  Family family = Family::C;
};

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// lower <= A x <= upper, one family tag per row. Equalities have
/// lower == upper; one-sided rows use +-infinity.
struct LinearRows {
  SparseRowMatrix A;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<Family> family;

  int rows() const { return static_cast<int>(A.rows()); }
};

struct BuildOptions {
  /// Big-M for mode-conditional rows; <= 0 selects 2 (W + H).
  double big_m = 0.0;
  /// A leaning book's pivot vertex must be within this height of the floor.
  double ground_tolerance = 1e-3;
  double position_weight = 1.0;
  double angle_weight = 25.0;
};

struct FormulationStats {
  int mode_binaries = 0;
  int slot_binaries = 0;
  int binaries = 0;
  int bilinear_terms = 0;
  int linear_rows = 0;
  int variables = 0;
};

struct ProblemFormulation {
  ProblemParams params;
  IndexMap index;
  LinearRows linear;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<int> binaries;
  std::vector<BilinearTerm> bilinear;
  /// Diagonal of Q and the target x_g of ||x - x_g||^2_Q.
  Eigen::VectorXd weights;
  Eigen::VectorXd target;
  /// Grid class of each variable that appears in a product, if any.
  std::vector<std::optional<GridClass>> grid_class;
  double big_m = 0.0;
  double ground_tolerance = 0.0;
  FormulationStats stats;

  int dim() const { return index.dim(); }
  bool is_binary(int i) const;

  /// The stacked A(Theta) x <= h(Theta) view: two-sided rows split in two.
  std::pair<SparseRowMatrix, Eigen::VectorXd> inequality_form() const;
};

struct DecisionVector {
  Eigen::VectorXd values;

  DecisionVector() = default;
  explicit DecisionVector(Eigen::VectorXd v) : values(std::move(v)) {}
  static DecisionVector zeros(int n) { return DecisionVector(Eigen::VectorXd::Zero(n)); }
  int size() const { return static_cast<int>(values.size()); }
  double operator[](int i) const { return values[i]; }
  double& operator[](int i) { return values[i]; }
};

ProblemFormulation build_problem(const ProblemParams& params, const GridSpec& grids,
                                 const BuildOptions& opts = {});

struct ViolationReport {
  double linear = 0.0;
  double bounds = 0.0;
  double integrality = 0.0;
  double bilinear = 0.0;
  std::map<Family, double> by_family;
  /// |x[r] - x[p] x[q]| per term, in formulation order.
  Eigen::VectorXd bilinear_residuals;

  double max() const;
  bool feasible(double tol) const { return max() <= tol; }
  /// Feasible when each bilinear residual may additionally use its own
  /// allowance (envelope gap of the MIQP path).
  bool feasible_with_allowance(const Eigen::VectorXd& allowance, double tol) const;
};

/// Throws std::invalid_argument on a dimension mismatch.
ViolationReport evaluate_constraints(const ProblemFormulation& f, const DecisionVector& x);

double objective_value(const ProblemFormulation& f, const DecisionVector& x);

/// Explicit description of a placement, used to build full decision vectors.
struct Layout {
  std::vector<Pose> poses;
  std::vector<Mode> modes;
  int slot = 0;
  /// One per pair; fitted from the book rectangles when empty.
  std::vector<SeparatingPlane> planes;
};

/// Fills every variable of the formulation from a layout: rotation entries,
/// vertices, binaries, planes and the products.
DecisionVector assemble(const ProblemFormulation& f, const Layout& layout);

/// Reads poses (theta = atan2(s, c)), modes (largest indicator), slot and
/// planes back out of a decision vector.
Layout extract_layout(const ProblemFormulation& f, const DecisionVector& x);

/// Overwrites every product variable with x[p] x[q].
void refresh_products(const ProblemFormulation& f, DecisionVector& x);

/// Book rectangles as placed by the vector's vertex variables.
std::vector<Quad> book_quads(const ProblemFormulation& f, const DecisionVector& x);

}  // namespace bookshelf

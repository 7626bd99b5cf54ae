#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bookshelf/geometry.hpp"

namespace bookshelf {

/// Classes of variables that take part in bilinear products. Each class
/// shares one breakpoint grid.
enum class GridClass { kCos, kSin, kNormal, kVertexX, kVertexY };

std::string to_string(GridClass c);
std::optional<GridClass> grid_class_from_string(const std::string& name);

/// Uniform partition of [lower, upper] into `segments` cells.
struct AxisGrid {
  double lower = 0.0;
  double upper = 1.0;
  int segments = 1;

  double breakpoint(int i) const;
  std::vector<double> breakpoints() const;
  double cell_width() const { return (upper - lower) / segments; }
  /// Index i of the cell [x^i, x^{i+1}] that contains `value`. A value on an
  /// interior breakpoint picks the cell whose lower edge equals it; the upper
  /// range end maps to the last cell. Throws std::out_of_range outside the
  /// grid.
  int locate(double value, double tol = 1e-9) const;
};

struct GridSpec {
  std::map<GridClass, AxisGrid> axes;

  bool covers(GridClass c) const { return axes.count(c) != 0; }
  const AxisGrid& at(GridClass c) const;

  /// Ranges and segment counts of the benchmark table: rotation entries over
  /// the [-pi/2, pi/2] angle range (cos in [0,1], sin in [-1,1]) with 8
  /// segments, plane normals on [-1,1] with 8, vertex coordinates spanning
  /// the shelf with 4.
  static GridSpec table_one(const ShelfDims& shelf);
  /// Same ranges as table_one with `segments` cells on every axis.
  static GridSpec uniform(const ShelfDims& shelf, int segments);

  /// "table1", or comma-separated `class=lower:upper:segments` entries
  /// (classes: cos, sin, normal, vx, vy). Missing classes fall back to
  /// table_one.
  static GridSpec parse(const std::string& text, const ShelfDims& shelf);
  std::string to_text() const;

  void validate() const;
};

}  // namespace bookshelf

#include "bookshelf/grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bookshelf {

std::string to_string(GridClass c) {
  switch (c) {
    case GridClass::kCos: return "cos";
    case GridClass::kSin: return "sin";
    case GridClass::kNormal: return "normal";
    case GridClass::kVertexX: return "vx";
    case GridClass::kVertexY: return "vy";
  }
  return "?";
}

std::optional<GridClass> grid_class_from_string(const std::string& name) {
  for (GridClass c : {GridClass::kCos, GridClass::kSin, GridClass::kNormal,
                      GridClass::kVertexX, GridClass::kVertexY}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

double AxisGrid::breakpoint(int i) const {
  if (i == segments) return upper;
  return lower + (upper - lower) * static_cast<double>(i) / segments;
}

std::vector<double> AxisGrid::breakpoints() const {
  std::vector<double> out(segments + 1);
  for (int i = 0; i <= segments; ++i) out[i] = breakpoint(i);
  return out;
}

int AxisGrid::locate(double value, double tol) const {
  if (value < lower - tol || value > upper + tol) {
    std::ostringstream msg;
    msg << "value " << value << " outside grid range [" << lower << ", " << upper << "]";
    throw std::out_of_range(msg.str());
  }
  for (int i = segments - 1; i >= 0; --i) {
    if (value >= breakpoint(i) - tol) return i;
  }
  return 0;
}

const AxisGrid& GridSpec::at(GridClass c) const {
  auto it = axes.find(c);
  if (it == axes.end()) {
    throw std::invalid_argument("grid spec has no entry for class " + to_string(c));
  }
  return it->second;
}

GridSpec GridSpec::table_one(const ShelfDims& shelf) {
  GridSpec g;
  g.axes[GridClass::kCos] = {0.0, 1.0, 8};
  g.axes[GridClass::kSin] = {-1.0, 1.0, 8};
  g.axes[GridClass::kNormal] = {-1.0, 1.0, 8};
  g.axes[GridClass::kVertexX] = {shelf.left(), shelf.right(), 4};
  g.axes[GridClass::kVertexY] = {0.0, shelf.height, 4};
  return g;
}

GridSpec GridSpec::uniform(const ShelfDims& shelf, int segments) {
  GridSpec g = table_one(shelf);
  for (auto& [c, axis] : g.axes) axis.segments = segments;
  return g;
}

GridSpec GridSpec::parse(const std::string& text, const ShelfDims& shelf) {
  GridSpec g = table_one(shelf);
  if (text.empty() || text == "table1") return g;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad grid entry: " + item);
    const auto cls = grid_class_from_string(item.substr(0, eq));
    if (!cls) throw std::invalid_argument("unknown grid class: " + item.substr(0, eq));
    AxisGrid axis;
    char c1 = 0, c2 = 0;
    std::stringstream vs(item.substr(eq + 1));
    if (!(vs >> axis.lower >> c1 >> axis.upper >> c2 >> axis.segments) || c1 != ':' ||
        c2 != ':') {
      throw std::invalid_argument("bad grid entry: " + item);
    }
    g.axes[*cls] = axis;
  }
  g.validate();
  return g;
}

std::string GridSpec::to_text() const {
  std::ostringstream out;
  out.precision(17);
  bool first = true;
  for (const auto& [c, axis] : axes) {
    if (!first) out << ',';
    first = false;
    out << to_string(c) << '=' << axis.lower << ':' << axis.upper << ':' << axis.segments;
  }
  return out.str();
}

void GridSpec::validate() const {
  for (const auto& [c, axis] : axes) {
    if (axis.segments < 1) {
      throw std::invalid_argument("grid " + to_string(c) + " needs at least one segment");
    }
    if (!(axis.lower < axis.upper)) {
      throw std::invalid_argument("grid " + to_string(c) + " has an empty range");
    }
  }
}

}  // namespace bookshelf

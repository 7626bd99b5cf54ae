#include "bookshelf/svg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bookshelf {

namespace {

const char* mode_color(Mode m) {
  switch (m) {
    case Mode::kFlatLeft: return "#4e79a7";
    case Mode::kUpright: return "#59a14f";
    case Mode::kFlatRight: return "#9c755f";
    case Mode::kLeanLeft: return "#f28e2b";
    case Mode::kLeanRight: return "#e15759";
  }
  return "#bab0ac";
}

class Canvas {
 public:
  Canvas(const ShelfDims& shelf, const SvgOptions& opts) : shelf_(shelf), opts_(opts) {}

  double px(double x) const { return opts_.margin + (x - shelf_.left()) * opts_.pixels_per_unit; }
  double py(double y) const { return opts_.margin + (shelf_.height - y) * opts_.pixels_per_unit; }
  double width() const { return 2 * opts_.margin + shelf_.width * opts_.pixels_per_unit; }
  double height() const { return 2 * opts_.margin + shelf_.height * opts_.pixels_per_unit; }

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    // keep "-0.00" out of the output
    return std::string(buf) == "-0.00" ? "0.00" : buf;
  }

  std::string point(const Point2<double>& p) const { return num(px(p.x())) + "," + num(py(p.y())); }

 private:
  ShelfDims shelf_;
  SvgOptions opts_;
};

void draw_book(std::ostream& os, const Canvas& c, const Quad& q, Mode m, bool inserted) {
  os << "  <polygon points=\"";
  for (int k = 0; k < 4; ++k) os << (k ? " " : "") << c.point(q[k]);
  os << "\" fill=\"" << mode_color(m) << "\" stroke=\"" << (inserted ? "#000000" : "#333333")
     << "\" stroke-width=\"" << (inserted ? "2" : "1") << "\"/>\n";
}

// Clips a^T p = b to the shelf box; false when the line misses it.
bool clip_plane(const SeparatingPlane& pl, const ShelfDims& s, Point2<double>& p0,
                Point2<double>& p1) {
  const Point2<double> base = pl.normal * pl.offset;
  const Point2<double> dir(-pl.normal.y(), pl.normal.x());
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  const double mins[2] = {s.left(), 0.0};
  const double maxs[2] = {s.right(), s.height};
  for (int a = 0; a < 2; ++a) {
    if (std::abs(dir[a]) < 1e-12) {
      if (base[a] < mins[a] || base[a] > maxs[a]) return false;
      continue;
    }
    double t0 = (mins[a] - base[a]) / dir[a];
    double t1 = (maxs[a] - base[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  }
  if (lo > hi) return false;
  p0 = base + lo * dir;
  p1 = base + hi * dir;
  return true;
}

}  // namespace

std::string svg_document(const Instance& inst, const std::optional<DecisionVector>& x,
                         const SvgOptions& opts) {
  const ShelfDims& shelf = inst.params.shelf;
  const ProblemFormulation f = build_default_problem(inst.params);
  const Canvas c(shelf, opts);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Canvas::num(c.width())
     << "\" height=\"" << Canvas::num(c.height()) << "\">\n";
  os << "  <rect x=\"" << Canvas::num(c.px(shelf.left())) << "\" y=\"" << Canvas::num(c.py(shelf.height))
     << "\" width=\"" << Canvas::num(shelf.width * opts.pixels_per_unit) << "\" height=\""
     << Canvas::num(shelf.height * opts.pixels_per_unit)
     << "\" fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"2\"/>\n";

  const DecisionVector& source = x ? *x : inst.witness;
  const Layout layout = extract_layout(f, source);
  if (x) {
    const auto quads = book_quads(f, *x);
    for (int b = 0; b < f.index.num_books(); ++b) {
      draw_book(os, c, quads[b], layout.modes[b], b == f.index.inserted());
    }
    for (const SeparatingPlane& pl : layout.planes) {
      Point2<double> p0, p1;
      if (!clip_plane(pl, shelf, p0, p1)) continue;
      os << "  <line x1=\"" << Canvas::num(c.px(p0.x())) << "\" y1=\"" << Canvas::num(c.py(p0.y()))
         << "\" x2=\"" << Canvas::num(c.px(p1.x())) << "\" y2=\"" << Canvas::num(c.py(p1.y()))
         << "\" stroke=\"#777777\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";
    }
  } else {
    // stored books at their recorded poses, modes from the witness
    const auto& stored = inst.params.stored;
    for (std::size_t b = 0; b < stored.size(); ++b) {
      draw_book(os, c, vertex_positions(stored[b].pose, stored[b].geom), layout.modes[b], false);
    }
  }
  os << "</svg>\n";
  return os.str();
}

void render_svg(const Instance& inst, const std::optional<DecisionVector>& x,
                const std::string& path, const SvgOptions& opts) {
  const std::string doc = svg_document(inst, x, opts);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc;
  if (!out) throw std::runtime_error("cannot write " + path);
}

}  // namespace bookshelf

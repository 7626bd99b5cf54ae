#include "bookshelf/geometry.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace bookshelf {

bool valid_geometry(const BookGeometry& g, const ShelfDims& shelf) {
  return g.width > 0.0 && g.height > 0.0 && g.width <= shelf.width &&
         g.height <= shelf.height;
}

namespace {

std::vector<Point2<double>> edge_normals(const Quad& a, const Quad& b) {
  std::vector<Point2<double>> axes;
  axes.reserve(8);
  for (const Quad* q : {&a, &b}) {
    for (int k = 0; k < 2; ++k) {
      const Point2<double> e = (*q)[(k + 1) % 4] - (*q)[k];
      const double len = e.norm();
      if (len < 1e-12) continue;
      const Point2<double> n(-e.y() / len, e.x() / len);
      axes.push_back(n);
      axes.push_back(-n);
    }
  }
  if (axes.empty()) {
    axes.emplace_back(1.0, 0.0);
    axes.emplace_back(-1.0, 0.0);
  }
  return axes;
}

std::pair<double, double> project(const Quad& q, const Point2<double>& n) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : q) {
    const double d = n.dot(p);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

}  // namespace

SeparatingPlane fit_separating_plane(const Quad& lower, const Quad& upper) {
  SeparatingPlane best;
  best.gap = -std::numeric_limits<double>::infinity();
  for (const auto& n : edge_normals(lower, upper)) {
    const auto [llo, lhi] = project(lower, n);
    const auto [ulo, uhi] = project(upper, n);
    (void)llo;
    (void)uhi;
    const double gap = ulo - lhi;
    // Prefer the first axis on ties so the fit is deterministic.
    if (gap > best.gap + 1e-12) {
      best.gap = gap;
      best.normal = n;
      best.offset = 0.5 * (ulo + lhi);
    }
  }
  return best;
}

double separation(const Quad& a, const Quad& b) {
  return fit_separating_plane(a, b).gap;
}

double contact_shift_right_of(const Quad& fixed, const Quad& moving) {
  // For an axis n with n.x > 0, `moving` clears `fixed` once
  // min(n.moving) + n.x d >= max(n.fixed). The quads are disjoint as soon as
  // any axis clears, so the first-contact shift is the smallest threshold.
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : edge_normals(fixed, moving)) {
    if (n.x() < 1e-9) continue;
    const auto [flo, fhi] = project(fixed, n);
    const auto [mlo, mhi] = project(moving, n);
    (void)flo;
    (void)mhi;
    best = std::min(best, (fhi - mlo) / n.x());
  }
  return best;
}

Quad translated(const Quad& q, double dx) {
  Quad out = q;
  for (auto& p : out) p.x() += dx;
  return out;
}

double min_x(const Quad& q) {
  return std::min({q[0].x(), q[1].x(), q[2].x(), q[3].x()});
}
double max_x(const Quad& q) {
  return std::max({q[0].x(), q[1].x(), q[2].x(), q[3].x()});
}
double min_y(const Quad& q) {
  return std::min({q[0].y(), q[1].y(), q[2].y(), q[3].y()});
}
double max_y(const Quad& q) {
  return std::max({q[0].y(), q[1].y(), q[2].y(), q[3].y()});
}

}  // namespace bookshelf

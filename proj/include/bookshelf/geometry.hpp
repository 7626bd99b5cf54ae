#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace bookshelf {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

/// Rectangle of a book in its own frame. Width is the spine thickness
/// measured along the body x axis, height along the body y axis.
struct BookGeometry {
  double width = 0.0;
  double height = 0.0;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Axis-aligned shelf with the origin at the middle of the floor:
/// x in [-width/2, width/2], y in [0, height].
struct ShelfDims {
  double width = 18.0;
  double height = 11.0;

  double left() const { return -0.5 * width; }
  double right() const { return 0.5 * width; }
};

bool valid_geometry(const BookGeometry& g, const ShelfDims& shelf);

// Vertex order in the body frame: 0 top-left, 1 bottom-left, 2 bottom-right,
// 3 top-right. The 1-based names used in the model (vertex 1..4) map onto
// these indices in the same order.
inline constexpr int kVertexTopLeft = 0;
inline constexpr int kVertexBottomLeft = 1;
inline constexpr int kVertexBottomRight = 2;
inline constexpr int kVertexTopRight = 3;

template <typename Scalar>
std::array<Point2<Scalar>, 4> vertex_offsets(Scalar width, Scalar height) {
  const Scalar hw = width / Scalar(2);
  const Scalar hh = height / Scalar(2);
  return {Point2<Scalar>(-hw, hh), Point2<Scalar>(-hw, -hh),
          Point2<Scalar>(hw, -hh), Point2<Scalar>(hw, hh)};
}

/// v_k = center + R(c, s) h_k with R = [c -s; s c].
template <typename Scalar>
std::array<Point2<Scalar>, 4> vertex_positions(const Point2<Scalar>& center,
                                               Scalar c, Scalar s,
                                               Scalar width, Scalar height) {
  std::array<Point2<Scalar>, 4> out;
  const auto offsets = vertex_offsets(width, height);
  for (int k = 0; k < 4; ++k) {
    const auto& h = offsets[k];
    out[k] = center + Point2<Scalar>(c * h.x() - s * h.y(), s * h.x() + c * h.y());
  }
  return out;
}

inline std::array<Point2<double>, 4> vertex_positions(const Pose& pose,
                                                      const BookGeometry& geom) {
  return vertex_positions<double>(Point2<double>(pose.x, pose.y), std::cos(pose.theta),
                                  std::sin(pose.theta), geom.width, geom.height);
}

using Quad = std::array<Point2<double>, 4>;

/// Separating line a^T p = b with |a| = 1; `lower` lies on a^T p <= b.
struct SeparatingPlane {
  Point2<double> normal{1.0, 0.0};
  double offset = 0.0;
  /// min over `upper` of a^T p minus max over `lower` of a^T p. Negative when
  /// the quads overlap along every candidate axis.
  double gap = 0.0;
};

/// Best separating axis among the edge normals of both quads, offset placed
/// halfway across the gap. Always returns a unit normal.
SeparatingPlane fit_separating_plane(const Quad& lower, const Quad& upper);

/// Largest separation over all edge-normal axes; <= 0 means touching or
/// overlapping.
double separation(const Quad& a, const Quad& b);

/// Horizontal shift that brings `moving` into first contact with `fixed`,
/// assuming `moving` ends up on the right (+x) side of `fixed`.
double contact_shift_right_of(const Quad& fixed, const Quad& moving);

Quad translated(const Quad& q, double dx);

double min_x(const Quad& q);
double max_x(const Quad& q);
double min_y(const Quad& q);
double max_y(const Quad& q);

}  // namespace bookshelf

#ifndef HOMSYNTH_POLYGON_HPP
#define HOMSYNTH_POLYGON_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "homsynth/error.hpp"
#include "homsynth/homography.hpp"

namespace homsynth {

// Simple polygon as an implicitly closed vertex ring. Vertices are in image
// coordinates (u, v); orientation is not prescribed.
struct Polygon {
  std::vector<Vec2> vertices;
};

// Axis-aligned rectangle ring, counter-clockwise in image coordinates
// (y grows downward): top-left, top-right, bottom-right, bottom-left.
inline Polygon rect_polygon(double x0, double y0, double width,
                            double height) {
  return Polygon{{Vec2(x0, y0), Vec2(x0 + width, y0),
                  Vec2(x0 + width, y0 + height), Vec2(x0, y0 + height)}};
}

inline double signed_area(const Polygon& poly) {
  const std::size_t n = poly.vertices.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly.vertices[i];
    const Vec2& b = poly.vertices[(i + 1) % n];
    acc += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * acc;
}

// Warps every vertex. Throws PointAtInfinity when a vertex crosses the
// horizon of g, which callers sampling random motions treat as a failed draw.
inline Polygon warp_polygon(const Polygon& poly, const Homography& g) {
  Polygon out;
  out.vertices.reserve(poly.vertices.size());
  for (const Vec2& v : poly.vertices) {
    out.vertices.push_back(warp_point(g, v));
  }
  return out;
}

namespace detail {

inline double point_segment_distance(const Vec2& p, const Vec2& a,
                                     const Vec2& b) {
  Vec2 ab = b - a;
  double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  double t = (p - a).dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// True when segments (a0,a1) and (b0,b1) cross at a single interior point of
// both, with each endpoint strictly off the other line by more than tol.
// Touching contacts (endpoint on the other segment) do not count.
inline bool segments_properly_cross(const Vec2& a0, const Vec2& a1,
                                    const Vec2& b0, const Vec2& b1,
                                    double tol) {
  Vec2 da = a1 - a0;
  Vec2 db = b1 - b0;
  double la = da.norm();
  double lb = db.norm();
  if (la <= tol || lb <= tol) return false;
  // Signed perpendicular distances of each endpoint from the other line.
  double d_b0 = (da.x() * (b0.y() - a0.y()) - da.y() * (b0.x() - a0.x())) / la;
  double d_b1 = (da.x() * (b1.y() - a0.y()) - da.y() * (b1.x() - a0.x())) / la;
  double d_a0 = (db.x() * (a0.y() - b0.y()) - db.y() * (a0.x() - b0.x())) / lb;
  double d_a1 = (db.x() * (a1.y() - b0.y()) - db.y() * (a1.x() - b0.x())) / lb;
  bool b_splits = (d_b0 > tol && d_b1 < -tol) || (d_b0 < -tol && d_b1 > tol);
  bool a_splits = (d_a0 > tol && d_a1 < -tol) || (d_a0 < -tol && d_a1 > tol);
  return b_splits && a_splits;
}

}  // namespace detail

enum class PointLocation { Inside, Boundary, Outside };

// Classifies a point against the polygon ring. Points within boundary_tol of
// an edge count as Boundary; otherwise an even-odd ray cast decides.
inline PointLocation locate_point(const Polygon& poly, const Vec2& p,
                                  double boundary_tol = 1e-9) {
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly.vertices[i];
    const Vec2& b = poly.vertices[(i + 1) % n];
    if (detail::point_segment_distance(p, a, b) <= boundary_tol) {
      return PointLocation::Boundary;
    }
  }
  bool inside = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly.vertices[i];
    const Vec2& b = poly.vertices[(i + 1) % n];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      double x_cross =
          a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (x_cross > p.x()) inside = !inside;
    }
  }
  return inside ? PointLocation::Inside : PointLocation::Outside;
}

// A ring is simple when no two non-adjacent edges touch. Adjacent edges share
// exactly their common vertex by construction.
inline bool is_simple(const Polygon& poly, double tol = 1e-9) {
  const std::size_t n = poly.vertices.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a0 = poly.vertices[i];
    const Vec2& a1 = poly.vertices[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      const Vec2& b0 = poly.vertices[j];
      const Vec2& b1 = poly.vertices[(j + 1) % n];
      if (detail::segments_properly_cross(a0, a1, b0, b1, tol)) return false;
      // Endpoint resting on a non-adjacent edge pinches the ring.
      if (detail::point_segment_distance(b0, a0, a1) <= tol) return false;
      if (detail::point_segment_distance(b1, a0, a1) <= tol) return false;
      if (detail::point_segment_distance(a0, b0, b1) <= tol) return false;
      if (detail::point_segment_distance(a1, b0, b1) <= tol) return false;
    }
  }
  return true;
}

// The three relate-matrix cells the containment test inspects. Containment
// requires the interiors to meet while the inner shape never reaches the
// outer exterior.
enum class ContainmentCell {
  InteriorInterior,  // interior(outer) vs interior(inner) must intersect
  ExteriorInterior,  // exterior(outer) vs interior(inner) must be empty
  ExteriorBoundary,  // exterior(outer) vs boundary(inner) must be empty
};

struct ContainmentPattern {
  bool contains = false;
  // First cell whose requirement failed; empty when contains is true.
  std::optional<ContainmentCell> failed_cell;
};

// Checks that `outer` contains `inner` in the OGC sense: no part of the inner
// polygon lies in the outer's exterior, and the interiors overlap. Boundary
// contact is allowed. Inner vertices and edge midpoints are classified
// against the outer ring, and inner edges are tested for proper crossings of
// outer edges; for positive-area polygons these witnesses decide all three
// cells (an inner polygon confined to the outer closure always shares
// interior points with it).
inline ContainmentPattern check_containment_pattern(const Polygon& outer,
                                                    const Polygon& inner,
                                                    double tol = 1e-9) {
  if (outer.vertices.size() < 3 || inner.vertices.size() < 3) {
    throw Error(Errc::InvalidArgument, "containment needs polygons");
  }
  if (!is_simple(outer, tol) || !is_simple(inner, tol)) {
    throw Error(Errc::SelfIntersectingPolygon,
                "containment needs simple polygons");
  }
  if (std::abs(signed_area(outer)) <= tol ||
      std::abs(signed_area(inner)) <= tol) {
    throw Error(Errc::InvalidArgument,
                "containment needs positive-area polygons");
  }

  const std::size_t n = inner.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& v = inner.vertices[i];
    const Vec2& w = inner.vertices[(i + 1) % n];
    for (double t : {0.0, 0.25, 0.5, 0.75}) {
      if (locate_point(outer, v + t * (w - v), tol) ==
          PointLocation::Outside) {
        return {false, ContainmentCell::ExteriorInterior};
      }
    }
  }

  const std::size_t m = outer.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a0 = inner.vertices[i];
    const Vec2& a1 = inner.vertices[(i + 1) % n];
    for (std::size_t j = 0; j < m; ++j) {
      const Vec2& b0 = outer.vertices[j];
      const Vec2& b1 = outer.vertices[(j + 1) % m];
      if (detail::segments_properly_cross(a0, a1, b0, b1, tol)) {
        return {false, ContainmentCell::ExteriorBoundary};
      }
    }
  }

  return {true, std::nullopt};
}

}  // namespace homsynth

#endif  // HOMSYNTH_POLYGON_HPP

#ifndef HOMSYNTH_MOTION_GEN_HPP
#define HOMSYNTH_MOTION_GEN_HPP

#include <cmath>
#include <cstdint>

#include "homsynth/error.hpp"
#include "homsynth/homography.hpp"
#include "homsynth/polygon.hpp"
#include "homsynth/random.hpp"

namespace homsynth {

// Parameters of the synthetic-motion sampler. A crop window of crop_height x
// crop_width is placed inside a border frame of border_height x border_width;
// corner offsets are drawn uniformly from [-edge_deviation, edge_deviation]
// and a draw is kept only when the displaced view stays inside the border.
struct MotionConfig {
  int border_height = 306;
  int border_width = 408;
  int crop_height = 240;
  int crop_width = 320;
  double edge_deviation = 32.0;
  int max_rollouts = 100;

  void validate() const {
    if (border_height <= 0 || border_width <= 0 || crop_height <= 0 ||
        crop_width <= 0) {
      throw Error(Errc::InvalidArgument, "image dimensions must be positive");
    }
    if (crop_height > border_height || crop_width > border_width) {
      throw Error(Errc::InvalidArgument,
                  "crop must fit inside the border frame");
    }
    if (edge_deviation < 0.0) {
      throw Error(Errc::InvalidArgument, "edge_deviation must be nonnegative");
    }
    if (max_rollouts < 0) {
      throw Error(Errc::InvalidArgument, "max_rollouts must be nonnegative");
    }
  }
};

struct GeneratedMotion {
  // Corner offsets defining the motion; zero when fallback is set.
  FourPointHomography four_point;
  // Maps crop corners to their displaced positions (inverse of the matrix
  // that pulls displaced points back onto the crop).
  Homography g_inverse;
  // The crop window the offsets refer to, as a rectangle ring.
  Polygon crop_polygon;
  // Index of the accepted rollout (0 when the first draw passed); equals the
  // rollout budget when fallback is set.
  int rollouts_used = 0;
  bool fallback = false;
};

// Uniform integer placement of the crop window inside the border frame.
inline Polygon sample_crop_polygon(const MotionConfig& cfg,
                                   RandomStream& rng) {
  cfg.validate();
  int max_row = cfg.border_height - cfg.crop_height;
  int max_col = cfg.border_width - cfg.crop_width;
  auto row = static_cast<double>(rng.uniform_int(0, max_row));
  auto col = static_cast<double>(rng.uniform_int(0, max_col));
  return rect_polygon(col, row, cfg.crop_width, cfg.crop_height);
}

// Per-corner offsets, each coordinate i.i.d. uniform on
// [-edge_deviation, edge_deviation).
inline FourPointHomography sample_four_point(double edge_deviation,
                                             RandomStream& rng) {
  FourPointHomography fp;
  for (Vec2& d : fp.deltas) {
    d.x() = rng.uniform_real(-edge_deviation, edge_deviation);
    d.y() = rng.uniform_real(-edge_deviation, edge_deviation);
  }
  return fp;
}

namespace detail {

// Corners of an axis-aligned rectangle ring in CornerArray order
// [tl, tr, bl, br]. Throws when the ring is not such a rectangle.
inline CornerArray rectangle_corners(const Polygon& rect, double tol = 1e-9) {
  if (rect.vertices.size() != 4) {
    throw Error(Errc::NonRectangularCrop, "crop ring must have 4 vertices");
  }
  const Vec2& tl = rect.vertices[0];
  const Vec2& tr = rect.vertices[1];
  const Vec2& br = rect.vertices[2];
  const Vec2& bl = rect.vertices[3];
  bool axis_aligned = std::abs(tl.y() - tr.y()) <= tol &&
                      std::abs(bl.y() - br.y()) <= tol &&
                      std::abs(tl.x() - bl.x()) <= tol &&
                      std::abs(tr.x() - br.x()) <= tol;
  if (!axis_aligned || tr.x() - tl.x() <= tol || bl.y() - tl.y() <= tol) {
    throw Error(Errc::NonRectangularCrop,
                "crop ring must be an axis-aligned rectangle");
  }
  return CornerArray{tl, tr, bl, br};
}

// Homogeneous w component of g applied to p; used to reject draws whose
// horizon line cuts through the working area.
inline double homogeneous_w(const Homography& g, const Vec2& p) {
  const Mat3& m = g.matrix();
  return m(2, 0) * p.x() + m(2, 1) * p.y() + m(2, 2);
}

}  // namespace detail

// Draws corner offsets until the displaced crop view stays inside the border
// frame, i.e. the border polygon warped by the inverse motion still contains
// the crop window. Rollouts that produce a degenerate solve, a horizon
// through the working area, or a self-intersecting warped border are
// discarded. When the budget is exhausted the zero motion is returned with
// the fallback flag set.
inline GeneratedMotion generate_motion(const MotionConfig& cfg,
                                       const Polygon& crop_polygon,
                                       RandomStream& rng) {
  cfg.validate();
  CornerArray crop_corners = detail::rectangle_corners(crop_polygon);
  for (const Vec2& c : crop_corners) {
    if (c.x() < -1e-9 || c.y() < -1e-9 ||
        c.x() > cfg.border_width + 1e-9 ||
        c.y() > cfg.border_height + 1e-9) {
      throw Error(Errc::CropOutOfBounds,
                  "crop window must lie inside the border frame");
    }
  }
  Polygon border = rect_polygon(0.0, 0.0, cfg.border_width, cfg.border_height);

  for (int rollout = 0; rollout < cfg.max_rollouts; ++rollout) {
    FourPointHomography fp = sample_four_point(cfg.edge_deviation, rng);
    try {
      // solve_dlt returns the canonical scaling (unit Frobenius norm,
      // nonnegative (2,2) entry), so positive w below means "in front".
      Homography g = four_point_to_matrix(fp, crop_corners);
      Homography g_inverse = invert(g).normalized();
      // Both the crop under g and the border under g_inverse must stay on
      // the finite side of the respective horizon.
      bool front = true;
      for (const Vec2& c : crop_corners) {
        if (detail::homogeneous_w(g, c) <= 1e-9) front = false;
      }
      for (const Vec2& v : border.vertices) {
        if (detail::homogeneous_w(g_inverse, v) <= 1e-9) front = false;
      }
      if (!front) continue;

      Polygon warped_border = warp_polygon(border, g_inverse);
      if (check_containment_pattern(warped_border, crop_polygon).contains) {
        return {fp, g_inverse, crop_polygon, rollout, false};
      }
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::DegenerateConfiguration:
        case Errc::PointAtInfinity:
        case Errc::SelfIntersectingPolygon:
        case Errc::SingularHomography:
          continue;  // failed rollout, redraw
        default:
          throw;
      }
    }
  }
  return {FourPointHomography::zero(), Homography::identity(), crop_polygon,
          cfg.max_rollouts, true};
}

}  // namespace homsynth

#endif  // HOMSYNTH_MOTION_GEN_HPP

#ifndef HOMSYNTH_ENDOSCOPY_HPP
#define HOMSYNTH_ENDOSCOPY_HPP

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <vector>

#include "homsynth/image_ops.hpp"
#include "homsynth/polygon.hpp"
#include "homsynth/random.hpp"

namespace homsynth {

struct Circle {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

// Edge-preserving smoothing + the brightness threshold that separates the
// illuminated endoscopic view from the dark sensor surround.
struct BoundaryParams {
  double spatial_sigma = 5.0;
  double range_sigma = 30.0;
  int kernel_radius = 7;
  std::uint8_t threshold = 16;
  double ray_step = 0.5;
  std::uint64_t seed = 0;
};

// Edge-preserving bilateral filter on a single-channel image. Window samples
// outside the frame are skipped (weights renormalize over the valid part).
inline ImageBuffer bilateral_filter(const ImageBuffer& img,
                                    double spatial_sigma, double range_sigma,
                                    int kernel_radius) {
  if (img.empty()) throw Error(Errc::EmptyInput, "empty image");
  if (img.channels() != 1) {
    throw Error(Errc::InvalidArgument, "bilateral filter expects grayscale");
  }
  if (spatial_sigma <= 0.0 || range_sigma <= 0.0 || kernel_radius < 1) {
    throw Error(Errc::InvalidArgument, "bad bilateral filter parameters");
  }
  const int h = img.height(), w = img.width(), rad = kernel_radius;

  std::vector<double> spatial((2 * rad + 1) * (2 * rad + 1));
  for (int dr = -rad; dr <= rad; ++dr) {
    for (int dc = -rad; dc <= rad; ++dc) {
      spatial[(dr + rad) * (2 * rad + 1) + (dc + rad)] =
          std::exp(-0.5 * (dr * dr + dc * dc) / (spatial_sigma * spatial_sigma));
    }
  }
  double range_lut[256];
  for (int d = 0; d < 256; ++d) {
    range_lut[d] = std::exp(-0.5 * d * d / (range_sigma * range_sigma));
  }

  ImageBuffer out(h, w, 1);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int center = img.at(r, c);
      double acc = 0.0, weight = 0.0;
      const int r0 = std::max(0, r - rad), r1 = std::min(h - 1, r + rad);
      const int c0 = std::max(0, c - rad), c1 = std::min(w - 1, c + rad);
      for (int rr = r0; rr <= r1; ++rr) {
        for (int cc = c0; cc <= c1; ++cc) {
          int v = img.at(rr, cc);
          double wgt = spatial[(rr - r + rad) * (2 * rad + 1) + (cc - c + rad)] *
                       range_lut[std::abs(v - center)];
          acc += wgt * v;
          weight += wgt;
        }
      }
      out.at(r, c) = detail::round_u8(acc / weight);
    }
  }
  return out;
}

// Samples points on the illuminated-area boundary by marching rays from the
// frame center outward over a smoothed brightness mask. Ray directions are
// jittered-stratified around the circle; each ray contributes the midpoint of
// its outermost bright-to-dark crossing. Rays that never cross (all dark, or
// still bright at the frame edge) contribute nothing. Fewer than 3 points
// means no usable boundary.
inline std::vector<Vec2> sample_boundary_points(
    const ImageBuffer& img, int n_rays, const BoundaryParams& params = {}) {
  if (img.empty()) throw Error(Errc::EmptyInput, "empty image");
  if (n_rays < 3) {
    throw Error(Errc::InvalidArgument, "need at least 3 rays");
  }
  ImageBuffer gray = img.channels() == 1 ? img : to_grayscale(img);
  ImageBuffer smooth = bilateral_filter(gray, params.spatial_sigma,
                                        params.range_sigma,
                                        params.kernel_radius);

  const double h = smooth.height(), w = smooth.width();
  const Vec2 center(w / 2.0, h / 2.0);
  auto bright_at = [&](const Vec2& p) -> int {
    // -1 signals "left the frame".
    if (p.x() < 0.0 || p.x() >= w || p.y() < 0.0 || p.y() >= h) return -1;
    int c = static_cast<int>(p.x());
    int r = static_cast<int>(p.y());
    return smooth.at(r, c) > params.threshold ? 1 : 0;
  };

  RandomStream rng(params.seed);
  std::vector<Vec2> points;
  points.reserve(n_rays);
  const double t_max = std::hypot(w, h);  // any ray exits within the diagonal
  for (int i = 0; i < n_rays; ++i) {
    double theta =
        2.0 * M_PI * (static_cast<double>(i) + rng.uniform_real(0.0, 1.0)) /
        static_cast<double>(n_rays);
    Vec2 dir(std::cos(theta), std::sin(theta));
    double last_cross = -1.0;
    int prev = bright_at(center);
    for (double t = params.ray_step; t <= t_max; t += params.ray_step) {
      int cur = bright_at(center + t * dir);
      if (cur < 0) break;
      if (prev == 1 && cur == 0) last_cross = t - 0.5 * params.ray_step;
      prev = cur;
    }
    if (last_cross > 0.0) points.push_back(center + last_cross * dir);
  }
  if (points.size() < 3) {
    throw Error(Errc::NoBoundaryFound,
                "fewer than 3 boundary crossings found");
  }
  return points;
}

// Least-squares circle through the points: each point contributes the linear
// equation 2*u*x0 + 2*v*x1 + x2 = u^2 + v^2 in the unknowns x = (center_u,
// center_v, radius^2 - |center|^2), solved by column-pivoted QR. Collinear
// points leave the system rank-deficient.
inline Circle fit_circle(const std::vector<Vec2>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(Errc::TooFewPoints, "circle fit needs 3 points");
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = points[i].x(), v = points[i].y();
    a(i, 0) = 2.0 * u;
    a(i, 1) = 2.0 * v;
    a(i, 2) = 1.0;
    b(i) = u * u + v * v;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) {
    throw Error(Errc::DegenerateConfiguration,
                "points do not determine a circle");
  }
  Eigen::Vector3d x = qr.solve(b);
  double radicand = x(2) + x(0) * x(0) + x(1) * x(1);
  if (radicand < 0.0) {
    throw Error(Errc::NegativeRadicand,
                "circle fit produced a negative squared radius");
  }
  return Circle{Vec2(x(0), x(1)), std::sqrt(radicand)};
}

// Circle fit with one trimming pass: fit, drop points whose absolute radial
// residual exceeds twice the median residual, refit on the survivors.
inline Circle fit_circle_trimmed(const std::vector<Vec2>& points) {
  Circle first = fit_circle(points);
  std::vector<double> residuals(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    residuals[i] =
        std::abs((points[i] - first.center).norm() - first.radius);
  }
  std::vector<double> sorted = residuals;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                   sorted.end());
  double median = sorted[sorted.size() / 2];
  if (median <= 1e-12) return first;  // already consistent
  std::vector<Vec2> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (residuals[i] <= 2.0 * median) kept.push_back(points[i]);
  }
  if (kept.size() < 3 || kept.size() == points.size()) return first;
  return fit_circle(kept);
}

// Detected boundary of the illuminated area as a circle.
inline Circle detect_boundary_circle(const ImageBuffer& img, int n_rays = 64,
                                     const BoundaryParams& params = {}) {
  return fit_circle_trimmed(sample_boundary_points(img, n_rays, params));
}

// Largest axis-aligned rectangle of aspect out_width:out_height that fits
// both inside the circle's inscribed square (half-diagonal r/sqrt(2)) and
// inside the frame, centered on the circle center; the window is snapped
// inward to integer pixels, cropped and resized to the requested shape.
inline ImageBuffer circle_crop(const ImageBuffer& img, const Circle& circle,
                               int out_height, int out_width) {
  if (img.empty()) throw Error(Errc::EmptyInput, "empty image");
  if (out_height <= 0 || out_width <= 0) {
    throw Error(Errc::InvalidArgument, "output shape must be positive");
  }
  const double w = img.width(), h = img.height();
  const double cx = circle.center.x(), cy = circle.center.y();
  if (cx < 0.0 || cx > w || cy < 0.0 || cy > h) {
    throw Error(Errc::DegenerateCrop, "circle center outside the frame");
  }
  if (circle.radius <= 0.0) {
    throw Error(Errc::DegenerateCrop, "circle radius must be positive");
  }
  const double inscribed_half = circle.radius / std::sqrt(2.0);
  // Scale k such that the half-extents are k*out_width and k*out_height.
  double k = inscribed_half / out_width;
  k = std::min(k, inscribed_half / out_height);
  k = std::min(k, cx / out_width);
  k = std::min(k, (w - cx) / out_width);
  k = std::min(k, cy / out_height);
  k = std::min(k, (h - cy) / out_height);
  int x0 = static_cast<int>(std::ceil(cx - k * out_width));
  int x1 = static_cast<int>(std::floor(cx + k * out_width));
  int y0 = static_cast<int>(std::ceil(cy - k * out_height));
  int y1 = static_cast<int>(std::floor(cy + k * out_height));
  if (x1 - x0 < 2 || y1 - y0 < 2) {
    throw Error(Errc::DegenerateCrop, "usable window is degenerate");
  }
  ImageBuffer window =
      crop_image(img, rect_polygon(x0, y0, x1 - x0, y1 - y0));
  return resize_image(window, out_height, out_width);
}

}  // namespace homsynth

#endif  // HOMSYNTH_ENDOSCOPY_HPP

#ifndef HOMSYNTH_HOMOGRAPHY_HPP
#define HOMSYNTH_HOMOGRAPHY_HPP

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "homsynth/error.hpp"

namespace homsynth {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Crop/image corners in the fixed order [top-left, top-right, bottom-left,
// bottom-right]. Image coordinates are (u, v) = (column, row), origin at the
// top-left corner of the top-left pixel.
using CornerArray = std::array<Vec2, 4>;

// Corners of the axis-aligned rectangle with top-left (x0, y0).
inline CornerArray rect_corners(double x0, double y0, double width,
                                double height) {
  return CornerArray{Vec2(x0, y0), Vec2(x0 + width, y0), Vec2(x0, y0 + height),
                     Vec2(x0 + width, y0 + height)};
}

// Corners of a height x width image in pixel units.
inline CornerArray image_corners(int height, int width) {
  return rect_corners(0.0, 0.0, static_cast<double>(width),
                      static_cast<double>(height));
}

// A point pair related by a homography G in the sense
//   alpha * [target; 1] = G * [source; 1].
// G maps the source (displaced) point onto the target point.
struct Correspondence {
  Vec2 target;
  Vec2 source;
};

using CorrespondenceSet = std::vector<Correspondence>;

// 3x3 projective homography. The matrix is stored as given; all operations
// treat it as an equivalence class under nonzero scaling.
class Homography {
 public:
  Homography() : m_(Mat3::Identity()) {}

  explicit Homography(const Mat3& m) : m_(m) {
    if (!(m.norm() > 0.0)) {
      throw Error(Errc::InvalidArgument, "homography matrix is zero");
    }
  }

  static Homography identity() { return Homography(); }

  static Homography translation(double dx, double dy) {
    Mat3 m = Mat3::Identity();
    m(0, 2) = dx;
    m(1, 2) = dy;
    return Homography(m);
  }

  const Mat3& matrix() const noexcept { return m_; }

  // Canonical representative: unit Frobenius norm, sign chosen so the (2,2)
  // entry is nonnegative. If (2,2) is numerically zero the sign of the
  // largest-magnitude entry breaks the tie, so the form stays stable under
  // scaling by negative factors.
  Homography normalized() const {
    Mat3 n = m_ / m_.norm();
    double pivot = n(2, 2);
    if (std::abs(pivot) < 1e-14) {
      double best = 0.0;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          if (std::abs(n(r, c)) > std::abs(best)) best = n(r, c);
        }
      }
      pivot = best;
    }
    if (pivot < 0.0) n = -n;
    return Homography(n);
  }

  // Representation scaled so the (2,2) entry equals one. Convenient for
  // display and for comparing against textbook matrices.
  Mat3 scaled_to_unit_g22() const {
    if (std::abs(m_(2, 2)) <= 1e-15 * m_.norm()) {
      throw Error(Errc::InvalidArgument,
                  "homography has (2,2) entry equal to zero");
    }
    return m_ / m_(2, 2);
  }

 private:
  Mat3 m_;
};

// Largest absolute entry difference between the canonical forms. Scale
// ambiguity is removed before comparing.
inline double normalized_distance(const Homography& a, const Homography& b) {
  return (a.normalized().matrix() - b.normalized().matrix())
      .cwiseAbs()
      .maxCoeff();
}

// Applies G to a point, or returns nothing when the point maps to infinity
// (homogeneous w vanishes relative to the matrix and point scale).
inline std::optional<Vec2> try_warp_point(const Homography& g, const Vec2& p) {
  const Mat3& m = g.matrix();
  double w = m(2, 0) * p.x() + m(2, 1) * p.y() + m(2, 2);
  double scale = m.norm() * std::max(1.0, p.norm());
  if (std::abs(w) <= 1e-12 * scale) return std::nullopt;
  double x = m(0, 0) * p.x() + m(0, 1) * p.y() + m(0, 2);
  double y = m(1, 0) * p.x() + m(1, 1) * p.y() + m(1, 2);
  return Vec2(x / w, y / w);
}

inline Vec2 warp_point(const Homography& g, const Vec2& p) {
  std::optional<Vec2> q = try_warp_point(g, p);
  if (!q) throw Error(Errc::PointAtInfinity, "point maps to infinity");
  return *q;
}

inline Homography compose(const Homography& a, const Homography& b) {
  return Homography(a.matrix() * b.matrix());
}

inline Homography invert(const Homography& g) {
  const Mat3& m = g.matrix();
  double nf = m.norm();
  // Determinant of the unit-Frobenius representative; scale-free singularity
  // test.
  double det_normalized = m.determinant() / (nf * nf * nf);
  if (std::abs(det_normalized) < 1e-12) {
    throw Error(Errc::SingularHomography, "matrix is not invertible");
  }
  return Homography(Mat3(m.inverse()));
}

struct DltOptions {
  // Hartley preconditioning: translate each point set to zero mean and scale
  // to mean distance sqrt(2) before building the linear system. Improves
  // conditioning for large overdetermined systems; the minimal 4-point case
  // does not need it.
  bool normalize_points = false;
};

namespace detail {

// Similarity transform sending the point set to zero centroid and mean
// distance sqrt(2).
inline Mat3 conditioning_transform(const CorrespondenceSet& corr,
                                   bool use_source) {
  Vec2 centroid = Vec2::Zero();
  for (const Correspondence& c : corr) {
    centroid += use_source ? c.source : c.target;
  }
  centroid /= static_cast<double>(corr.size());
  double mean_dist = 0.0;
  for (const Correspondence& c : corr) {
    mean_dist += ((use_source ? c.source : c.target) - centroid).norm();
  }
  mean_dist /= static_cast<double>(corr.size());
  double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  Mat3 t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

}  // namespace detail

// Direct linear transform. Estimates G such that alpha * target_h =
// G * source_h for every correspondence, by taking the right singular vector
// of the 2N x 9 design matrix with the smallest singular value (the ninth
// constraint is unit norm of the stacked coefficients). Throws
// DegenerateConfiguration when the design matrix has rank < 8, which covers
// three-collinear-point configurations in either set.
//
// The returned homography is in canonical form (unit Frobenius norm,
// nonnegative (2,2) entry) so repeated runs are bit-identical.
inline Homography solve_dlt(const CorrespondenceSet& corr,
                            const DltOptions& opts = {}) {
  const std::size_t n = corr.size();
  if (n < 4) {
    throw Error(Errc::TooFewPoints, "need at least 4 correspondences");
  }

  Mat3 t_src = Mat3::Identity();
  Mat3 t_tgt = Mat3::Identity();
  if (opts.normalize_points) {
    t_src = detail::conditioning_transform(corr, true);
    t_tgt = detail::conditioning_transform(corr, false);
  }

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 src_h = t_src * Vec3(corr[i].source.x(), corr[i].source.y(), 1.0);
    Vec3 tgt_h = t_tgt * Vec3(corr[i].target.x(), corr[i].target.y(), 1.0);
    const double up = src_h.x() / src_h.z();
    const double vp = src_h.y() / src_h.z();
    const double u = tgt_h.x() / tgt_h.z();
    const double v = tgt_h.y() / tgt_h.z();
    a.row(2 * i) << up, vp, 1, 0, 0, 0, -up * u, -vp * u, -u;
    a.row(2 * i + 1) << 0, 0, 0, up, vp, 1, -up * v, -vp * v, -v;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  // sv has min(2N, 9) entries; index 7 exists for every N >= 4.
  if (sv(7) <= 1e-8 * sv(0)) {
    throw Error(Errc::DegenerateConfiguration,
                "correspondences do not determine a homography");
  }
  Eigen::VectorXd g = svd.matrixV().col(8);
  Mat3 h;
  h << g(0), g(1), g(2), g(3), g(4), g(5), g(6), g(7), g(8);

  if (opts.normalize_points) {
    h = t_tgt.inverse() * h * t_src;
  }
  return Homography(h).normalized();
}

// Four-point offsets of the displaced corners relative to the reference
// corners, same order as CornerArray.
struct FourPointHomography {
  std::array<Vec2, 4> deltas;

  static FourPointHomography zero() {
    return FourPointHomography{{Vec2::Zero(), Vec2::Zero(), Vec2::Zero(),
                                Vec2::Zero()}};
  }

  double max_norm() const {
    double m = 0.0;
    for (const Vec2& d : deltas) m = std::max(m, d.norm());
    return m;
  }
};

// Builds the matrix form from corner offsets: G maps each displaced corner
// (corner + delta) onto its reference corner.
inline Homography four_point_to_matrix(const FourPointHomography& fp,
                                       const CornerArray& corners) {
  CorrespondenceSet corr;
  corr.reserve(4);
  for (int i = 0; i < 4; ++i) {
    corr.push_back({corners[i], corners[i] + fp.deltas[i]});
  }
  return solve_dlt(corr);
}

// Inverse of four_point_to_matrix: recovers the corner offsets by sending the
// reference corners through the inverse matrix.
inline FourPointHomography matrix_to_four_point(const Homography& g,
                                                const CornerArray& corners) {
  Homography g_inv = invert(g);
  FourPointHomography fp;
  for (int i = 0; i < 4; ++i) {
    fp.deltas[i] = warp_point(g_inv, corners[i]) - corners[i];
  }
  return fp;
}

// Pinhole intrinsics. Upper-triangular with unit (2,2) entry.
class CameraIntrinsics {
 public:
  CameraIntrinsics(double fx, double fy, double cx, double cy,
                   double skew = 0.0) {
    k_ << fx, skew, cx, 0, fy, cy, 0, 0, 1;
    validate();
  }

  explicit CameraIntrinsics(const Mat3& k) : k_(k) { validate(); }

  const Mat3& matrix() const noexcept { return k_; }

 private:
  void validate() const {
    double scale = k_.norm();
    if (std::abs(k_(1, 0)) > 1e-12 * scale ||
        std::abs(k_(2, 0)) > 1e-12 * scale ||
        std::abs(k_(2, 1)) > 1e-12 * scale ||
        std::abs(k_(2, 2) - 1.0) > 1e-12) {
      throw Error(Errc::InvalidArgument,
                  "intrinsics must be upper-triangular with unit (2,2)");
    }
    if (std::abs(k_(0, 0) * k_(1, 1)) <= 1e-15 * scale * scale) {
      throw Error(Errc::SingularIntrinsics, "focal lengths must be nonzero");
    }
  }

  Mat3 k_;
};

// Conjugates a projective homography by the intrinsics: K^-1 * G * K. The
// result operates on normalized (euclidean) image coordinates.
inline Homography to_euclidean(const Homography& g,
                               const CameraIntrinsics& k) {
  const Mat3& km = k.matrix();
  if (std::abs(km.determinant()) <= 1e-15 * std::pow(km.norm(), 3)) {
    throw Error(Errc::SingularIntrinsics, "intrinsics are singular");
  }
  return Homography(Mat3(km.inverse() * g.matrix() * km));
}

}  // namespace homsynth

#endif  // HOMSYNTH_HOMOGRAPHY_HPP

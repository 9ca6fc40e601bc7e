#ifndef HOMSYNTH_FEATURES_HPP
#define HOMSYNTH_FEATURES_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "homsynth/homography.hpp"
#include "homsynth/image_ops.hpp"

namespace homsynth {

struct CornerDetectionParams {
  int max_corners = 200;
  // Keep responses above quality * (strongest response).
  double quality = 0.01;
  // Greedy spacing between accepted corners, in pixels.
  double min_distance = 8.0;
};

namespace detail {

// Grayscale image as doubles for gradient work.
inline std::vector<double> to_double_gray(const ImageBuffer& img) {
  ImageBuffer gray = img.channels() == 1 ? img : to_grayscale(img);
  std::vector<double> out(gray.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(gray.data()[i]);
  }
  return out;
}

// Smallest eigenvalue of the 2x2 structure tensor.
inline double min_eigenvalue(double sxx, double sxy, double syy) {
  double tr = 0.5 * (sxx + syy);
  double det = sxx * syy - sxy * sxy;
  double disc = std::sqrt(std::max(0.0, tr * tr - det));
  return tr - disc;
}

// Offset of a 1D parabola peak through (-1, ym), (0, y0), (1, yp),
// clamped to [-0.5, 0.5]; 0 when the points do not form a proper peak.
inline double parabola_peak_offset(double ym, double y0, double yp) {
  double denom = ym - 2.0 * y0 + yp;
  if (denom >= -1e-12) return 0.0;  // flat or upward-curved
  double off = 0.5 * (ym - yp) / denom;
  return std::clamp(off, -0.5, 0.5);
}

}  // namespace detail

// Minimum-eigenvalue corner detector (Sobel gradients, 3x3 structure-tensor
// window, 3x3 non-maximum suppression, greedy spacing, per-axis parabolic
// sub-pixel refinement). Returns pixel-center coordinates ordered by
// decreasing corner response. An untextured image yields no corners.
inline std::vector<Vec2> detect_corners(const ImageBuffer& img,
                                        const CornerDetectionParams& params = {}) {
  if (img.empty()) throw Error(Errc::EmptyInput, "empty image");
  if (params.max_corners < 1 || params.quality <= 0.0 ||
      params.quality > 1.0 || params.min_distance < 0.0) {
    throw Error(Errc::InvalidArgument, "bad corner detector parameters");
  }
  const int h = img.height(), w = img.width();
  if (h < 5 || w < 5) return {};
  std::vector<double> gray = detail::to_double_gray(img);
  auto g = [&](int r, int c) -> double {
    return gray[static_cast<std::size_t>(r) * w + c];
  };

  // Sobel gradients (interior only).
  std::vector<double> ix(gray.size(), 0.0), iy(gray.size(), 0.0);
  for (int r = 1; r < h - 1; ++r) {
    for (int c = 1; c < w - 1; ++c) {
      std::size_t i = static_cast<std::size_t>(r) * w + c;
      ix[i] = (g(r - 1, c + 1) + 2.0 * g(r, c + 1) + g(r + 1, c + 1)) -
              (g(r - 1, c - 1) + 2.0 * g(r, c - 1) + g(r + 1, c - 1));
      iy[i] = (g(r + 1, c - 1) + 2.0 * g(r + 1, c) + g(r + 1, c + 1)) -
              (g(r - 1, c - 1) + 2.0 * g(r - 1, c) + g(r - 1, c + 1));
    }
  }

  // Structure tensor over a 3x3 window, response = smallest eigenvalue.
  std::vector<double> response(gray.size(), 0.0);
  double max_response = 0.0;
  for (int r = 2; r < h - 2; ++r) {
    for (int c = 2; c < w - 2; ++c) {
      double sxx = 0.0, sxy = 0.0, syy = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          std::size_t i = static_cast<std::size_t>(r + dr) * w + (c + dc);
          sxx += ix[i] * ix[i];
          sxy += ix[i] * iy[i];
          syy += iy[i] * iy[i];
        }
      }
      double resp = detail::min_eigenvalue(sxx, sxy, syy);
      response[static_cast<std::size_t>(r) * w + c] = resp;
      max_response = std::max(max_response, resp);
    }
  }
  if (max_response <= 1e-9) return {};  // featureless image

  // Non-maximum suppression over 3x3 with first-of-plateau tie breaking.
  const double threshold = params.quality * max_response;
  struct Candidate {
    double resp;
    int r, c;
  };
  std::vector<Candidate> candidates;
  auto resp_at = [&](int r, int c) -> double {
    return response[static_cast<std::size_t>(r) * w + c];
  };
  for (int r = 2; r < h - 2; ++r) {
    for (int c = 2; c < w - 2; ++c) {
      double v = resp_at(r, c);
      if (v < threshold) continue;
      bool keep = true;
      for (int dr = -1; dr <= 1 && keep; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          double nv = resp_at(r + dr, c + dc);
          bool earlier = dr < 0 || (dr == 0 && dc < 0);
          if (nv > v || (earlier && nv == v)) {
            keep = false;
            break;
          }
        }
      }
      if (keep) candidates.push_back({v, r, c});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.resp != b.resp) return a.resp > b.resp;
              if (a.r != b.r) return a.r < b.r;
              return a.c < b.c;
            });

  std::vector<Vec2> corners;
  std::vector<std::pair<int, int>> accepted;
  const double min_dist2 = params.min_distance * params.min_distance;
  for (const Candidate& cand : candidates) {
    if (static_cast<int>(corners.size()) >= params.max_corners) break;
    bool spaced = true;
    for (const auto& [ar, ac] : accepted) {
      double dr = cand.r - ar, dc = cand.c - ac;
      if (dr * dr + dc * dc < min_dist2) {
        spaced = false;
        break;
      }
    }
    if (!spaced) continue;
    accepted.push_back({cand.r, cand.c});
    double off_x = detail::parabola_peak_offset(
        resp_at(cand.r, cand.c - 1), cand.resp, resp_at(cand.r, cand.c + 1));
    double off_y = detail::parabola_peak_offset(
        resp_at(cand.r - 1, cand.c), cand.resp, resp_at(cand.r + 1, cand.c));
    corners.push_back(Vec2(cand.c + 0.5 + off_x, cand.r + 0.5 + off_y));
  }
  return corners;
}

struct MatchingParams {
  int search_radius = 16;
  int patch_radius = 7;
  double min_zncc = 0.8;
};

// Zero-normalized cross-correlation template matching: for every corner of
// img_a, searches an integer displacement window in img_b, keeps the best
// displacement when its ZNCC clears min_zncc, and refines it with per-axis
// parabolic interpolation of the score surface. The correspondence pairs
// (target = corner in img_a, source = matched point in img_b) feed the
// homography solvers, which map source points onto target points.
inline CorrespondenceSet match_correspondences(const ImageBuffer& img_a,
                                               const ImageBuffer& img_b,
                                               const std::vector<Vec2>& corners,
                                               const MatchingParams& params = {}) {
  if (img_a.empty() || img_b.empty()) {
    throw Error(Errc::EmptyInput, "empty image");
  }
  if (params.search_radius < 1 || params.patch_radius < 1 ||
      params.min_zncc <= 0.0 || params.min_zncc > 1.0) {
    throw Error(Errc::InvalidArgument, "bad matching parameters");
  }
  const int ha = img_a.height(), wa = img_a.width();
  const int hb = img_b.height(), wb = img_b.width();
  std::vector<double> ga = detail::to_double_gray(img_a);
  std::vector<double> gb = detail::to_double_gray(img_b);
  const int pr = params.patch_radius;
  const int sr = params.search_radius;
  const int patch_n = (2 * pr + 1) * (2 * pr + 1);
  const int grid = 2 * sr + 1;

  std::vector<double> patch(patch_n);
  std::vector<double> scores(static_cast<std::size_t>(grid) * grid);
  CorrespondenceSet matches;

  for (const Vec2& corner : corners) {
    const int cc = static_cast<int>(std::lround(corner.x() - 0.5));
    const int cr = static_cast<int>(std::lround(corner.y() - 0.5));
    if (cr - pr < 0 || cr + pr >= ha || cc - pr < 0 || cc + pr >= wa) continue;

    // Template statistics.
    double mean_a = 0.0;
    for (int dr = -pr; dr <= pr; ++dr) {
      for (int dc = -pr; dc <= pr; ++dc) {
        double v = ga[static_cast<std::size_t>(cr + dr) * wa + (cc + dc)];
        patch[(dr + pr) * (2 * pr + 1) + (dc + pr)] = v;
        mean_a += v;
      }
    }
    mean_a /= patch_n;
    double var_a = 0.0;
    for (double& v : patch) {
      v -= mean_a;
      var_a += v * v;
    }
    if (var_a <= 1e-9) continue;  // flat template cannot be localized
    const double norm_a = std::sqrt(var_a);

    std::fill(scores.begin(), scores.end(), -2.0);
    double best = -2.0;
    int best_dr = 0, best_dc = 0;
    for (int dr = -sr; dr <= sr; ++dr) {
      const int br = cr + dr;
      if (br - pr < 0 || br + pr >= hb) continue;
      for (int dc = -sr; dc <= sr; ++dc) {
        const int bc = cc + dc;
        if (bc - pr < 0 || bc + pr >= wb) continue;
        double mean_b = 0.0;
        for (int pr_i = -pr; pr_i <= pr; ++pr_i) {
          for (int pc_i = -pr; pc_i <= pr; ++pc_i) {
            mean_b += gb[static_cast<std::size_t>(br + pr_i) * wb + (bc + pc_i)];
          }
        }
        mean_b /= patch_n;
        double dot = 0.0, var_b = 0.0;
        for (int pr_i = -pr; pr_i <= pr; ++pr_i) {
          for (int pc_i = -pr; pc_i <= pr; ++pc_i) {
            double v =
                gb[static_cast<std::size_t>(br + pr_i) * wb + (bc + pc_i)] -
                mean_b;
            dot += v * patch[(pr_i + pr) * (2 * pr + 1) + (pc_i + pr)];
            var_b += v * v;
          }
        }
        if (var_b <= 1e-9) continue;
        double zncc = dot / (norm_a * std::sqrt(var_b));
        scores[static_cast<std::size_t>(dr + sr) * grid + (dc + sr)] = zncc;
        if (zncc > best) {
          best = zncc;
          best_dr = dr;
          best_dc = dc;
        }
      }
    }
    if (best < params.min_zncc) continue;

    // Parabolic refinement on the score surface when neighbors exist.
    auto score_at = [&](int dr, int dc) -> double {
      if (std::abs(dr) > sr || std::abs(dc) > sr) return -2.0;
      return scores[static_cast<std::size_t>(dr + sr) * grid + (dc + sr)];
    };
    double off_x = 0.0, off_y = 0.0;
    double left = score_at(best_dr, best_dc - 1);
    double right = score_at(best_dr, best_dc + 1);
    double up = score_at(best_dr - 1, best_dc);
    double down = score_at(best_dr + 1, best_dc);
    if (left > -2.0 && right > -2.0) {
      off_x = detail::parabola_peak_offset(left, best, right);
    }
    if (up > -2.0 && down > -2.0) {
      off_y = detail::parabola_peak_offset(up, best, down);
    }
    // The measured displacement applies to the corner's true (sub-pixel)
    // position, so exact integer shifts survive verbatim.
    Vec2 displacement(best_dc + off_x, best_dr + off_y);
    matches.push_back({corner, corner + displacement});
  }
  return matches;
}

}  // namespace homsynth

#endif  // HOMSYNTH_FEATURES_HPP

#ifndef HOMSYNTH_RANSAC_HPP
#define HOMSYNTH_RANSAC_HPP

#include <array>
#include <cmath>
#include <vector>

#include "homsynth/homography.hpp"
#include "homsynth/random.hpp"

namespace homsynth {

struct RansacConfig {
  int iterations = 1000;
  // Symmetric transfer error below which a correspondence is an inlier.
  double inlier_threshold = 3.0;
  int min_inliers = 8;
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography homography;
  std::vector<bool> inlier_mask;
  int inlier_count = 0;
};

namespace detail {

// sin of the angle at a between (b - a) and (c - a) below tol means the three
// points are (nearly) collinear.
inline bool three_collinear(const Vec2& a, const Vec2& b, const Vec2& c,
                            double tol = 1e-9) {
  Vec2 ab = b - a;
  Vec2 ac = c - a;
  double cross = ab.x() * ac.y() - ab.y() * ac.x();
  double scale = ab.norm() * ac.norm();
  return scale <= tol || std::abs(cross) <= tol * scale;
}

inline bool sample_degenerate(const CorrespondenceSet& corr,
                              const std::array<int, 4>& idx) {
  for (int skip = 0; skip < 4; ++skip) {
    std::array<const Correspondence*, 3> tri;
    int k = 0;
    for (int i = 0; i < 4; ++i) {
      if (i != skip) tri[k++] = &corr[idx[i]];
    }
    if (three_collinear(tri[0]->source, tri[1]->source, tri[2]->source) ||
        three_collinear(tri[0]->target, tri[1]->target, tri[2]->target)) {
      return true;
    }
  }
  return false;
}

// Symmetric transfer error: mean of the forward residual |G(source) - target|
// and the backward residual |G^-1(target) - source|. Points pushed to the
// horizon count as infinitely wrong.
inline double symmetric_transfer_error(const Homography& g,
                                       const Homography& g_inv,
                                       const Correspondence& c) {
  std::optional<Vec2> fwd = try_warp_point(g, c.source);
  std::optional<Vec2> bwd = try_warp_point(g_inv, c.target);
  if (!fwd || !bwd) return std::numeric_limits<double>::infinity();
  return 0.5 * ((*fwd - c.target).norm() + (*bwd - c.source).norm());
}

}  // namespace detail

// Robust homography estimation. Each iteration solves an exact 4-point
// model from a random minimal sample (redrawn up to 10 times while 3 sampled
// points are collinear in either image), scores it by symmetric transfer
// error, and keeps the model with the most inliers (earliest iteration wins
// ties). The best minimal model is then refit on its inliers with the
// preconditioned least-squares solver; the refit is kept when it explains at
// least as many correspondences.
inline RansacResult ransac_homography(const CorrespondenceSet& corr,
                                      const RansacConfig& cfg = {}) {
  const int n = static_cast<int>(corr.size());
  if (n < 4) throw Error(Errc::TooFewPoints, "need at least 4 correspondences");
  if (cfg.iterations < 1 || cfg.inlier_threshold <= 0.0 ||
      cfg.min_inliers < 4) {
    throw Error(Errc::InvalidArgument, "bad estimator configuration");
  }
  RandomStream rng(cfg.seed);

  auto count_inliers = [&](const Homography& g, std::vector<bool>& mask) {
    Homography g_inv = invert(g);
    int count = 0;
    mask.assign(corr.size(), false);
    for (std::size_t i = 0; i < corr.size(); ++i) {
      if (detail::symmetric_transfer_error(g, g_inv, corr[i]) <=
          cfg.inlier_threshold) {
        mask[i] = true;
        ++count;
      }
    }
    return count;
  };

  bool have_best = false;
  Homography best_model;
  int best_count = 0;
  std::vector<bool> mask;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    // Minimal sample: 4 distinct indices, redrawn while degenerate.
    std::array<int, 4> idx{};
    bool usable = false;
    for (int attempt = 0; attempt < 10 && !usable; ++attempt) {
      for (int k = 0; k < 4; ++k) {
        for (;;) {
          int candidate = static_cast<int>(rng.uniform_int(0, n - 1));
          bool dup = false;
          for (int j = 0; j < k; ++j) dup |= (idx[j] == candidate);
          if (!dup) {
            idx[k] = candidate;
            break;
          }
        }
      }
      usable = !detail::sample_degenerate(corr, idx);
    }
    if (!usable) continue;

    Homography model;
    try {
      model = solve_dlt({corr[idx[0]], corr[idx[1]], corr[idx[2]],
                         corr[idx[3]]});
    } catch (const Error& e) {
      if (e.code() == Errc::DegenerateConfiguration) continue;
      throw;
    }
    int count;
    try {
      count = count_inliers(model, mask);
    } catch (const Error& e) {
      if (e.code() == Errc::SingularHomography) continue;
      throw;
    }
    if (count > best_count) {
      best_count = count;
      best_model = model;
      have_best = true;
    }
  }

  if (!have_best || best_count < 4 || best_count < cfg.min_inliers) {
    throw Error(Errc::NoConsensus, "no model explains enough correspondences");
  }

  std::vector<bool> best_mask;
  count_inliers(best_model, best_mask);

  // Least-squares refinement on the consensus set.
  CorrespondenceSet inliers;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    if (best_mask[i]) inliers.push_back(corr[i]);
  }
  try {
    Homography refit = solve_dlt(inliers, {true});
    std::vector<bool> refit_mask;
    int refit_count = count_inliers(refit, refit_mask);
    if (refit_count >= best_count) {
      best_model = refit;
      best_count = refit_count;
      best_mask = std::move(refit_mask);
    }
  } catch (const Error&) {
    // Keep the minimal model when refinement fails.
  }

  if (best_count < cfg.min_inliers) {
    throw Error(Errc::NoConsensus, "no model explains enough correspondences");
  }
  return RansacResult{best_model, best_mask, best_count};
}

}  // namespace homsynth

#endif  // HOMSYNTH_RANSAC_HPP

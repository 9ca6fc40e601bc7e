#include "homsynth/ransac.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "test_support.hpp"

using namespace homsynth;
using testsupport::random_homography;

namespace {

// Exact correspondences target = G(source) on random source points.
CorrespondenceSet exact_correspondences(const Homography& g, int n,
                                        RandomStream& rng) {
  double m[3][3];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m[r][c] = g.matrix()(r, c);
  }
  CorrespondenceSet corr;
  for (int i = 0; i < n; ++i) {
    Vec2 s(rng.uniform_real(20.0, 380.0), rng.uniform_real(20.0, 280.0));
    auto t = testsupport::reference_project(m, s.x(), s.y());
    corr.push_back({Vec2(t[0], t[1]), s});
  }
  return corr;
}

void append_outliers(CorrespondenceSet& corr, int n, RandomStream& rng) {
  for (int i = 0; i < n; ++i) {
    corr.push_back({Vec2(rng.uniform_real(0.0, 400.0),
                         rng.uniform_real(0.0, 300.0)),
                    Vec2(rng.uniform_real(0.0, 400.0),
                         rng.uniform_real(0.0, 300.0))});
  }
}

double corner_error(const Homography& a, const Homography& b) {
  double worst = 0.0;
  for (const Vec2& c : image_corners(300, 400)) {
    worst = std::max(worst, (warp_point(a, c) - warp_point(b, c)).norm());
  }
  return worst;
}

}  // namespace

TEST_CASE("four exact correspondences are recovered verbatim") {
  RandomStream rng(51);
  Homography truth = random_homography(rng);
  CorrespondenceSet corr = exact_correspondences(truth, 4, rng);
  RansacConfig cfg;
  cfg.min_inliers = 4;
  cfg.iterations = 50;
  RansacResult res = ransac_homography(corr, cfg);
  REQUIRE(res.inlier_count == 4);
  for (bool b : res.inlier_mask) REQUIRE(b);
  REQUIRE(normalized_distance(res.homography, truth) < 1e-9);
}

TEST_CASE("forty percent outliers are rejected exactly") {
  RandomStream rng(11);
  Homography truth = random_homography(rng);
  CorrespondenceSet corr = exact_correspondences(truth, 100, rng);
  append_outliers(corr, 40, rng);
  RansacConfig cfg;
  cfg.iterations = 500;
  cfg.inlier_threshold = 2.0;
  cfg.seed = 11;
  RansacResult res = ransac_homography(corr, cfg);
  REQUIRE(res.inlier_count == 100);
  for (int i = 0; i < 100; ++i) REQUIRE(res.inlier_mask[i]);
  for (int i = 100; i < 140; ++i) REQUIRE_FALSE(res.inlier_mask[i]);
  REQUIRE(corner_error(res.homography, truth) < 0.5);
}

TEST_CASE("estimation is deterministic in the seed") {
  RandomStream rng(13);
  Homography truth = random_homography(rng);
  CorrespondenceSet corr = exact_correspondences(truth, 60, rng);
  append_outliers(corr, 20, rng);
  RansacConfig cfg;
  cfg.seed = 99;
  RansacResult a = ransac_homography(corr, cfg);
  RansacResult b = ransac_homography(corr, cfg);
  REQUIRE(a.inlier_count == b.inlier_count);
  REQUIRE(a.homography.matrix() == b.homography.matrix());
  REQUIRE(a.inlier_mask == b.inlier_mask);
}

TEST_CASE("outlier-free input matches the least-squares solution") {
  RandomStream rng(17);
  Homography truth = random_homography(rng);
  CorrespondenceSet corr = exact_correspondences(truth, 30, rng);
  RansacConfig cfg;
  cfg.iterations = 100;
  RansacResult res = ransac_homography(corr, cfg);
  REQUIRE(res.inlier_count == 30);
  Homography direct = solve_dlt(corr, {true});
  REQUIRE(normalized_distance(res.homography, direct) < 1e-9);
}

TEST_CASE("adding exact inliers never shrinks the consensus") {
  RandomStream rng(23);
  Homography truth = random_homography(rng);
  CorrespondenceSet corr = exact_correspondences(truth, 50, rng);
  append_outliers(corr, 20, rng);
  RansacConfig cfg;
  cfg.seed = 5;
  RansacResult before = ransac_homography(corr, cfg);
  REQUIRE(before.inlier_count == 50);
  CorrespondenceSet more = corr;
  RandomStream rng2(24);
  CorrespondenceSet extra = exact_correspondences(truth, 25, rng2);
  more.insert(more.end(), extra.begin(), extra.end());
  RansacResult after = ransac_homography(more, cfg);
  REQUIRE(after.inlier_count >= before.inlier_count);
  REQUIRE(after.inlier_count == 75);
}

TEST_CASE("every masked inlier satisfies the threshold under the model") {
  RandomStream rng(29);
  Homography truth = random_homography(rng);
  CorrespondenceSet corr = exact_correspondences(truth, 40, rng);
  // Perturb half the targets by up to 2px, add garbage.
  for (int i = 0; i < 20; ++i) {
    corr[i].target += Vec2(rng.uniform_real(-2.0, 2.0),
                           rng.uniform_real(-2.0, 2.0));
  }
  append_outliers(corr, 15, rng);
  RansacConfig cfg;
  cfg.inlier_threshold = 3.0;
  RansacResult res = ransac_homography(corr, cfg);
  // Verify the mask against a raw-arithmetic symmetric error.
  double m[3][3], mi[3][3];
  Mat3 inv = res.homography.matrix().inverse();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      m[r][c] = res.homography.matrix()(r, c);
      mi[r][c] = inv(r, c);
    }
  }
  for (std::size_t i = 0; i < corr.size(); ++i) {
    auto fwd = testsupport::reference_project(m, corr[i].source.x(),
                                              corr[i].source.y());
    auto bwd = testsupport::reference_project(mi, corr[i].target.x(),
                                              corr[i].target.y());
    double err = 0.5 * (std::hypot(fwd[0] - corr[i].target.x(),
                                   fwd[1] - corr[i].target.y()) +
                        std::hypot(bwd[0] - corr[i].source.x(),
                                   bwd[1] - corr[i].source.y()));
    if (res.inlier_mask[i]) {
      REQUIRE(err <= cfg.inlier_threshold + 1e-9);
    } else {
      REQUIRE(err > cfg.inlier_threshold - 1e-9);
    }
  }
}

TEST_CASE("pure noise reaches no consensus") {
  RandomStream rng(31);
  CorrespondenceSet corr;
  append_outliers(corr, 30, rng);
  RansacConfig cfg;
  cfg.inlier_threshold = 0.5;
  cfg.min_inliers = 8;
  REQUIRE_THROWS_MATCHES(ransac_homography(corr, cfg), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == Errc::NoConsensus;
                         }));
}

TEST_CASE("too few correspondences and bad configs are rejected") {
  CorrespondenceSet three = {{Vec2(0, 0), Vec2(0, 0)},
                             {Vec2(1, 0), Vec2(1, 0)},
                             {Vec2(0, 1), Vec2(0, 1)}};
  REQUIRE_THROWS_MATCHES(ransac_homography(three), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == Errc::TooFewPoints;
                         }));
  CorrespondenceSet four = {{Vec2(0, 0), Vec2(0, 0)},
                            {Vec2(1, 0), Vec2(1, 0)},
                            {Vec2(0, 1), Vec2(0, 1)},
                            {Vec2(1, 1), Vec2(1, 1)}};
  RansacConfig bad;
  bad.min_inliers = 3;
  REQUIRE_THROWS_AS(ransac_homography(four, bad), Error);
  bad = {};
  bad.iterations = 0;
  REQUIRE_THROWS_AS(ransac_homography(four, bad), Error);
}

TEST_CASE("collinear-heavy correspondence sets still estimate when possible") {
  // 30 points on a line plus 10 in general position, all following the same
  // translation: the sampler must dodge collinear quadruples and converge.
  CorrespondenceSet corr;
  for (int i = 0; i < 30; ++i) {
    Vec2 s(10.0 + 5.0 * i, 50.0);
    corr.push_back({s + Vec2(3.0, -2.0), s});
  }
  RandomStream rng(37);
  for (int i = 0; i < 10; ++i) {
    Vec2 s(rng.uniform_real(0.0, 200.0), rng.uniform_real(60.0, 200.0));
    corr.push_back({s + Vec2(3.0, -2.0), s});
  }
  RansacConfig cfg;
  cfg.iterations = 300;
  RansacResult res = ransac_homography(corr, cfg);
  REQUIRE(res.inlier_count == 40);
  REQUIRE(corner_error(res.homography, Homography::translation(3.0, -2.0)) <
          1e-6);
}

#include "homsynth/features.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "test_support.hpp"

using namespace homsynth;
using testsupport::make_checkerboard;
using testsupport::make_texture;

TEST_CASE("featureless images yield no corners") {
  REQUIRE(detect_corners(ImageBuffer(64, 64, 1, 128)).empty());
  // A pure horizontal gradient has edges but no corners; the minimum
  // eigenvalue stays near zero everywhere.
  ImageBuffer ramp(64, 64, 1);
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      ramp.at(r, c) = static_cast<std::uint8_t>(c * 4);
    }
  }
  CornerDetectionParams params;
  params.quality = 0.2;
  std::vector<Vec2> corners = detect_corners(ramp, params);
  // Any responses can only come from the image rim; none from the interior.
  for (const Vec2& c : corners) {
    bool interior = c.x() > 8 && c.x() < 56 && c.y() > 8 && c.y() < 56;
    REQUIRE_FALSE(interior);
  }
}

TEST_CASE("checkerboard crossings are localized within half a pixel") {
  const int square = 20;
  ImageBuffer img = make_checkerboard(160, 160, square);
  CornerDetectionParams params;
  params.max_corners = 200;
  params.quality = 0.05;
  params.min_distance = 6.0;
  std::vector<Vec2> corners = detect_corners(img, params);
  // Interior lattice crossings: 7x7 grid at multiples of 20.
  int found = 0;
  for (int gy = 1; gy <= 7; ++gy) {
    for (int gx = 1; gx <= 7; ++gx) {
      Vec2 truth(gx * square, gy * square);
      double best = 1e9;
      for (const Vec2& c : corners) best = std::min(best, (c - truth).norm());
      if (best <= 0.5) ++found;
    }
  }
  REQUIRE(found == 49);
}

TEST_CASE("max_corners one returns the single strongest corner") {
  ImageBuffer img = make_checkerboard(100, 100, 25);
  CornerDetectionParams params;
  params.max_corners = 1;
  std::vector<Vec2> corners = detect_corners(img, params);
  REQUIRE(corners.size() == 1);
}

TEST_CASE("accepted corners respect the spacing radius") {
  ImageBuffer img = make_texture(120, 120, 3, 1, 2);
  CornerDetectionParams params;
  params.max_corners = 50;
  params.min_distance = 12.0;
  params.quality = 0.01;
  std::vector<Vec2> corners = detect_corners(img, params);
  REQUIRE(corners.size() >= 5);
  for (std::size_t i = 0; i < corners.size(); ++i) {
    for (std::size_t j = i + 1; j < corners.size(); ++j) {
      // Spacing is enforced on the integer grid before refinement.
      REQUIRE((corners[i] - corners[j]).norm() > params.min_distance - 1.0);
    }
  }
}

TEST_CASE("matching an image against itself gives zero displacement") {
  ImageBuffer img = make_texture(100, 140, 9);
  std::vector<Vec2> corners = detect_corners(img);
  REQUIRE(corners.size() >= 10);
  CorrespondenceSet matches = match_correspondences(img, img, corners);
  REQUIRE(matches.size() >= corners.size() / 2);
  for (const Correspondence& m : matches) {
    Vec2 d = m.source - m.target;
    // The integer search lands on the exact peak; parabolic refinement can
    // pull the vertex slightly off-center when neighbor scores differ.
    REQUIRE(std::lround(d.x()) == 0);
    REQUIRE(std::lround(d.y()) == 0);
    REQUIRE(d.norm() < 0.25);
  }
}

TEST_CASE("integer translations are matched exactly") {
  // img_b's window sits 5 px left of img_a's, so shared content appears
  // 5 px further right in img_b.
  ImageBuffer big = make_texture(120, 180, 31);
  ImageBuffer img_a = crop_image(big, rect_polygon(10, 10, 140, 100));
  ImageBuffer img_b = crop_image(big, rect_polygon(5, 10, 140, 100));
  std::vector<Vec2> corners = detect_corners(img_a);
  REQUIRE(corners.size() >= 8);
  CorrespondenceSet matches = match_correspondences(img_a, img_b, corners);
  REQUIRE(matches.size() >= corners.size() * 6 / 10);
  for (const Correspondence& m : matches) {
    Vec2 d = m.source - m.target;
    REQUIRE(std::lround(d.x()) == 5);
    REQUIRE(std::lround(d.y()) == 0);
    REQUIRE((d - Vec2(5.0, 0.0)).norm() < 0.3);
  }
}

TEST_CASE("matches follow a mild homography within a pixel") {
  ImageBuffer img_a = make_texture(150, 200, 77);
  Mat3 m = Mat3::Identity();
  m(0, 2) = 6.0;
  m(1, 2) = -4.0;
  m(0, 0) = 1.03;
  m(1, 0) = 0.02;
  Homography g(m);
  ImageBuffer img_b = warp_image(img_a, g, 150, 200);
  std::vector<Vec2> corners = detect_corners(img_a);
  REQUIRE(corners.size() >= 20);
  CorrespondenceSet matches = match_correspondences(img_a, img_b, corners);
  REQUIRE(matches.size() >= 15);
  int good = 0;
  for (const Correspondence& match : matches) {
    Vec2 expected = warp_point(g, match.target);
    if ((match.source - expected).norm() <= 1.0) ++good;
  }
  REQUIRE(good * 10 >= static_cast<int>(matches.size()) * 8);
}

TEST_CASE("flat or out-of-frame regions produce no matches") {
  ImageBuffer img_a = make_checkerboard(80, 80, 10);
  ImageBuffer flat(80, 80, 1, 50);
  std::vector<Vec2> corners = detect_corners(img_a);
  REQUIRE_FALSE(corners.empty());
  REQUIRE(match_correspondences(img_a, flat, corners).empty());
  // Corners too close to the rim for a full patch are skipped quietly.
  std::vector<Vec2> rim = {Vec2(1.5, 1.5), Vec2(79.0, 40.0)};
  REQUIRE(match_correspondences(img_a, img_a, rim).empty());
}

TEST_CASE("parameter validation") {
  ImageBuffer img(32, 32, 1, 7);
  CornerDetectionParams bad;
  bad.quality = 0.0;
  REQUIRE_THROWS_AS(detect_corners(img, bad), Error);
  MatchingParams mp;
  mp.min_zncc = 1.5;
  REQUIRE_THROWS_AS(match_correspondences(img, img, {}, mp), Error);
  REQUIRE_THROWS_AS(detect_corners(ImageBuffer()), Error);
}

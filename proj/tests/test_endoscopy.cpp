#include "homsynth/endoscopy.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "test_support.hpp"

using namespace homsynth;
using testsupport::make_disk;

TEST_CASE("circle fit recovers an exact circle from 4 points") {
  // All four points lie at distance 5 from (2, 3).
  std::vector<Vec2> pts = {Vec2(7, 3), Vec2(-3, 3), Vec2(2, 8), Vec2(2, -2)};
  Circle c = fit_circle(pts);
  REQUIRE((c.center - Vec2(2, 3)).norm() < 1e-12);
  REQUIRE(std::abs(c.radius - 5.0) < 1e-12);
}

TEST_CASE("circle fit recovers the unit circle from 3 points") {
  std::vector<Vec2> pts = {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1)};
  Circle c = fit_circle(pts);
  REQUIRE(c.center.norm() < 1e-12);
  REQUIRE(std::abs(c.radius - 1.0) < 1e-12);
}

TEST_CASE("circle fit is exact on many noise-free samples") {
  RandomStream rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    Vec2 center(rng.uniform_real(-100, 100), rng.uniform_real(-100, 100));
    double radius = rng.uniform_real(5.0, 200.0);
    std::vector<Vec2> pts;
    for (int i = 0; i < 24; ++i) {
      double a = rng.uniform_real(0.0, 2.0 * M_PI);
      pts.push_back(center + radius * Vec2(std::cos(a), std::sin(a)));
    }
    Circle c = fit_circle(pts);
    REQUIRE((c.center - center).norm() < 1e-9);
    REQUIRE(std::abs(c.radius - radius) < 1e-9);
  }
}

TEST_CASE("noisy circle fit stays within half a pixel") {
  RandomStream rng(3);
  const Vec2 center(160.0, 120.0);
  const double radius = 100.0;
  std::vector<Vec2> pts;
  for (int i = 0; i < 200; ++i) {
    double a = rng.uniform_real(0.0, 2.0 * M_PI);
    double r = radius + rng.uniform_real(-1.0, 1.0);
    pts.push_back(center + r * Vec2(std::cos(a), std::sin(a)));
  }
  Circle c = fit_circle(pts);
  REQUIRE((c.center - center).norm() < 0.5);
  REQUIRE(std::abs(c.radius - radius) < 0.5);
}

TEST_CASE("circle fit is translation equivariant") {
  RandomStream rng(8);
  std::vector<Vec2> pts;
  for (int i = 0; i < 30; ++i) {
    double a = rng.uniform_real(0.0, 2.0 * M_PI);
    double r = 50.0 + rng.uniform_real(-0.5, 0.5);
    pts.push_back(Vec2(70, 80) + r * Vec2(std::cos(a), std::sin(a)));
  }
  Circle base = fit_circle(pts);
  Vec2 shift(13.25, -4.5);
  std::vector<Vec2> moved;
  for (const Vec2& p : pts) moved.push_back(p + shift);
  Circle shifted = fit_circle(moved);
  REQUIRE((shifted.center - (base.center + shift)).norm() < 1e-9);
  REQUIRE(std::abs(shifted.radius - base.radius) < 1e-9);
}

TEST_CASE("degenerate circle fits are rejected") {
  REQUIRE_THROWS_MATCHES(
      fit_circle({Vec2(0, 0), Vec2(1, 1)}), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == Errc::TooFewPoints; }));
  std::vector<Vec2> collinear;
  for (int i = 0; i < 10; ++i) collinear.push_back(Vec2(i, 2.0 * i + 1.0));
  REQUIRE_THROWS_MATCHES(fit_circle(collinear), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == Errc::DegenerateConfiguration;
                         }));
}

TEST_CASE("trimmed fit shrugs off a few gross outliers") {
  RandomStream rng(19);
  const Vec2 center(100.0, 90.0);
  const double radius = 70.0;
  std::vector<Vec2> pts;
  for (int i = 0; i < 60; ++i) {
    double a = rng.uniform_real(0.0, 2.0 * M_PI);
    double r = radius + rng.uniform_real(-0.5, 0.5);
    pts.push_back(center + r * Vec2(std::cos(a), std::sin(a)));
  }
  // Six points far inside the circle, as a specular blob would produce.
  for (int i = 0; i < 6; ++i) {
    pts.push_back(center + Vec2(rng.uniform_real(-15, 15),
                                rng.uniform_real(-15, 15)));
  }
  Circle plain = fit_circle(pts);
  Circle trimmed = fit_circle_trimmed(pts);
  REQUIRE((trimmed.center - center).norm() < 1.0);
  REQUIRE(std::abs(trimmed.radius - radius) < 1.0);
  REQUIRE(std::abs(trimmed.radius - radius) <
          std::abs(plain.radius - radius));
}

TEST_CASE("boundary sampling finds a synthetic scope edge") {
  ImageBuffer img = make_disk(240, 320, 160.0, 120.0, 100.0);
  std::vector<Vec2> pts = sample_boundary_points(img, 64);
  REQUIRE(pts.size() >= 60);
  int close = 0;
  for (const Vec2& p : pts) {
    double d = std::abs((p - Vec2(160.0, 120.0)).norm() - 100.0);
    if (d < 1.5) ++close;
  }
  REQUIRE(close >= static_cast<int>(pts.size()) - 2);
}

TEST_CASE("boundary sampling is deterministic per seed") {
  ImageBuffer img = make_disk(240, 320, 150.0, 130.0, 90.0);
  BoundaryParams params;
  std::vector<Vec2> a = sample_boundary_points(img, 48, params);
  std::vector<Vec2> b = sample_boundary_points(img, 48, params);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
  params.seed = 1;
  std::vector<Vec2> c = sample_boundary_points(img, 48, params);
  bool differs = c.size() != a.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i) {
    differs = (a[i] - c[i]).norm() > 0.0;
  }
  REQUIRE(differs);
}

TEST_CASE("a fully bright frame has no boundary") {
  ImageBuffer img(120, 160, 1, 200);
  REQUIRE_THROWS_MATCHES(sample_boundary_points(img, 32), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == Errc::NoBoundaryFound;
                         }));
}

TEST_CASE("a fully dark frame has no boundary") {
  ImageBuffer img(120, 160, 1, 3);
  REQUIRE_THROWS_AS(sample_boundary_points(img, 32), Error);
}

TEST_CASE("partial disks clipped by the frame still yield arc points") {
  // Circle sticking out of the top of the frame: rays toward the clipped
  // part exit the frame while bright and contribute nothing, the rest hit
  // the visible arc.
  ImageBuffer img = make_disk(240, 320, 160.0, 40.0, 90.0);
  std::vector<Vec2> pts = sample_boundary_points(img, 64);
  REQUIRE(pts.size() >= 20);
  REQUIRE(pts.size() <= 55);  // the clipped sector must drop some rays
  for (const Vec2& p : pts) {
    REQUIRE(p.x() >= 0.0);
    REQUIRE(p.x() <= 320.0);
    REQUIRE(p.y() >= 0.0);
    double d = std::abs((p - Vec2(160.0, 40.0)).norm() - 90.0);
    REQUIRE(d < 2.0);
  }
}

TEST_CASE("detection pipeline localizes the disk over many layouts") {
  RandomStream rng(40);
  for (int trial = 0; trial < 10; ++trial) {
    double cx = rng.uniform_real(130.0, 190.0);
    double cy = rng.uniform_real(95.0, 145.0);
    double radius = rng.uniform_real(70.0, 110.0);
    ImageBuffer img = make_disk(240, 320, cx, cy, radius);
    Circle c = detect_boundary_circle(img);
    REQUIRE((c.center - Vec2(cx, cy)).norm() < 2.0);
    REQUIRE(std::abs(c.radius - radius) < 2.0);
  }
}

TEST_CASE("bilateral filter smooths gradients but keeps strong edges") {
  // Step edge with mild noise: the filter must not blur across the step.
  ImageBuffer img(32, 32, 1);
  RandomStream rng(23);
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) {
      int base = c < 16 ? 40 : 200;
      img.at(r, c) = static_cast<std::uint8_t>(
          std::clamp<std::int64_t>(base + rng.uniform_int(-6, 6), 0, 255));
    }
  }
  ImageBuffer out = bilateral_filter(img, 5.0, 30.0, 7);
  double left = 0.0, right = 0.0;
  for (int r = 8; r < 24; ++r) {
    left += out.at(r, 14);
    right += out.at(r, 17);
  }
  left /= 16.0;
  right /= 16.0;
  REQUIRE(left < 60.0);
  REQUIRE(right > 180.0);
  // Noise inside each side must shrink relative to the input.
  auto column_spread = [](const ImageBuffer& im, int col) {
    double mean = 0.0, var = 0.0;
    for (int r = 4; r < 28; ++r) mean += im.at(r, col);
    mean /= 24.0;
    for (int r = 4; r < 28; ++r) {
      var += (im.at(r, col) - mean) * (im.at(r, col) - mean);
    }
    return std::sqrt(var / 24.0);
  };
  REQUIRE(column_spread(out, 8) < column_spread(img, 8));
}

TEST_CASE("circle crop of a centered circle is the centered window") {
  ImageBuffer img = testsupport::make_gradient(240, 320);
  // Circle centered exactly in the frame, small enough that the inscribed
  // square, not the frame, limits the window.
  Circle c{Vec2(160.0, 120.0), 80.0};
  ImageBuffer out = circle_crop(img, c, 60, 80);
  REQUIRE(out.height() == 60);
  REQUIRE(out.width() == 80);
  // Half-extents: k = (80/sqrt(2))/80 = 1/sqrt(2) -> half-width 56.6,
  // half-height 42.4; the window is [104, 216] x [78, 162].
  ImageBuffer expected = resize_image(
      crop_image(img, rect_polygon(104, 78, 112, 84)), 60, 80);
  REQUIRE(out == expected);
}

TEST_CASE("circle crop never includes pixels outside the circle") {
  ImageBuffer img = make_disk(240, 320, 160.0, 120.0, 90.0, 200, 0);
  ImageBuffer out = circle_crop(img, Circle{Vec2(160.0, 120.0), 90.0}, 60, 80);
  for (auto v : out.data()) REQUIRE(v >= 190);  // all samples stay interior
}

TEST_CASE("circle crop respects frame boundaries for off-center circles") {
  ImageBuffer img = testsupport::make_gradient(240, 320);
  ImageBuffer out = circle_crop(img, Circle{Vec2(10.0, 120.0), 200.0}, 60, 80);
  REQUIRE(out.height() == 60);
  REQUIRE(out.width() == 80);
}

TEST_CASE("degenerate circle crops are rejected") {
  ImageBuffer img = testsupport::make_gradient(100, 100);
  auto degenerate = Catch::Matchers::Predicate<Error>(
      [](const Error& e) { return e.code() == Errc::DegenerateCrop; });
  REQUIRE_THROWS_MATCHES(
      circle_crop(img, Circle{Vec2(-5.0, 50.0), 40.0}, 60, 80), Error,
      degenerate);
  REQUIRE_THROWS_MATCHES(
      circle_crop(img, Circle{Vec2(50.0, 50.0), 0.0}, 60, 80), Error,
      degenerate);
  // Center on the frame edge: no room on one side.
  REQUIRE_THROWS_MATCHES(
      circle_crop(img, Circle{Vec2(0.0, 50.0), 40.0}, 60, 80), Error,
      degenerate);
}

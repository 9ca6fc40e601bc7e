#ifndef HOMSYNTH_IMAGE_OPS_HPP
#define HOMSYNTH_IMAGE_OPS_HPP

#include <algorithm>
#include <cmath>

#include "homsynth/homography.hpp"
#include "homsynth/image.hpp"
#include "homsynth/polygon.hpp"

namespace homsynth {
namespace detail {

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

// Rounds half away from zero, then clamps to the 8-bit range.
inline std::uint8_t round_u8(double v) {
  return clamp_u8(static_cast<double>(std::lround(v)));
}

// Bilinear sample at pixel-grid position (gx, gy) = (x - 0.5, y - 0.5) for a
// continuous point (x, y). Neighbor indices clamp at the rim, replicating
// the border rows/columns within the half-pixel margin.
inline double bilinear_at(const ImageBuffer& img, double gx, double gy,
                          int ch) {
  double fx0 = std::floor(gx);
  double fy0 = std::floor(gy);
  double ax = gx - fx0;
  double ay = gy - fy0;
  int x0 = std::clamp(static_cast<int>(fx0), 0, img.width() - 1);
  int x1 = std::clamp(static_cast<int>(fx0) + 1, 0, img.width() - 1);
  int y0 = std::clamp(static_cast<int>(fy0), 0, img.height() - 1);
  int y1 = std::clamp(static_cast<int>(fy0) + 1, 0, img.height() - 1);
  double top = (1.0 - ax) * img.at(y0, x0, ch) + ax * img.at(y0, x1, ch);
  double bottom = (1.0 - ax) * img.at(y1, x0, ch) + ax * img.at(y1, x1, ch);
  return (1.0 - ay) * top + ay * bottom;
}

}  // namespace detail

// Warps img by g using inverse mapping: each output pixel center q is filled
// from the source point g^-1(q), so image content moves the way g moves
// points. Source points outside the closed image extent produce 0 (black)
// fill; points within the half-pixel rim replicate the border.
inline ImageBuffer warp_image(const ImageBuffer& img, const Homography& g,
                              int out_height, int out_width) {
  if (img.empty()) throw Error(Errc::EmptyInput, "cannot warp an empty image");
  Homography inv = invert(g);
  const Mat3& m = inv.matrix();
  ImageBuffer out(out_height, out_width, img.channels());
  const double w_extent = img.width();
  const double h_extent = img.height();
  const double w_eps = 1e-12 * inv.matrix().norm();

  for (int r = 0; r < out_height; ++r) {
    double y = r + 0.5;
    // Row-incremental homogeneous coordinates: advancing one column adds the
    // first matrix column.
    double sx = m(0, 0) * 0.5 + m(0, 1) * y + m(0, 2);
    double sy = m(1, 0) * 0.5 + m(1, 1) * y + m(1, 2);
    double sw = m(2, 0) * 0.5 + m(2, 1) * y + m(2, 2);
    for (int c = 0; c < out_width;
         ++c, sx += m(0, 0), sy += m(1, 0), sw += m(2, 0)) {
      if (std::abs(sw) <= w_eps) continue;  // horizon; leave fill value
      double px = sx / sw;
      double py = sy / sw;
      if (px < 0.0 || px > w_extent || py < 0.0 || py > h_extent) continue;
      for (int ch = 0; ch < img.channels(); ++ch) {
        out.at(r, c, ch) =
            detail::round_u8(detail::bilinear_at(img, px - 0.5, py - 0.5, ch));
      }
    }
  }
  return out;
}

namespace detail {

struct IntRect {
  int row, col, height, width;
};

// Interprets a polygon ring as an axis-aligned integer rectangle.
inline IntRect integer_rect(const Polygon& crop, double tol = 1e-9) {
  if (crop.vertices.size() != 4) {
    throw Error(Errc::NonRectangularCrop, "crop ring must have 4 vertices");
  }
  const Vec2& tl = crop.vertices[0];
  const Vec2& tr = crop.vertices[1];
  const Vec2& br = crop.vertices[2];
  const Vec2& bl = crop.vertices[3];
  bool axis_aligned = std::abs(tl.y() - tr.y()) <= tol &&
                      std::abs(bl.y() - br.y()) <= tol &&
                      std::abs(tl.x() - bl.x()) <= tol &&
                      std::abs(tr.x() - br.x()) <= tol;
  if (!axis_aligned) {
    throw Error(Errc::NonRectangularCrop, "crop must be axis-aligned");
  }
  auto to_int = [tol](double v, const char* what) {
    double r = std::round(v);
    if (std::abs(v - r) > tol) {
      throw Error(Errc::NonRectangularCrop,
                  std::string("crop ") + what + " must be integral");
    }
    return static_cast<int>(r);
  };
  IntRect rect{};
  rect.row = to_int(tl.y(), "top");
  rect.col = to_int(tl.x(), "left");
  rect.height = to_int(br.y(), "bottom") - rect.row;
  rect.width = to_int(br.x(), "right") - rect.col;
  if (rect.height <= 0 || rect.width <= 0) {
    throw Error(Errc::NonRectangularCrop, "crop must have positive extent");
  }
  return rect;
}

}  // namespace detail

// Extracts the axis-aligned integer rectangle described by the crop ring.
inline ImageBuffer crop_image(const ImageBuffer& img, const Polygon& crop) {
  if (img.empty()) throw Error(Errc::EmptyInput, "cannot crop an empty image");
  detail::IntRect rect = detail::integer_rect(crop);
  if (rect.row < 0 || rect.col < 0 || rect.row + rect.height > img.height() ||
      rect.col + rect.width > img.width()) {
    throw Error(Errc::CropOutOfBounds, "crop exceeds the image");
  }
  ImageBuffer out(rect.height, rect.width, img.channels());
  const int row_bytes = rect.width * img.channels();
  for (int r = 0; r < rect.height; ++r) {
    const std::uint8_t* src =
        img.data().data() +
        ((static_cast<std::size_t>(rect.row) + r) * img.width() + rect.col) *
            img.channels();
    std::copy_n(src, row_bytes, out.data().data() +
                                     static_cast<std::size_t>(r) * row_bytes);
  }
  return out;
}

// Bilinear resample to the requested shape, sampling at output pixel centers
// mapped into the input extent. Identity when the shape already matches.
inline ImageBuffer resize_image(const ImageBuffer& img, int out_height,
                                int out_width) {
  if (img.empty()) {
    throw Error(Errc::EmptyInput, "cannot resize an empty image");
  }
  if (out_height <= 0 || out_width <= 0) {
    throw Error(Errc::InvalidArgument, "resize shape must be positive");
  }
  if (out_height == img.height() && out_width == img.width()) return img;
  ImageBuffer out(out_height, out_width, img.channels());
  double scale_x = static_cast<double>(img.width()) / out_width;
  double scale_y = static_cast<double>(img.height()) / out_height;
  for (int r = 0; r < out_height; ++r) {
    double gy = (r + 0.5) * scale_y - 0.5;
    for (int c = 0; c < out_width; ++c) {
      double gx = (c + 0.5) * scale_x - 0.5;
      for (int ch = 0; ch < img.channels(); ++ch) {
        out.at(r, c, ch) = detail::round_u8(detail::bilinear_at(img, gx, gy, ch));
      }
    }
  }
  return out;
}

// Rec. 601 luma; returns the input unchanged when already single-channel.
inline ImageBuffer to_grayscale(const ImageBuffer& img) {
  if (img.empty()) throw Error(Errc::EmptyInput, "empty image");
  if (img.channels() == 1) return img;
  ImageBuffer out(img.height(), img.width(), 1);
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      double y = 0.299 * img.at(r, c, 0) + 0.587 * img.at(r, c, 1) +
                 0.114 * img.at(r, c, 2);
      out.at(r, c) = detail::round_u8(y);
    }
  }
  return out;
}

}  // namespace homsynth

#endif  // HOMSYNTH_IMAGE_OPS_HPP

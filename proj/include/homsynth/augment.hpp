#ifndef HOMSYNTH_AUGMENT_HPP
#define HOMSYNTH_AUGMENT_HPP

#include <cmath>
#include <string>
#include <vector>

#include "homsynth/image_ops.hpp"
#include "homsynth/random.hpp"

namespace homsynth {

// One photometric/geometric augmentation step. `amount` carries the
// kind-specific magnitude: brightness/contrast factor, blur sigma, fog
// density, or crop scale; flips and grayscale ignore it.
struct AugmentationOp {
  enum class Kind {
    HFlip,
    VFlip,
    Crop,
    Grayscale,
    Brightness,
    Contrast,
    GaussianBlur,
    Fog,
  };
  Kind kind = Kind::Grayscale;
  double amount = 0.0;
};

inline const char* augmentation_kind_name(AugmentationOp::Kind kind) {
  switch (kind) {
    case AugmentationOp::Kind::HFlip: return "hflip";
    case AugmentationOp::Kind::VFlip: return "vflip";
    case AugmentationOp::Kind::Crop: return "crop";
    case AugmentationOp::Kind::Grayscale: return "grayscale";
    case AugmentationOp::Kind::Brightness: return "brightness";
    case AugmentationOp::Kind::Contrast: return "contrast";
    case AugmentationOp::Kind::GaussianBlur: return "gaussian_blur";
    case AugmentationOp::Kind::Fog: return "fog";
  }
  return "unknown";
}

inline AugmentationOp::Kind augmentation_kind_from_name(
    const std::string& name) {
  using Kind = AugmentationOp::Kind;
  if (name == "hflip") return Kind::HFlip;
  if (name == "vflip") return Kind::VFlip;
  if (name == "crop") return Kind::Crop;
  if (name == "grayscale") return Kind::Grayscale;
  if (name == "brightness") return Kind::Brightness;
  if (name == "contrast") return Kind::Contrast;
  if (name == "gaussian_blur") return Kind::GaussianBlur;
  if (name == "fog") return Kind::Fog;
  throw Error(Errc::InvalidSpec, "unknown augmentation kind: " + name);
}

// A composite augmentation: ops applied in listed order. The seed drives
// every stochastic op (crop placement, fog field); both images of a training
// pair share one spec, so they receive pixelwise-identical treatment.
struct AugmentationSpec {
  std::vector<AugmentationOp> ops;
  std::uint64_t seed = 0;
};

namespace detail {

inline void validate_op(const AugmentationOp& op) {
  using Kind = AugmentationOp::Kind;
  switch (op.kind) {
    case Kind::Brightness:
    case Kind::Contrast:
      if (!(op.amount > 0.0)) {
        throw Error(Errc::InvalidSpec, "factor must be positive");
      }
      break;
    case Kind::GaussianBlur:
      if (op.amount < 0.0) {
        throw Error(Errc::InvalidSpec, "blur sigma must be nonnegative");
      }
      break;
    case Kind::Fog:
      if (op.amount < 0.0 || op.amount > 1.0) {
        throw Error(Errc::InvalidSpec, "fog density must be in [0, 1]");
      }
      break;
    case Kind::Crop:
      if (!(op.amount > 0.0) || op.amount > 1.0) {
        throw Error(Errc::InvalidSpec, "crop scale must be in (0, 1]");
      }
      break;
    default:
      break;
  }
}

inline ImageBuffer flip_horizontal(const ImageBuffer& img) {
  ImageBuffer out(img.height(), img.width(), img.channels());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        out.at(r, c, ch) = img.at(r, img.width() - 1 - c, ch);
      }
    }
  }
  return out;
}

inline ImageBuffer flip_vertical(const ImageBuffer& img) {
  ImageBuffer out(img.height(), img.width(), img.channels());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        out.at(r, c, ch) = img.at(img.height() - 1 - r, c, ch);
      }
    }
  }
  return out;
}

inline ImageBuffer scale_values(const ImageBuffer& img, double factor,
                                double pivot) {
  ImageBuffer out(img.height(), img.width(), img.channels());
  // 256-entry lookup, applied per sample.
  std::uint8_t lut[256];
  for (int v = 0; v < 256; ++v) {
    lut[v] = round_u8(pivot + factor * (v - pivot));
  }
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    out.data()[i] = lut[img.data()[i]];
  }
  return out;
}

// Replicate a single-channel image across three channels.
inline ImageBuffer splat_gray(const ImageBuffer& gray, int channels) {
  if (channels == 1) return gray;
  ImageBuffer out(gray.height(), gray.width(), channels);
  for (int r = 0; r < gray.height(); ++r) {
    for (int c = 0; c < gray.width(); ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        out.at(r, c, ch) = gray.at(r, c);
      }
    }
  }
  return out;
}

inline ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
  if (sigma <= 0.0) return img;
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
  };

  const int h = img.height(), w = img.width(), nch = img.channels();
  // Horizontal pass into doubles, vertical pass, single final rounding.
  std::vector<double> tmp(static_cast<std::size_t>(h) * w * nch);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int ch = 0; ch < nch; ++ch) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * img.at(r, reflect(c + k, w), ch);
        }
        tmp[(static_cast<std::size_t>(r) * w + c) * nch + ch] = acc;
      }
    }
  }
  ImageBuffer out(h, w, nch);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int ch = 0; ch < nch; ++ch) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] *
                 tmp[(static_cast<std::size_t>(reflect(r + k, h)) * w + c) *
                         nch + ch];
        }
        out.at(r, c, ch) = round_u8(acc);
      }
    }
  }
  return out;
}

// Smoothly interpolated value noise in [0, 1] on a 64px lattice, hashed from
// the seed so the field is a pure function of (seed, pixel).
inline double value_noise(std::uint64_t seed, double x, double y) {
  constexpr double cell = 64.0;
  double gx = x / cell;
  double gy = y / cell;
  auto fx0 = static_cast<std::int64_t>(std::floor(gx));
  auto fy0 = static_cast<std::int64_t>(std::floor(gy));
  double tx = gx - static_cast<double>(fx0);
  double ty = gy - static_cast<double>(fy0);
  // Smoothstep weights avoid lattice-aligned creases.
  tx = tx * tx * (3.0 - 2.0 * tx);
  ty = ty * ty * (3.0 - 2.0 * ty);
  auto node = [seed](std::int64_t i, std::int64_t j) {
    std::uint64_t h = mix64(seed ^ (static_cast<std::uint64_t>(i) *
                                    0x9e3779b97f4a7c15ULL));
    h = mix64(h ^ (static_cast<std::uint64_t>(j) * 0xc2b2ae3d27d4eb4fULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  };
  double top = (1.0 - tx) * node(fx0, fy0) + tx * node(fx0 + 1, fy0);
  double bottom = (1.0 - tx) * node(fx0, fy0 + 1) + tx * node(fx0 + 1, fy0 + 1);
  return (1.0 - ty) * top + ty * bottom;
}

// Alpha-blends toward white with a low-frequency noise alpha in
// [0, density]; simulates inhomogeneous haze.
inline ImageBuffer fog(const ImageBuffer& img, double density,
                       std::uint64_t seed) {
  ImageBuffer out(img.height(), img.width(), img.channels());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      double alpha = density * value_noise(seed, c + 0.5, r + 0.5);
      for (int ch = 0; ch < img.channels(); ++ch) {
        double v = (1.0 - alpha) * img.at(r, c, ch) + alpha * 255.0;
        out.at(r, c, ch) = round_u8(v);
      }
    }
  }
  return out;
}

// Random scaled sub-window resampled back to the original shape. The window
// dims are round(scale * dims), placed uniformly; a zoom-in augmentation.
inline ImageBuffer crop_zoom(const ImageBuffer& img, double scale,
                             RandomStream& rng) {
  int ch = std::max(1, static_cast<int>(std::lround(scale * img.height())));
  int cw = std::max(1, static_cast<int>(std::lround(scale * img.width())));
  ch = std::min(ch, img.height());
  cw = std::min(cw, img.width());
  auto row = static_cast<double>(rng.uniform_int(0, img.height() - ch));
  auto col = static_cast<double>(rng.uniform_int(0, img.width() - cw));
  ImageBuffer window = crop_image(img, rect_polygon(col, row, cw, ch));
  return resize_image(window, img.height(), img.width());
}

}  // namespace detail

// Applies the composite spec in order. Stochastic ops draw from child
// streams keyed by op position, so inserting an op never shifts the
// randomness of later ones.
inline ImageBuffer apply_augmentation(const ImageBuffer& img,
                                      const AugmentationSpec& spec) {
  if (img.empty()) throw Error(Errc::EmptyInput, "empty image");
  for (const AugmentationOp& op : spec.ops) detail::validate_op(op);

  using Kind = AugmentationOp::Kind;
  RandomStream base(spec.seed);
  ImageBuffer out = img;
  for (std::size_t i = 0; i < spec.ops.size(); ++i) {
    const AugmentationOp& op = spec.ops[i];
    switch (op.kind) {
      case Kind::HFlip:
        out = detail::flip_horizontal(out);
        break;
      case Kind::VFlip:
        out = detail::flip_vertical(out);
        break;
      case Kind::Crop: {
        RandomStream op_rng = base.split(i);
        out = detail::crop_zoom(out, op.amount, op_rng);
        break;
      }
      case Kind::Grayscale:
        out = detail::splat_gray(to_grayscale(out), out.channels());
        break;
      case Kind::Brightness:
        out = detail::scale_values(out, op.amount, 0.0);
        break;
      case Kind::Contrast:
        // Pivot at mid-gray so the factor spreads or squeezes around 128.
        out = detail::scale_values(out, op.amount, 128.0);
        break;
      case Kind::GaussianBlur:
        out = detail::gaussian_blur(out, op.amount);
        break;
      case Kind::Fog:
        out = detail::fog(out, op.amount, derive_seed(spec.seed, i));
        break;
    }
  }
  return out;
}

}  // namespace homsynth

#endif  // HOMSYNTH_AUGMENT_HPP

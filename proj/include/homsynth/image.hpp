#ifndef HOMSYNTH_IMAGE_HPP
#define HOMSYNTH_IMAGE_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "homsynth/error.hpp"

namespace homsynth {

// Interleaved 8-bit image, row-major, 1 (gray) or 3 (RGB) channels.
//
// Geometry convention used throughout: pixel (r, c) covers the unit square
// [c, c+1] x [r, r+1] of the continuous image plane, so its center sits at
// (c + 0.5, r + 0.5) and an h x w image spans [0, w] x [0, h].
class ImageBuffer {
 public:
  ImageBuffer() = default;

  ImageBuffer(int height, int width, int channels, std::uint8_t fill = 0)
      : height_(height), width_(width), channels_(channels) {
    validate_shape();
    data_.assign(static_cast<std::size_t>(height_) * width_ * channels_, fill);
  }

  ImageBuffer(int height, int width, int channels,
              std::vector<std::uint8_t> data)
      : height_(height), width_(width), channels_(channels),
        data_(std::move(data)) {
    validate_shape();
    if (data_.size() !=
        static_cast<std::size_t>(height_) * width_ * channels_) {
      throw Error(Errc::InvalidArgument, "pixel buffer size mismatch");
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t at(int r, int c, int ch = 0) const {
    return data_[index(r, c, ch)];
  }
  std::uint8_t& at(int r, int c, int ch = 0) { return data_[index(r, c, ch)]; }

  const std::vector<std::uint8_t>& data() const noexcept { return data_; }
  std::vector<std::uint8_t>& data() noexcept { return data_; }

  bool operator==(const ImageBuffer& other) const = default;

 private:
  void validate_shape() const {
    if (height_ <= 0 || width_ <= 0) {
      throw Error(Errc::InvalidArgument, "image dimensions must be positive");
    }
    if (channels_ != 1 && channels_ != 3) {
      throw Error(Errc::InvalidArgument, "images are 1- or 3-channel");
    }
  }

  std::size_t index(int r, int c, int ch) const {
    return (static_cast<std::size_t>(r) * width_ + c) * channels_ + ch;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

namespace detail {

// Reads one whitespace-delimited PNM header token, skipping '#' comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) {
    throw Error(Errc::ParseError, "unexpected end of image header");
  }
  return tok;
}

inline int pnm_int(std::istream& in, const char* what) {
  std::string tok = pnm_token(in);
  try {
    std::size_t used = 0;
    int value = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return value;
  } catch (const std::exception&) {
    throw Error(Errc::ParseError,
                std::string("invalid ") + what + " in image header");
  }
}

}  // namespace detail

// Binary PGM (P5) or PPM (P6) with 8-bit samples.
inline ImageBuffer read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::IoError, "cannot open " + path.string());
  }
  std::string magic = detail::pnm_token(in);
  int channels;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw Error(Errc::ParseError,
                "unsupported image format in " + path.string());
  }
  int width = detail::pnm_int(in, "width");
  int height = detail::pnm_int(in, "height");
  int maxval = detail::pnm_int(in, "maxval");
  if (width <= 0 || height <= 0) {
    throw Error(Errc::ParseError, "bad image dimensions in " + path.string());
  }
  if (maxval <= 0 || maxval > 255) {
    throw Error(Errc::ParseError, "only 8-bit samples supported");
  }
  // The header ends with exactly one whitespace byte before the raster.
  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height *
                                 channels);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  if (static_cast<std::size_t>(in.gcount()) != data.size()) {
    throw Error(Errc::ParseError, "truncated raster in " + path.string());
  }
  return ImageBuffer(height, width, channels, std::move(data));
}

inline void write_pnm(const ImageBuffer& img, const std::filesystem::path& path) {
  if (img.empty()) {
    throw Error(Errc::EmptyInput, "cannot write an empty image");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  }
  out << (img.channels() == 1 ? "P5" : "P6") << "\n"
      << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()),
            static_cast<std::streamsize>(img.data().size()));
  if (!out) {
    throw Error(Errc::IoError, "failed writing " + path.string());
  }
}

// Dispatches on the magic bytes; currently the PNM family only.
inline ImageBuffer load_image(const std::filesystem::path& path) {
  return read_pnm(path);
}

}  // namespace homsynth

#endif  // HOMSYNTH_IMAGE_HPP

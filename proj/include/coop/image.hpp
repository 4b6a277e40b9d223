#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "coop/error.hpp"

namespace coop {

/// Row-major raster. Pixel (x, y) lives at data[y * width + x], y grows downward.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked_area(width, height)), fill) {}
  Image(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (static_cast<long long>(data_.size()) != checked_area(width, height)) {
      throw Error(ErrorCode::InvalidImage, "data length does not match width*height");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  // Clamped access (edge replication).
  const T& clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return data_[index(x, y)];
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  std::span<const T> row(int y) const {
    return std::span<const T>(data_).subspan(index(0, y), static_cast<std::size_t>(width_));
  }

  bool operator==(const Image&) const = default;

 private:
  static long long checked_area(int width, int height) {
    if (width < 0 || height < 0) throw Error(ErrorCode::InvalidImage, "negative image size");
    return static_cast<long long>(width) * height;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

using GrayImage = Image<std::uint8_t>;
using FloatImage = Image<float>;
using RgbImage = Image<Rgb>;

/// Minimum frame edge accepted by the perception stack.
inline constexpr int kMinFrameSide = 16;

inline void require_frame(const GrayImage& img) {
  if (img.width() < kMinFrameSide || img.height() < kMinFrameSide) {
    throw Error(ErrorCode::InvalidImage, "frame must be at least 16x16 pixels");
  }
}

// ITU-R BT.601 luma.
inline GrayImage to_luminance(const RgbImage& rgb) {
  GrayImage out(rgb.width(), rgb.height());
  auto src = rgb.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double y = 0.299 * src[i].r + 0.587 * src[i].g + 0.114 * src[i].b;
    dst[i] = static_cast<std::uint8_t>(y + 0.5);
  }
  return out;
}

namespace detail {

inline void skip_pgm_space(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

inline int read_pgm_int(std::istream& in) {
  skip_pgm_space(in);
  int value = -1;
  if (!(in >> value)) throw Error(ErrorCode::IoError, "malformed PGM header");
  return value;
}

}  // namespace detail

/// Binary PGM (P5, maxval 255).
inline GrayImage decode_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') {
    throw Error(ErrorCode::IoError, "not a binary PGM (P5) stream");
  }
  const int width = detail::read_pgm_int(in);
  const int height = detail::read_pgm_int(in);
  const int maxval = detail::read_pgm_int(in);
  if (width <= 0 || height <= 0) throw Error(ErrorCode::IoError, "invalid PGM dimensions");
  if (maxval != 255) throw Error(ErrorCode::IoError, "only maxval 255 is supported");
  // exactly one whitespace byte separates header and raster
  if (in.get() == EOF) throw Error(ErrorCode::IoError, "truncated PGM header");
  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size())) {
    throw Error(ErrorCode::IoError, "truncated PGM raster");
  }
  return GrayImage(width, height, std::move(data));
}

inline void encode_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  auto px = img.pixels();
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return decode_pgm(in);
}

inline void write_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  encode_pgm(out, img);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace coop

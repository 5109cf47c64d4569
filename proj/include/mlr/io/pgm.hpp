#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/image.hpp"

namespace mlr {

// Netpbm graymaps, P2 (ASCII) and P5 (binary), maxval 255 only.

namespace detail {

class PgmCursor {
public:
  explicit PgmCursor(const std::string& bytes) : s_(bytes) {}

  // Skips whitespace and '#' comments.
  void skip_space() {
    while (pos_ < s_.size()) {
      if (s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    std::size_t v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + static_cast<std::size_t>(s_[pos_] - '0');
      if (v > 1u << 30) throw FormatError(std::string("pgm: ") + what + " is too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= s_.size()) throw FormatError(std::string("pgm: truncated, expected ") + what, pos_);
      throw FormatError(std::string("pgm: expected ") + what, pos_);
    }
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  const std::string& bytes() const { return s_; }

private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline ImageGrid parse_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw FormatError("pgm: missing P2/P5 magic", 0);
  const bool binary = bytes[1] == '5';
  detail::PgmCursor cur(bytes);
  cur.advance(2);
  const std::size_t width = cur.number("width");
  const std::size_t height = cur.number("height");
  const std::size_t maxval_at = (cur.skip_space(), cur.pos());
  const std::size_t maxval = cur.number("maxval");
  if (maxval != 255) throw FormatError("pgm: maxval must be 255, got " + std::to_string(maxval), maxval_at);
  if (width == 0 || height == 0) throw FormatError("pgm: empty image", maxval_at);

  ImageGrid img(height, width);
  if (binary) {
    if (cur.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[cur.pos()])))
      throw FormatError("pgm: expected whitespace after maxval", cur.pos());
    cur.advance(1);
    const std::size_t need = width * height;
    if (bytes.size() - cur.pos() < need)
      throw FormatError("pgm: truncated pixel data, expected " + std::to_string(need) + " bytes", bytes.size());
    for (std::size_t i = 0; i < need; ++i) img[i] = static_cast<unsigned char>(bytes[cur.pos() + i]);
  } else {
    for (std::size_t i = 0; i < width * height; ++i) {
      cur.skip_space();
      const std::size_t at = cur.pos();
      const std::size_t v = cur.number("sample");
      if (v > 255) throw FormatError("pgm: sample exceeds maxval", at);
      img[i] = static_cast<double>(v);
    }
  }
  return img;
}

inline ImageGrid read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_pgm(bytes);
}

// Samples are rounded to the nearest integer and clamped to [0, 255].
inline std::uint8_t to_sample(double v) {
  if (!std::isfinite(v)) throw InvalidInput("pgm: non-finite pixel value");
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline void write_pgm(const ImageGrid& img, std::ostream& os, bool binary = true) {
  if (img.empty()) throw InvalidArgument("pgm: empty image");
  os << (binary ? "P5" : "P2") << '\n' << img.cols() << ' ' << img.rows() << "\n255\n";
  if (binary) {
    std::string row(img.cols(), '\0');
    for (std::size_t r = 0; r < img.rows(); ++r) {
      for (std::size_t c = 0; c < img.cols(); ++c) row[c] = static_cast<char>(to_sample(img(r, c)));
      os.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
  } else {
    for (std::size_t r = 0; r < img.rows(); ++r) {
      for (std::size_t c = 0; c < img.cols(); ++c) os << (c ? " " : "") << int{to_sample(img(r, c))};
      os << '\n';
    }
  }
}

inline void write_pgm(const ImageGrid& img, const std::string& path, bool binary = true) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  write_pgm(img, os, binary);
  if (!os) throw InvalidArgument("failed writing " + path);
}

}  // namespace mlr

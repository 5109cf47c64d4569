#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mlr/error.hpp"

namespace mlr {

// 2-D real image stored row-major; pixel (r, c) lives at r * cols + c.
class ImageGrid {
public:
  ImageGrid() = default;
  ImageGrid(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), pixels_(rows * cols, fill) {}
  ImageGrid(std::size_t rows, std::size_t cols, std::vector<double> pixels)
      : rows_(rows), cols_(cols), pixels_(std::move(pixels)) {
    if (pixels_.size() != rows_ * cols_)
      throw InvalidArgument("ImageGrid: pixel count does not match shape");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return pixels_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return pixels_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return pixels_[i]; }
  double operator[](std::size_t i) const { return pixels_[i]; }

  std::span<double> pixels() noexcept { return pixels_; }
  std::span<const double> pixels() const noexcept { return pixels_; }
  std::vector<double>& vec() noexcept { return pixels_; }
  const std::vector<double>& vec() const noexcept { return pixels_; }

  bool same_shape(const ImageGrid& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool all_finite() const {
    return std::all_of(pixels_.begin(), pixels_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> pixels_;
};

// Known-pixel set over an image domain, same layout as ImageGrid.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<char> known;

  Mask() = default;
  Mask(std::size_t r, std::size_t c, bool value = false)
      : rows(r), cols(c), known(r * c, value ? 1 : 0) {}

  bool operator()(std::size_t r, std::size_t c) const { return known[r * cols + c] != 0; }
  bool operator[](std::size_t i) const { return known[i] != 0; }
  std::size_t size() const noexcept { return known.size(); }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(known.begin(), known.end(), 1));
  }

  friend bool operator==(const Mask&, const Mask&) = default;
};

}  // namespace mlr

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "mlr/error.hpp"
#include "mlr/image.hpp"

namespace mlr {

// PSNR with the reference image's own extremes as the peak:
//   10 log10(MN (ref_max - ref_min)^2 / ||f - ref||^2).
// Identical images give +infinity.
inline double psnr(const ImageGrid& f, const ImageGrid& ref) {
  if (!f.same_shape(ref) || ref.empty()) throw InvalidArgument("psnr: image shapes differ");
  const auto [lo, hi] = std::minmax_element(ref.pixels().begin(), ref.pixels().end());
  const double range = *hi - *lo;
  if (range == 0.0) throw InvalidArgument("psnr: reference image is constant");
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = f[i] - ref[i];
    err += d * d;
  }
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(f.size()) * range * range / err);
}

}  // namespace mlr

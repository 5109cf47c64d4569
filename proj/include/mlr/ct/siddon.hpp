#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mlr/error.hpp"

namespace mlr {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Ray {
  Point2 source;
  Point2 detector;
};

struct RayHit {
  std::size_t pixel;  // r * N + c
  double length;
};

// Pixel (r, c) of an N x N image covers x in [c - N/2, c - N/2 + 1] and
// y in [N/2 - r - 1, N/2 - r]: unit pitch, centered at the origin, row 0 on top.

namespace detail {

// Parameter interval [t0, t1] of source + t (detector - source) inside the
// square |x|, |y| <= h, clipped to the segment. Empty when t0 >= t1.
inline bool clip_to_square(const Ray& ray, double h, double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  const double d[2] = {ray.detector.x - ray.source.x, ray.detector.y - ray.source.y};
  const double p[2] = {ray.source.x, ray.source.y};
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (p[k] < -h || p[k] > h) return false;
      continue;
    }
    double a = (-h - p[k]) / d[k], b = (h - p[k]) / d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  return t0 < t1;
}

}  // namespace detail

// Siddon's method: exact intersection lengths of the segment with every pixel
// it crosses, in traversal order.
inline std::vector<RayHit> siddon_trace(const Ray& ray, std::size_t n) {
  if (n == 0) throw InvalidArgument("siddon_trace: empty image");
  const double dx = ray.detector.x - ray.source.x, dy = ray.detector.y - ray.source.y;
  const double len = std::hypot(dx, dy);
  if (!(len > 0.0) || !std::isfinite(len)) throw InvalidArgument("siddon_trace: ray endpoints must be distinct and finite");

  const double h = 0.5 * static_cast<double>(n);
  double t0, t1;
  if (!detail::clip_to_square(ray, h, t0, t1)) return {};

  std::vector<double> ts{t0, t1};
  ts.reserve(2 * n + 4);
  for (std::size_t k = 0; k <= n; ++k) {
    const double plane = static_cast<double>(k) - h;
    if (dx != 0.0) {
      const double t = (plane - ray.source.x) / dx;
      if (t > t0 && t < t1) ts.push_back(t);
    }
    if (dy != 0.0) {
      const double t = (plane - ray.source.y) / dy;
      if (t > t0 && t < t1) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());

  std::vector<RayHit> hits;
  const auto last = static_cast<long long>(n) - 1;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double seg = (ts[i + 1] - ts[i]) * len;
    if (!(seg > 0.0)) continue;
    const double tm = 0.5 * (ts[i] + ts[i + 1]);
    const double x = ray.source.x + tm * dx, y = ray.source.y + tm * dy;
    const long long c = std::clamp(static_cast<long long>(std::floor(x + h)), 0LL, last);
    const long long r = std::clamp(static_cast<long long>(std::floor(h - y)), 0LL, last);
    const std::size_t pix = static_cast<std::size_t>(r) * n + static_cast<std::size_t>(c);
    // Rounding can split one pixel into two adjacent pieces; merge them.
    if (!hits.empty() && hits.back().pixel == pix)
      hits.back().length += seg;
    else
      hits.push_back({pix, seg});
  }
  return hits;
}

}  // namespace mlr

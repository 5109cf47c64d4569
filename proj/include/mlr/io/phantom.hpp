#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "mlr/error.hpp"
#include "mlr/image.hpp"

namespace mlr {

enum class PhantomKind { Disk, SheppLike, Texture, DiskTexture };

inline PhantomKind parse_phantom_kind(const std::string& s) {
  if (s == "disk") return PhantomKind::Disk;
  if (s == "shepp" || s == "shepp-like") return PhantomKind::SheppLike;
  if (s == "texture") return PhantomKind::Texture;
  if (s == "disk-texture") return PhantomKind::DiskTexture;
  throw InvalidArgument("unknown phantom kind '" + s + "'");
}

// Two oriented sinusoids plus a smooth ramp, values within [27.5, 227.5].
// Periods are in pixels, so the texture repeats at every image size.
inline double texture_value(double r, double c, std::size_t n) {
  constexpr double pi = std::numbers::pi;
  const double a1 = pi / 6.0, p1 = 8.0;
  const double a2 = 2.0 * pi / 3.0, p2 = 6.0;
  const double ramp = (r + c) / (2.0 * static_cast<double>(n - 1)) - 0.5;
  return 127.5 + 45.0 * std::sin(2.0 * pi * (r * std::cos(a1) + c * std::sin(a1)) / p1) +
         35.0 * std::sin(2.0 * pi * (r * std::cos(a2) + c * std::sin(a2)) / p2) + 40.0 * ramp;
}

namespace detail {

struct Ellipse {
  double value, a, b, x0, y0, phi_deg;
};

}  // namespace detail

// Deterministic analytic test images on an n x n grid, intensities in [0, 255].
inline ImageGrid make_phantom(PhantomKind kind, std::size_t n) {
  if (n < 8) throw InvalidArgument("phantom size must be at least 8");
  ImageGrid img(n, n);
  const double center = (static_cast<double>(n) - 1.0) / 2.0;
  const double nd = static_cast<double>(n);
  switch (kind) {
    case PhantomKind::Disk: {
      const double radius = nd / 3.0;
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
          img(r, c) = std::hypot(r - center, c - center) <= radius ? 255.0 : 0.0;
      break;
    }
    case PhantomKind::Texture: {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) img(r, c) = texture_value(double(r), double(c), n);
      break;
    }
    case PhantomKind::DiskTexture: {
      const double radius = 0.45 * nd;
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
          img(r, c) = std::hypot(r - center, c - center) <= radius ? texture_value(double(r), double(c), n) : 0.0;
      break;
    }
    case PhantomKind::SheppLike: {
      // Modified Shepp-Logan ellipses in normalized coordinates [-1, 1].
      static constexpr detail::Ellipse kEllipses[] = {
          {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},        {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
          {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
          {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},       {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
          {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},     {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
          {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},   {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
      };
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
          const double x = (static_cast<double>(c) - center) / (nd / 2.0);
          const double y = (center - static_cast<double>(r)) / (nd / 2.0);
          double v = 0.0;
          for (const auto& e : kEllipses) {
            const double phi = e.phi_deg * std::numbers::pi / 180.0;
            const double xr = (x - e.x0) * std::cos(phi) + (y - e.y0) * std::sin(phi);
            const double yr = -(x - e.x0) * std::sin(phi) + (y - e.y0) * std::cos(phi);
            if (xr * xr / (e.a * e.a) + yr * yr / (e.b * e.b) <= 1.0) v += e.value;
          }
          img(r, c) = std::clamp(v, 0.0, 1.0) * 255.0;
        }
      break;
    }
  }
  return img;
}

}  // namespace mlr

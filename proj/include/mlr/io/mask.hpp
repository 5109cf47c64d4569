#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/image.hpp"
#include "mlr/rng.hpp"

namespace mlr {

struct MaskSpec {
  enum class Kind { RandomRate, GridSubsample };
  Kind kind = Kind::RandomRate;
  double rate = 0.1;       // fraction of known pixels, random kind
  std::size_t stride = 2;  // grid kind
  std::uint64_t seed = 0;
};

// Random kind: exactly round(rate * m * n) known pixels drawn without
// replacement (partial Fisher-Yates). Grid kind: rows and columns
// 0, s, 2s, ... are known.
inline Mask gen_mask(const MaskSpec& spec, std::size_t m, std::size_t n) {
  Mask mask(m, n, false);
  const std::size_t total = m * n;
  if (spec.kind == MaskSpec::Kind::RandomRate) {
    if (!(spec.rate > 0.0 && spec.rate <= 1.0)) throw InvalidArgument("mask rate must lie in (0, 1]");
    const auto count = static_cast<std::size_t>(std::llround(spec.rate * static_cast<double>(total)));
    std::vector<std::size_t> perm(total);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    SplitMix64 rng(spec.seed);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
      std::swap(perm[i], perm[j]);
      mask.known[perm[i]] = 1;
    }
  } else {
    if (spec.stride < 1) throw InvalidArgument("mask stride must be at least 1");
    for (std::size_t r = 0; r < m; r += spec.stride)
      for (std::size_t c = 0; c < n; c += spec.stride) mask.known[r * n + c] = 1;
  }
  if (mask.count() == 0) throw InvalidArgument("mask has no known pixels");
  return mask;
}

// Nonzero pixels are known.
inline Mask mask_from_image(const ImageGrid& img) {
  Mask mask(img.rows(), img.cols(), false);
  for (std::size_t i = 0; i < img.size(); ++i) mask.known[i] = img[i] != 0.0 ? 1 : 0;
  if (mask.count() == 0) throw InvalidArgument("mask has no known pixels");
  return mask;
}

inline ImageGrid mask_to_image(const Mask& mask) {
  ImageGrid img(mask.rows, mask.cols);
  for (std::size_t i = 0; i < mask.size(); ++i) img[i] = mask[i] ? 255.0 : 0.0;
  return img;
}

}  // namespace mlr

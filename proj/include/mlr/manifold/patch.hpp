#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/image.hpp"
#include "mlr/linalg/dense.hpp"

namespace mlr {

// Patch geometry: tau = 2 * eta + 1 pixels per side, knn_k neighbours per
// center (the center itself is added on top).
struct PatchConfig {
  std::size_t eta = 3;
  std::size_t tau = 7;
  std::size_t knn_k = 20;

  static PatchConfig from_patch_size(std::size_t tau, std::size_t knn_k) {
    if (tau % 2 == 0) throw InvalidArgument("patch size must be odd");
    if (knn_k < 1) throw InvalidArgument("knn must be at least 1");
    return PatchConfig{(tau - 1) / 2, tau, knn_k};
  }

  std::size_t patch_dim() const noexcept { return tau * tau; }

  void validate(std::size_t centers) const {
    if (tau != 2 * eta + 1) throw InvalidArgument("PatchConfig: tau must equal 2*eta+1");
    if (knn_k < 1) throw InvalidArgument("PatchConfig: knn_k must be at least 1");
    if (knn_k + 1 > centers)
      throw InvalidArgument("PatchConfig: knn_k + 1 exceeds the number of patch centers");
  }
};

// Half-sample symmetric reflection of an index into [0, len): -1 -> 0,
// len -> len - 1.
inline std::size_t mirror_index(long long i, std::size_t len) {
  const long long n = static_cast<long long>(len);
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return static_cast<std::size_t>(i);
}

inline void check_extension(std::size_t eta, std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw InvalidArgument("image must be non-empty");
  if (eta > std::min(m, n))
    throw InvalidArgument("extension half-width exceeds the smaller image dimension");
}

inline ImageGrid symmetric_extend(const ImageGrid& f, std::size_t eta) {
  check_extension(eta, f.rows(), f.cols());
  const std::size_t m = f.rows(), n = f.cols();
  ImageGrid out(m + 2 * eta, n + 2 * eta);
  const long long e = static_cast<long long>(eta);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const std::size_t sr = mirror_index(static_cast<long long>(r) - e, m);
    for (std::size_t c = 0; c < out.cols(); ++c)
      out(r, c) = f(sr, mirror_index(static_cast<long long>(c) - e, n));
  }
  return out;
}

// Pixel index read by patch entry `offset` of the patch centered at pixel
// `center`. Offsets run row-major over {-eta..eta}^2.
class PatchIndexMap {
public:
  PatchIndexMap(std::size_t eta, std::size_t m, std::size_t n) : eta_(eta), m_(m), n_(n) {
    check_extension(eta, m, n);
    const std::size_t tau = 2 * eta + 1;
    const long long e = static_cast<long long>(eta);
    row_lookup_.resize(m * tau);
    col_lookup_.resize(n * tau);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t a = 0; a < tau; ++a)
        row_lookup_[r * tau + a] = mirror_index(static_cast<long long>(r + a) - e, m);
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t b = 0; b < tau; ++b)
        col_lookup_[c * tau + b] = mirror_index(static_cast<long long>(c + b) - e, n);
  }

  std::size_t tau() const noexcept { return 2 * eta_ + 1; }
  std::size_t rows() const noexcept { return m_; }
  std::size_t cols() const noexcept { return n_; }

  std::size_t pixel(std::size_t center, std::size_t offset) const {
    const std::size_t t = tau();
    const std::size_t r = center / n_, c = center % n_;
    const std::size_t a = offset / t, b = offset % t;
    return row_lookup_[r * t + a] * n_ + col_lookup_[c * t + b];
  }

private:
  std::size_t eta_, m_, n_;
  std::vector<std::size_t> row_lookup_;
  std::vector<std::size_t> col_lookup_;
};

// Column x holds the vectorized tau x tau window of the symmetric extension
// centered at pixel x (row-major over the image).
struct PatchMatrix {
  std::size_t patch_dim = 0;
  std::size_t center_count = 0;
  DenseMatrix columns;  // patch_dim x center_count
  std::vector<std::pair<std::size_t, std::size_t>> center_coords;
};

inline PatchMatrix patch_transform(const ImageGrid& f, const PatchConfig& cfg) {
  const PatchIndexMap map(cfg.eta, f.rows(), f.cols());
  const std::size_t d = cfg.patch_dim(), centers = f.size();
  PatchMatrix out{d, centers, DenseMatrix(d, centers), {}};
  out.center_coords.reserve(centers);
  for (std::size_t x = 0; x < centers; ++x) out.center_coords.emplace_back(x / f.cols(), x % f.cols());
  for (std::size_t s = 0; s < d; ++s) {
    double* row = out.columns.row(s).data();
    for (std::size_t x = 0; x < centers; ++x) row[x] = f[map.pixel(x, s)];
  }
  return out;
}

// Adjoint of patch_transform: scatter-adds every entry back to the pixel it
// was read from.
inline ImageGrid patch_adjoint(const DenseMatrix& g, const PatchConfig& cfg, std::size_t m, std::size_t n) {
  if (g.rows() != cfg.patch_dim() || g.cols() != m * n)
    throw InvalidArgument("patch_adjoint: matrix shape does not match tau^2 x mn");
  const PatchIndexMap map(cfg.eta, m, n);
  ImageGrid out(m, n);
  for (std::size_t s = 0; s < g.rows(); ++s) {
    const double* row = g.row(s).data();
    for (std::size_t x = 0; x < g.cols(); ++x) out[map.pixel(x, s)] += row[x];
  }
  return out;
}

}  // namespace mlr

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/image.hpp"
#include "mlr/linalg/dense.hpp"
#include "mlr/manifold/patch.hpp"

namespace mlr {

// Per-center K-nearest-neighbour lists. Each list has K + 1 entries, the
// center itself first, then its K nearest other points by Euclidean distance
// (ties toward the smaller index).
struct NeighborhoodSet {
  std::size_t k = 0;
  std::size_t centers = 0;
  std::vector<std::size_t> indices;  // centers x (k + 1)
  std::vector<double> distances;     // same layout; distances[x * (k + 1)] == 0
  std::vector<std::size_t> occurrence;  // W_Q: appearances of each index over all lists

  std::size_t list_size() const noexcept { return k + 1; }

  std::span<const std::size_t> neighbors(std::size_t x) const {
    if (x >= centers) throw InvalidArgument("NeighborhoodSet: invalid center");
    return {indices.data() + x * (k + 1), k + 1};
  }
  std::span<const double> neighbor_distances(std::size_t x) const {
    if (x >= centers) throw InvalidArgument("NeighborhoodSet: invalid center");
    return {distances.data() + x * (k + 1), k + 1};
  }

  // Distance from x to its K-th (farthest listed) neighbour.
  double kth_distance(std::size_t x) const { return distances[x * (k + 1) + k]; }
};

// Number of knn_build calls made in this process; used to assert that a
// solver builds its graph exactly once.
inline std::atomic<std::size_t>& knn_build_counter() {
  static std::atomic<std::size_t> counter{0};
  return counter;
}

namespace detail {

inline void count_occurrences(NeighborhoodSet& nbr) {
  nbr.occurrence.assign(nbr.centers, 0);
  for (std::size_t idx : nbr.indices) ++nbr.occurrence[idx];
}

}  // namespace detail

// Exact brute-force KNN over the rows of `points` (one point per row,
// n x d). Use knn_build for column-stored points.
inline NeighborhoodSet knn_build_rows(const DenseMatrix& points, std::size_t k) {
  const std::size_t n = points.rows(), d = points.cols();
  if (k + 1 > n) throw InvalidArgument("knn_build: K + 1 exceeds the number of points");
  knn_build_counter().fetch_add(1, std::memory_order_relaxed);

  NeighborhoodSet nbr;
  nbr.k = k;
  nbr.centers = n;
  nbr.indices.resize(n * (k + 1));
  nbr.distances.resize(n * (k + 1));

  std::vector<std::pair<double, std::size_t>> cand(n > 0 ? n - 1 : 0);
  const double* base = points.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* pi = base + i * d;
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double* pj = base + j * d;
      double s = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        const double diff = pi[t] - pj[t];
        s += diff * diff;
      }
      cand[w++] = {s, j};
    }
    if (k > 0 && k < cand.size())
      std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k - 1), cand.end());
    std::sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k));
    std::size_t* out = nbr.indices.data() + i * (k + 1);
    double* dist = nbr.distances.data() + i * (k + 1);
    out[0] = i;
    dist[0] = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      out[t + 1] = cand[t].second;
      dist[t + 1] = std::sqrt(cand[t].first);
    }
  }
  detail::count_occurrences(nbr);
  return nbr;
}

// KNN over the columns of a d x n matrix.
inline NeighborhoodSet knn_build(const DenseMatrix& columns, std::size_t k) {
  if (k + 1 > columns.cols()) throw InvalidArgument("knn_build: K + 1 exceeds the number of points");
  return knn_build_rows(columns.transposed(), k);
}

enum class Orientation {
  Columns,  // blocks are the selected columns (patch matrices)
  Rows,     // blocks are the selected rows (cluster matrices)
};

// Restriction of `m` to center x and its neighbours: the duplication
// operator Q_x.
inline DenseMatrix gather(const NeighborhoodSet& nbr, const DenseMatrix& m, std::size_t x,
                          Orientation orient = Orientation::Columns) {
  const auto idx = nbr.neighbors(x);
  if (orient == Orientation::Columns) {
    if (m.cols() != nbr.centers) throw InvalidArgument("gather: column count does not match centers");
    DenseMatrix out(m.rows(), idx.size());
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const double* src = m.row(r).data();
      double* dst = out.row(r).data();
      for (std::size_t j = 0; j < idx.size(); ++j) dst[j] = src[idx[j]];
    }
    return out;
  }
  if (m.rows() != nbr.centers) throw InvalidArgument("gather: row count does not match centers");
  DenseMatrix out(idx.size(), m.cols());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto src = m.row(idx[j]);
    std::copy(src.begin(), src.end(), out.row(j).begin());
  }
  return out;
}

// Adds block x into `acc` at the positions gather would read from.
inline void scatter_add(const NeighborhoodSet& nbr, const DenseMatrix& block, std::size_t x, DenseMatrix& acc,
                        Orientation orient = Orientation::Columns) {
  const auto idx = nbr.neighbors(x);
  if (orient == Orientation::Columns) {
    if (block.cols() != idx.size() || block.rows() != acc.rows() || acc.cols() != nbr.centers)
      throw InvalidArgument("scatter: block shape mismatch");
    for (std::size_t r = 0; r < block.rows(); ++r) {
      const double* src = block.row(r).data();
      double* dst = acc.row(r).data();
      for (std::size_t j = 0; j < idx.size(); ++j) dst[idx[j]] += src[j];
    }
    return;
  }
  if (block.rows() != idx.size() || block.cols() != acc.cols() || acc.rows() != nbr.centers)
    throw InvalidArgument("scatter: block shape mismatch");
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const double* src = block.row(j).data();
    double* dst = acc.row(idx[j]).data();
    for (std::size_t c = 0; c < block.cols(); ++c) dst[c] += src[c];
  }
}

// Adjoint of gather over all centers (Q^T). Accumulates in center order.
inline DenseMatrix scatter(const NeighborhoodSet& nbr, std::span<const DenseMatrix> blocks,
                           Orientation orient = Orientation::Columns) {
  if (blocks.size() != nbr.centers) throw InvalidArgument("scatter: one block per center required");
  if (blocks.empty()) return {};
  DenseMatrix acc = orient == Orientation::Columns ? DenseMatrix(blocks[0].rows(), nbr.centers)
                                                   : DenseMatrix(nbr.centers, blocks[0].cols());
  for (std::size_t x = 0; x < blocks.size(); ++x) scatter_add(nbr, blocks[x], x, acc, orient);
  return acc;
}

// Divides each column (or row) of a scattered matrix by its occurrence count.
inline void divide_by_occurrence(const NeighborhoodSet& nbr, DenseMatrix& m, Orientation orient) {
  if (orient == Orientation::Columns) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double* row = m.row(r).data();
      for (std::size_t j = 0; j < m.cols(); ++j) row[j] /= static_cast<double>(nbr.occurrence[j]);
    }
  } else {
    for (std::size_t j = 0; j < m.rows(); ++j) {
      const double w = static_cast<double>(nbr.occurrence[j]);
      for (double& v : m.row(j)) v /= w;
    }
  }
}

// Left inverse of the duplication operator: W_Q^{-1} Q^T.
inline DenseMatrix left_inverse(const NeighborhoodSet& nbr, std::span<const DenseMatrix> blocks,
                                Orientation orient = Orientation::Columns) {
  DenseMatrix m = scatter(nbr, blocks, orient);
  divide_by_occurrence(nbr, m, orient);
  return m;
}

// Diagonal of W = sum_x P^T Q_x^T Q_x P: how often each pixel appears over all
// gathered patch blocks.
inline ImageGrid pixel_occurrence(const NeighborhoodSet& nbr, const PatchConfig& cfg, std::size_t m,
                                  std::size_t n) {
  if (nbr.centers != m * n) throw InvalidArgument("pixel_occurrence: center count mismatch");
  const PatchIndexMap map(cfg.eta, m, n);
  ImageGrid w(m, n);
  for (std::size_t x = 0; x < nbr.centers; ++x) {
    const double count = static_cast<double>(nbr.occurrence[x]);
    for (std::size_t s = 0; s < cfg.patch_dim(); ++s) w[map.pixel(x, s)] += count;
  }
  return w;
}

}  // namespace mlr

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/linalg/dense.hpp"
#include "mlr/linalg/svd.hpp"
#include "mlr/manifold/neighborhood.hpp"

namespace mlr {

// n points in R^d stored as the columns of a d x n matrix.
struct PointCloud {
  DenseMatrix points;

  std::size_t dim() const noexcept { return points.rows(); }
  std::size_t size() const noexcept { return points.cols(); }

  void validate() const {
    if (size() < 2) throw InvalidArgument("point cloud needs at least two points");
    if (!points.all_finite()) throw InvalidInput("point cloud has non-finite entries");
  }
};

// Labels known on a subset S, classes 0..classes-1.
struct LabelAssignment {
  std::size_t classes = 0;
  std::vector<std::size_t> indices;
  std::vector<int> labels;

  void validate(std::size_t n) const {
    if (indices.empty()) throw InvalidArgument("the labeled set is empty");
    if (indices.size() != labels.size()) throw InvalidArgument("labeled indices and labels differ in length");
    if (classes == 0) throw InvalidArgument("class count must be positive");
    std::vector<char> seen(n, 0);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] >= n) throw InvalidArgument("labeled index out of range");
      if (seen[indices[i]]) throw InvalidArgument("labeled index listed twice");
      seen[indices[i]] = 1;
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
        throw InvalidArgument("label out of range");
    }
  }

  // Classes with no labeled example; the solver still runs but those classes
  // can never win the argmax through propagation alone.
  std::vector<int> missing_classes() const {
    std::vector<char> present(classes, 0);
    for (int l : labels) present[static_cast<std::size_t>(l)] = 1;
    std::vector<int> out;
    for (std::size_t c = 0; c < classes; ++c)
      if (!present[c]) out.push_back(static_cast<int>(c));
    return out;
  }
};

// One-hot cluster matrix, n x classes.
inline DenseMatrix encode_labels(std::span<const int> labels, std::size_t classes) {
  DenseMatrix phi(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
      throw InvalidArgument("encode_labels: label " + std::to_string(labels[i]) + " out of range");
    phi(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return phi;
}

// Row-wise argmax, ties toward the smaller class.
inline std::vector<int> decode_labels(const DenseMatrix& phi) {
  std::vector<int> out(phi.rows());
  for (std::size_t i = 0; i < phi.rows(); ++i) {
    const auto row = phi.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out[i] = static_cast<int>(best);
  }
  return out;
}

// Every point takes the label of its nearest labeled point (Euclidean; ties
// toward the smaller point index).
inline std::vector<int> nearest_label_init(const PointCloud& cloud, const LabelAssignment& lab) {
  const std::size_t n = cloud.size(), d = cloud.dim();
  lab.validate(n);
  std::vector<std::size_t> order(lab.indices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lab.indices[a] < lab.indices[b]; });

  const DenseMatrix pts = cloud.points.transposed();  // n x d, rows contiguous
  std::vector<int> out(n, 0);
  for (std::size_t x = 0; x < n; ++x) {
    const double* px = pts.row(x).data();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k : order) {
      const double* py = pts.row(lab.indices[k]).data();
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double t = px[j] - py[j];
        s += t * t;
      }
      if (s < best) {
        best = s;
        out[x] = lab.labels[k];
      }
    }
  }
  for (std::size_t k = 0; k < lab.indices.size(); ++k) out[lab.indices[k]] = lab.labels[k];
  return out;
}

// One ADMM sweep on a fixed neighbourhood structure:
//   psi_x = T_{1/mu}(Q_x Phi + D_x)
//   Phi   = W_Q^{-1} Q^T (psi - D) off S, one-hot on S
//   D_x  += Q_x Phi - psi_x
// Returns sum_x ||psi_x||_*.
inline double ssl_sweep(DenseMatrix& phi, const NeighborhoodSet& nbr, std::vector<DenseMatrix>& dual, double mu,
                        const LabelAssignment& lab) {
  if (!(mu > 0.0)) throw InvalidArgument("ssl_sweep: mu must be positive");
  if (phi.rows() != nbr.centers) throw InvalidArgument("ssl_sweep: cluster matrix rows do not match the graph");
  if (dual.size() != nbr.centers) throw InvalidArgument("ssl_sweep: one dual block per point required");

  double nuclear = 0.0;
  std::vector<DenseMatrix> psi(nbr.centers), diff(nbr.centers);
  for (std::size_t x = 0; x < nbr.centers; ++x) {
    DenseMatrix block = gather(nbr, phi, x, Orientation::Rows);
    block += dual[x];
    SvtResult r = svt_with_norm(block, 1.0 / mu);
    nuclear += r.nuclear_norm;
    psi[x] = std::move(r.value);
    diff[x] = psi[x] - dual[x];
  }
  DenseMatrix next = left_inverse(nbr, diff, Orientation::Rows);
  for (std::size_t k = 0; k < lab.indices.size(); ++k) {
    auto row = next.row(lab.indices[k]);
    std::fill(row.begin(), row.end(), 0.0);
    row[static_cast<std::size_t>(lab.labels[k])] = 1.0;
  }
  if (!next.all_finite()) throw NumericalFailure("ssl_sweep: non-finite cluster matrix");
  phi = std::move(next);

  for (std::size_t x = 0; x < nbr.centers; ++x) {
    dual[x] += gather(nbr, phi, x, Orientation::Rows);
    dual[x] -= psi[x];
  }
  return nuclear;
}

// Histogram of rank(Q_x Phi): count of centers per numerical rank.
inline std::map<std::size_t, std::size_t> rank_histogram(const DenseMatrix& phi, const NeighborhoodSet& nbr,
                                                         double tol = 1e-8) {
  std::map<std::size_t, std::size_t> hist;
  for (std::size_t x = 0; x < nbr.centers; ++x)
    ++hist[numerical_rank(singular_values(gather(nbr, phi, x, Orientation::Rows)), tol)];
  return hist;
}

struct SslParams {
  std::size_t k = 15;
  double mu = 1.0;
  int outer_iters = 3;
  int inner_iters = 30;
};

struct SslResult {
  std::vector<int> labels;
  std::vector<int> initial;  // nearest-label initialization
  int outer_done = 0;
  bool converged = false;  // labels stopped changing before the cap
  std::map<std::size_t, std::size_t> rank_hist;
};

// Builds the KNN graph once, initializes by nearest labeled point, then per
// outer iteration re-encodes, runs inner sweeps with fresh duals and decodes.
// Stops when the decoded labels repeat or after outer_iters.
inline SslResult solve_ssl(const PointCloud& cloud, const LabelAssignment& lab, const SslParams& params) {
  cloud.validate();
  lab.validate(cloud.size());
  if (params.k + 1 > cloud.size()) throw InvalidArgument("solve_ssl: K + 1 exceeds the number of points");
  if (!(params.mu > 0.0)) throw InvalidArgument("solve_ssl: mu must be positive");
  if (params.inner_iters < 1) throw InvalidArgument("solve_ssl: inner iterations must be at least 1");
  if (params.outer_iters < 0) throw InvalidArgument("solve_ssl: outer iterations must be non-negative");

  const NeighborhoodSet nbr = knn_build(cloud.points, params.k);
  SslResult res;
  res.initial = nearest_label_init(cloud, lab);
  res.labels = res.initial;
  DenseMatrix phi = encode_labels(res.labels, lab.classes);

  for (int k = 0; k < params.outer_iters; ++k) {
    phi = encode_labels(res.labels, lab.classes);
    std::vector<DenseMatrix> dual(nbr.centers, DenseMatrix(nbr.list_size(), lab.classes));
    for (int l = 0; l < params.inner_iters; ++l) ssl_sweep(phi, nbr, dual, params.mu, lab);
    std::vector<int> next = decode_labels(phi);
    res.outer_done = k + 1;
    const bool same = next == res.labels;
    res.labels = std::move(next);
    if (same) {
      res.converged = true;
      break;
    }
  }
  res.rank_hist = rank_histogram(phi, nbr);
  return res;
}

}  // namespace mlr

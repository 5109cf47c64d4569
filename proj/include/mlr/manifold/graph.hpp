#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/linalg/sparse.hpp"
#include "mlr/manifold/neighborhood.hpp"

namespace mlr {

// Symmetric non-negative edge weights with zero diagonal, node degrees and
// the graph Laplacian (L f)(x) = sum_y w(x,y) (f(y) - f(x)). L is symmetric
// negative semidefinite and annihilates constants.
struct AffinityGraph {
  std::size_t nodes = 0;
  SparseOperator weights;
  std::vector<double> degree;
  SparseOperator laplacian;
};

// Finishes a graph from symmetric weights.
inline AffinityGraph graph_from_weights(SparseOperator weights) {
  if (weights.rows() != weights.cols()) throw InvalidArgument("graph weights must be square");
  AffinityGraph g;
  g.nodes = weights.rows();
  g.degree.assign(g.nodes, 0.0);
  std::vector<Triplet> lap;
  lap.reserve(weights.nonzeros() + g.nodes);
  for (std::size_t r = 0; r < g.nodes; ++r) {
    const auto idx = weights.row_indices(r);
    const auto val = weights.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] == r) throw InvalidArgument("graph weights must have a zero diagonal");
      if (val[k] < 0.0) throw InvalidArgument("graph weights must be non-negative");
      g.degree[r] += val[k];
      lap.push_back({r, idx[k], val[k]});
    }
    lap.push_back({r, r, -g.degree[r]});
  }
  g.laplacian = SparseOperator::from_triplets(g.nodes, g.nodes, std::move(lap));
  g.weights = std::move(weights);
  return g;
}

// Self-tuning Gaussian weights on the KNN edges:
//   w(x,y) = exp(-d(x,y)^2 / (sigma(x) sigma(y))),
// sigma(x) = distance to the K-th neighbour (floored at 1e-12), then
// symmetrized as (W + W^T) / 2.
inline AffinityGraph affinity_laplacian(const NeighborhoodSet& nbr) {
  constexpr double kSigmaFloor = 1e-12;
  const std::size_t n = nbr.centers;
  std::vector<double> sigma(n);
  for (std::size_t x = 0; x < n; ++x) sigma[x] = std::max(nbr.k > 0 ? nbr.kth_distance(x) : 0.0, kSigmaFloor);

  std::vector<Triplet> t;
  t.reserve(2 * n * nbr.k);
  for (std::size_t x = 0; x < n; ++x) {
    const auto idx = nbr.neighbors(x);
    const auto dist = nbr.neighbor_distances(x);
    for (std::size_t j = 1; j < idx.size(); ++j) {
      const std::size_t y = idx[j];
      if (y == x) continue;
      const double w = 0.5 * std::exp(-dist[j] * dist[j] / (sigma[x] * sigma[y]));
      t.push_back({x, y, w});
      t.push_back({y, x, w});
    }
  }
  return graph_from_weights(SparseOperator::from_triplets(n, n, std::move(t)));
}

// Same construction, checking that the neighbourhoods were built from
// `points` (d x n columns).
inline AffinityGraph affinity_laplacian(const DenseMatrix& points, const NeighborhoodSet& nbr) {
  if (points.cols() != nbr.centers) throw InvalidArgument("affinity_laplacian: point count mismatch");
  return affinity_laplacian(nbr);
}

// 4-neighbour pixel grid with unit weights, the graph behind classical
// harmonic (Laplace) interpolation.
inline AffinityGraph grid_graph(std::size_t m, std::size_t n) {
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t p = r * n + c;
      if (c + 1 < n) {
        t.push_back({p, p + 1, 1.0});
        t.push_back({p + 1, p, 1.0});
      }
      if (r + 1 < m) {
        t.push_back({p, p + n, 1.0});
        t.push_back({p + n, p, 1.0});
      }
    }
  return graph_from_weights(SparseOperator::from_triplets(m * n, m * n, std::move(t)));
}

// sum over ordered pairs (x, y) of w(x,y) (f(y) - f(x))^2 == -2 f^T L f.
inline double nonlocal_gradient_energy(const AffinityGraph& g, std::span<const double> f) {
  if (f.size() != g.nodes) throw InvalidArgument("nonlocal_gradient_energy: size mismatch");
  double e = 0.0;
  for (std::size_t x = 0; x < g.nodes; ++x) {
    const auto idx = g.weights.row_indices(x);
    const auto val = g.weights.row_values(x);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double d = f[idx[k]] - f[x];
      e += val[k] * d * d;
    }
  }
  return e;
}

}  // namespace mlr

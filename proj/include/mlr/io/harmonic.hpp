#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/image.hpp"
#include "mlr/linalg/cg.hpp"
#include "mlr/manifold/graph.hpp"

namespace mlr {

// Solves L f = 0 on the unknown nodes with f = h on the known ones, using CG
// on the restricted negative Laplacian.
inline ImageGrid harmonic_extension(const ImageGrid& h, const Mask& known, const AffinityGraph& graph,
                                    double tol = 1e-10, int max_iter = 20000) {
  if (known.rows != h.rows() || known.cols != h.cols()) throw InvalidArgument("harmonic_extension: mask shape mismatch");
  if (graph.nodes != h.size()) throw InvalidArgument("harmonic_extension: graph size mismatch");
  if (known.count() == 0) throw InvalidArgument("harmonic_extension: the known set is empty");
  const std::size_t n = h.size();
  ImageGrid out = h;

  std::vector<std::size_t> free_idx;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i)
    if (!known[i]) {
      slot[i] = free_idx.size();
      free_idx.push_back(i);
    }
  if (free_idx.empty()) return out;

  // Every unknown node must reach a known one through positive weights.
  std::vector<char> reached(n, 0);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i)
    if (known[i]) {
      reached[i] = 1;
      queue.push_back(i);
    }
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    const auto idx = graph.weights.row_indices(v);
    const auto val = graph.weights.row_values(v);
    for (std::size_t k = 0; k < idx.size(); ++k)
      if (val[k] > 0.0 && !reached[idx[k]]) {
        reached[idx[k]] = 1;
        queue.push_back(idx[k]);
      }
  }
  for (std::size_t i : free_idx)
    if (!reached[i])
      throw SingularSystem("harmonic_extension: an unknown component has no known neighbour");

  // (-L)_UU x = L_{U,Omega} h_Omega
  const auto& lap = graph.laplacian;
  std::vector<double> b(free_idx.size(), 0.0);
  for (std::size_t k = 0; k < free_idx.size(); ++k) {
    const auto idx = lap.row_indices(free_idx[k]);
    const auto val = lap.row_values(free_idx[k]);
    for (std::size_t e = 0; e < idx.size(); ++e)
      if (known[idx[e]]) b[k] += val[e] * h[idx[e]];
  }
  LinearMap apply = [&](std::span<const double> x, std::span<double> y) {
    for (std::size_t k = 0; k < free_idx.size(); ++k) {
      const auto idx = lap.row_indices(free_idx[k]);
      const auto val = lap.row_values(free_idx[k]);
      double s = 0.0;
      for (std::size_t e = 0; e < idx.size(); ++e)
        if (slot[idx[e]] < n) s += val[e] * x[slot[idx[e]]];
      y[k] = -s;
    }
  };
  const CgResult sol = cg_solve(apply, b, tol, max_iter);
  for (std::size_t k = 0; k < free_idx.size(); ++k) out[free_idx[k]] = sol.x[k];
  return out;
}

}  // namespace mlr

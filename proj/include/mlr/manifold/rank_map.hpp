#pragma once

#include <cstddef>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/linalg/svd.hpp"
#include "mlr/manifold/neighborhood.hpp"
#include "mlr/manifold/patch.hpp"

namespace mlr {

// Numerical rank of every gathered block: the point-wise manifold rank.
inline std::vector<std::size_t> local_rank_map(const DenseMatrix& points, const NeighborhoodSet& nbr,
                                               double tol, Orientation orient = Orientation::Columns) {
  if (!(tol > 0.0)) throw InvalidArgument("local_rank_map: tol must be positive");
  std::vector<std::size_t> ranks(nbr.centers);
  for (std::size_t x = 0; x < nbr.centers; ++x) {
    const SvdFactors f = svd_thin(gather(nbr, points, x, orient));
    ranks[x] = numerical_rank(f.S, tol);
  }
  return ranks;
}

inline std::vector<std::size_t> local_rank_map(const PatchMatrix& p, const NeighborhoodSet& nbr, double tol) {
  return local_rank_map(p.columns, nbr, tol, Orientation::Columns);
}

}  // namespace mlr

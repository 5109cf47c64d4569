#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/image.hpp"
#include "mlr/linalg/svd.hpp"
#include "mlr/manifold/graph.hpp"
#include "mlr/manifold/neighborhood.hpp"
#include "mlr/manifold/patch.hpp"

namespace mlr {

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double residual = 0.0;      // as written to CSV (normalized where the solver says so)
  double raw_residual = 0.0;  // unnormalized value
};

struct ConvergenceTrace {
  std::vector<TraceRow> rows;

  void write_csv(std::ostream& os) const {
    os << "iter,objective,residual\n";
    os.precision(17);
    for (const auto& r : rows) os << r.iter << ',' << r.objective << ',' << r.residual << '\n';
  }
};

// Operators derived from the current manifold; rebuilt on every outer iteration.
struct ManifoldOperators {
  PatchConfig cfg;
  std::size_t m = 0;
  std::size_t n = 0;
  NeighborhoodSet nbr;
  AffinityGraph graph;
  ImageGrid weights;  // diagonal of W
};

inline ManifoldOperators build_manifold(const ImageGrid& f, const PatchConfig& cfg) {
  cfg.validate(f.size());
  ManifoldOperators ops{cfg, f.rows(), f.cols(), {}, {}, {}};
  const PatchMatrix pf = patch_transform(f, cfg);
  ops.nbr = knn_build(pf.columns, cfg.knn_k);
  ops.graph = affinity_laplacian(ops.nbr);
  ops.weights = pixel_occurrence(ops.nbr, cfg, f.rows(), f.cols());
  return ops;
}

namespace detail {

// beta_x = T_{t}(Q_x P f + D_x) for all x. Returns sum of ||beta_x||_*.
inline double shrink_blocks(const PatchMatrix& pf, const NeighborhoodSet& nbr, std::vector<DenseMatrix>& beta,
                            const std::vector<DenseMatrix>& dual, double threshold) {
  double nuclear = 0.0;
  for (std::size_t x = 0; x < nbr.centers; ++x) {
    DenseMatrix block = gather(nbr, pf.columns, x);
    block += dual[x];
    SvtResult r = svt_with_norm(block, threshold);
    nuclear += r.nuclear_norm;
    beta[x] = std::move(r.value);
  }
  return nuclear;
}

// P^T sum_x Q_x^T (beta_x - D_x), accumulated in center order.
inline ImageGrid backproject_blocks(const ManifoldOperators& ops, const std::vector<DenseMatrix>& beta,
                                    const std::vector<DenseMatrix>& dual) {
  const PatchIndexMap map(ops.cfg.eta, ops.m, ops.n);
  ImageGrid out(ops.m, ops.n);
  const std::size_t d = ops.cfg.patch_dim();
  for (std::size_t x = 0; x < ops.nbr.centers; ++x) {
    const auto idx = ops.nbr.neighbors(x);
    const DenseMatrix& b = beta[x];
    const DenseMatrix& u = dual[x];
    for (std::size_t s = 0; s < d; ++s) {
      const double* br = b.row(s).data();
      const double* ur = u.row(s).data();
      for (std::size_t j = 0; j < idx.size(); ++j) out[map.pixel(idx[j], s)] += br[j] - ur[j];
    }
  }
  return out;
}

// sum_x ||Q_x P f - beta_x||_F.
inline double constraint_residual(const PatchMatrix& pf, const NeighborhoodSet& nbr,
                                  const std::vector<DenseMatrix>& beta) {
  double total = 0.0;
  for (std::size_t x = 0; x < nbr.centers; ++x) {
    DenseMatrix diff = gather(nbr, pf.columns, x);
    diff -= beta[x];
    total += frobenius_norm(diff);
  }
  return total;
}

// D_x += Q_x P f - beta_x. Returns sum_x ||Q_x P f - beta_x||_F.
inline double update_duals(const PatchMatrix& pf, const NeighborhoodSet& nbr, const std::vector<DenseMatrix>& beta,
                           std::vector<DenseMatrix>& dual) {
  double total = 0.0;
  for (std::size_t x = 0; x < nbr.centers; ++x) {
    DenseMatrix diff = gather(nbr, pf.columns, x);
    diff -= beta[x];
    total += frobenius_norm(diff);
    dual[x] += diff;
  }
  return total;
}

inline std::vector<DenseMatrix> gather_all(const PatchMatrix& pf, const NeighborhoodSet& nbr) {
  std::vector<DenseMatrix> blocks;
  blocks.reserve(nbr.centers);
  for (std::size_t x = 0; x < nbr.centers; ++x) blocks.push_back(gather(nbr, pf.columns, x));
  return blocks;
}

inline std::vector<DenseMatrix> zero_blocks(const NeighborhoodSet& nbr, std::size_t rows) {
  return std::vector<DenseMatrix>(nbr.centers, DenseMatrix(rows, nbr.list_size()));
}

inline void require_finite(const ImageGrid& f, const char* where) {
  if (!f.all_finite())
    throw NumericalFailure(std::string(where) + ": non-finite value in the image iterate");
}

}  // namespace detail

}  // namespace mlr

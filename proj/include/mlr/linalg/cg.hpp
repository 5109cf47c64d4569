#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/linalg/dense.hpp"

namespace mlr {

// y = A x for a symmetric positive definite A.
using LinearMap = std::function<void(std::span<const double> x, std::span<double> y)>;

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
};

// Conjugate gradients. Stops once ||A x - b|| <= tol * ||b||. Throws
// IndefiniteSystem when p'Ap <= 0 and NonConvergence (carrying the best
// iterate) when max_iter is exhausted.
inline CgResult cg_solve(const LinearMap& apply, std::span<const double> b, double tol, int max_iter,
                         std::optional<std::span<const double>> x0 = std::nullopt) {
  if (!(tol > 0.0)) throw InvalidArgument("cg_solve: tol must be positive");
  const std::size_t n = b.size();
  CgResult res;
  res.x.assign(n, 0.0);
  if (x0) {
    if (x0->size() != n) throw InvalidArgument("cg_solve: initial guess size mismatch");
    res.x.assign(x0->begin(), x0->end());
  }
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.x.assign(n, 0.0);
    return res;
  }

  std::vector<double> r(n), p(n), ap(n);
  apply(res.x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  double rr = dot(r, r);
  p = r;

  std::vector<double> best = res.x;
  double best_rel = std::sqrt(rr) / bnorm;
  res.relative_residual = best_rel;
  if (best_rel <= tol) return res;

  for (int it = 1; it <= max_iter; ++it) {
    apply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      std::ostringstream msg;
      msg << "cg_solve: non-positive curvature p'Ap = " << pap << " at iteration " << it
          << "; the system is not positive definite";
      throw IndefiniteSystem(msg.str());
    }
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot(r, r);
    const double rel = std::sqrt(rr_new) / bnorm;
    res.iterations = it;
    res.relative_residual = rel;
    if (rel < best_rel) {
      best_rel = rel;
      best = res.x;
    }
    if (rel <= tol) {
      // The recursive residual drifts from the true one; confirm before
      // reporting success.
      apply(res.x, ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
      const double true_rel = norm2(r) / bnorm;
      res.relative_residual = true_rel;
      if (true_rel <= tol) return res;
      rr = dot(r, r);
      p = r;
      continue;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  std::ostringstream msg;
  msg << "cg_solve: no convergence after " << max_iter << " iterations (relative residual " << best_rel
      << ", target " << tol << ")";
  throw NonConvergence(msg.str(), std::move(best), best_rel, max_iter);
}

}  // namespace mlr

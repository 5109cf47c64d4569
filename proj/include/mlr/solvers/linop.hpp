#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/image.hpp"
#include "mlr/linalg/cg.hpp"
#include "mlr/linalg/sparse.hpp"
#include "mlr/rng.hpp"
#include "mlr/solvers/common.hpp"

namespace mlr {

// A : image (rows*cols pixels, row-major) -> measurement vector.
struct LinearDegradation {
  std::size_t measurements = 0;
  std::size_t pixels = 0;
  LinearMap apply;
  LinearMap adjoint;
  std::optional<SparseOperator> matrix;

  static LinearDegradation from_sparse(SparseOperator a) {
    LinearDegradation op;
    op.measurements = a.rows();
    op.pixels = a.cols();
    op.matrix = std::move(a);
    op.bind_matrix();
    return op;
  }

  static LinearDegradation identity(std::size_t n) { return from_sparse(SparseOperator::identity(n)); }

  // apply/adjoint of a matrix-backed operator point into `matrix`, so
  // copies and moves rebind them.
  LinearDegradation() = default;
  LinearDegradation(const LinearDegradation& o)
      : measurements(o.measurements), pixels(o.pixels), apply(o.apply), adjoint(o.adjoint), matrix(o.matrix) {
    if (matrix) bind_matrix();
  }
  LinearDegradation& operator=(const LinearDegradation& o) {
    if (this != &o) {
      measurements = o.measurements;
      pixels = o.pixels;
      apply = o.apply;
      adjoint = o.adjoint;
      matrix = o.matrix;
      if (matrix) bind_matrix();
    }
    return *this;
  }
  LinearDegradation(LinearDegradation&& o) noexcept { *this = std::move(o); }
  LinearDegradation& operator=(LinearDegradation&& o) noexcept {
    measurements = o.measurements;
    pixels = o.pixels;
    apply = std::move(o.apply);
    adjoint = std::move(o.adjoint);
    matrix = std::move(o.matrix);
    if (matrix) bind_matrix();
    return *this;
  }

  std::vector<double> forward(std::span<const double> f) const {
    if (f.size() != pixels) throw InvalidArgument("LinearDegradation: image size mismatch");
    std::vector<double> y(measurements);
    apply(f, y);
    return y;
  }
  std::vector<double> backward(std::span<const double> y) const {
    if (y.size() != measurements) throw InvalidArgument("LinearDegradation: measurement size mismatch");
    std::vector<double> f(pixels);
    adjoint(y, f);
    return f;
  }

private:
  void bind_matrix() {
    const SparseOperator* m = &*matrix;
    apply = [m](std::span<const double> x, std::span<double> y) { spmv_into(*m, x, y, false); };
    adjoint = [m](std::span<const double> x, std::span<double> y) { spmv_into(*m, x, y, true); };
  }
};

// Mean over non-overlapping s x s blocks: (m/s) x (n/s) measurements.
inline LinearDegradation build_average_operator(std::size_t m, std::size_t n, std::size_t s) {
  if (s == 0 || m == 0 || n == 0) throw InvalidArgument("build_average_operator: sizes must be positive");
  if (m % s != 0 || n % s != 0)
    throw InvalidArgument("build_average_operator: block size " + std::to_string(s) + " does not divide " +
                          std::to_string(m) + "x" + std::to_string(n));
  const std::size_t lm = m / s, ln = n / s;
  const double w = 1.0 / static_cast<double>(s * s);
  std::vector<Triplet> t;
  t.reserve(m * n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) t.push_back({(r / s) * ln + c / s, r * n + c, w});
  return LinearDegradation::from_sparse(SparseOperator::from_triplets(lm * ln, m * n, std::move(t)));
}

enum class LinopInit {
  Random,        // uniform in [init_lo, init_hi]
  LeastSquares,  // init_iters CG steps on A^T A f = A^T g from zero
};

struct LinopProblem {
  LinearDegradation op;
  std::vector<double> g;
  PatchConfig cfg;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double mu1 = 1.0;
  double mu2 = 1.0;
  int outer_iters = 6;
  int inner_iters = 1;
  double tol = 1e-8;
  int cg_max_iter = 2000;
  std::uint64_t seed = 0;
  LinopInit init = LinopInit::Random;
  double init_lo = 0.0;
  double init_hi = 255.0;
  int init_iters = 20;
  std::optional<ImageGrid> initial;  // overrides `init` when set
};

struct LinopState {
  ImageGrid f;
  std::vector<DenseMatrix> beta;
  std::vector<DenseMatrix> dual1;
  std::vector<double> dual2;  // measurement space
};

struct LinopSweepReport {
  double nuclear_sum = 0.0;
  double fidelity = 0.0;  // ||A f - g|| / ||g||
  int cg_iterations = 0;
};

struct LinopResult {
  ImageGrid image;
  ConvergenceTrace trace;
};

namespace detail {

inline void validate(const LinopProblem& p) {
  if (p.rows == 0 || p.cols == 0) throw InvalidArgument("linop: empty image shape");
  if (!p.op.apply || !p.op.adjoint) throw InvalidArgument("linop: operator is not set");
  if (p.op.pixels != p.rows * p.cols) throw InvalidArgument("linop: operator column count does not match the image");
  if (p.op.measurements != p.g.size()) throw InvalidArgument("linop: data length does not match the operator");
  if (!(p.mu1 > 0.0) || !(p.mu2 > 0.0)) throw InvalidArgument("linop: mu1 and mu2 must be positive");
  if (p.inner_iters < 1) throw InvalidArgument("linop: inner iterations must be at least 1");
  if (p.outer_iters < 0) throw InvalidArgument("linop: outer iterations must be non-negative");
  if (!(p.tol > 0.0)) throw InvalidArgument("linop: tol must be positive");
  for (double v : p.g)
    if (!std::isfinite(v)) throw InvalidInput("linop: measurement data is not finite");
  if (p.initial && (p.initial->rows() != p.rows || p.initial->cols() != p.cols))
    throw InvalidArgument("linop: initial image shape mismatch");
  p.cfg.validate(p.rows * p.cols);
}

}  // namespace detail

// ||A f - g|| / ||g|| (absolute when g = 0).
inline double relative_fidelity(const LinearDegradation& op, std::span<const double> f, std::span<const double> g) {
  const std::vector<double> af = op.forward(f);
  double num = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) num += (af[i] - g[i]) * (af[i] - g[i]);
  const double den = norm2(g);
  return den > 0.0 ? std::sqrt(num) / den : std::sqrt(num);
}

// Least-squares estimate by a fixed number of CG steps on the normal
// equations, started from zero (minimum-norm direction for singular A^T A).
inline ImageGrid least_squares(const LinearDegradation& op, std::span<const double> g, std::size_t rows,
                               std::size_t cols, int iters) {
  if (op.pixels != rows * cols) throw InvalidArgument("least_squares: operator column count does not match");
  const std::vector<double> b = op.backward(g);
  std::vector<double> tmp(op.measurements);
  LinearMap normal = [&](std::span<const double> x, std::span<double> y) {
    op.apply(x, tmp);
    op.adjoint(tmp, y);
  };
  std::vector<double> x(b.size(), 0.0), r = b, p = b, ap(b.size());
  double rr = dot(r, r);
  for (int it = 0; it < iters && rr > 0.0; ++it) {
    normal(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double a = rr / pap;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += a * p[i];
      r[i] -= a * ap[i];
    }
    const double rr_new = dot(r, r);
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = r[i] + (rr_new / rr) * p[i];
    rr = rr_new;
  }
  return ImageGrid(rows, cols, std::move(x));
}

inline ImageGrid initialize_linop(const LinopProblem& p) {
  if (p.initial) return *p.initial;
  if (p.init == LinopInit::LeastSquares) return least_squares(p.op, p.g, p.rows, p.cols, p.init_iters);
  SplitMix64 rng(p.seed);
  ImageGrid f(p.rows, p.cols);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.uniform(p.init_lo, p.init_hi);
  return f;
}

// Fresh patch-side state on a new manifold: beta = Q P f, D1 = 0. The
// measurement-side dual is carried over by the caller.
inline LinopState start_linop_sweeps(const ImageGrid& f, const ManifoldOperators& ops, std::vector<double> dual2) {
  const PatchMatrix pf = patch_transform(f, ops.cfg);
  return LinopState{f, detail::gather_all(pf, ops.nbr), detail::zero_blocks(ops.nbr, ops.cfg.patch_dim()),
                    std::move(dual2)};
}

inline LinopSweepReport inner_sweep_linop(LinopState& state, const ManifoldOperators& ops, const LinopProblem& prob) {
  const std::size_t npix = state.f.size();
  const LinearDegradation& op = prob.op;
  LinopSweepReport report;

  {
    const PatchMatrix pf = patch_transform(state.f, ops.cfg);
    report.nuclear_sum = detail::shrink_blocks(pf, ops.nbr, state.beta, state.dual1, 1.0 / prob.mu1);
  }

  // (mu1 W + mu2 A^T A) f = mu1 P^T sum Q^T (beta - D1) + mu2 A^T (g - D2)
  const ImageGrid patch_rhs = detail::backproject_blocks(ops, state.beta, state.dual1);
  std::vector<double> gd(prob.g.size());
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] = prob.g[i] - state.dual2[i];
  const std::vector<double> meas_rhs = op.backward(gd);
  std::vector<double> b(npix);
  for (std::size_t i = 0; i < npix; ++i) b[i] = prob.mu1 * patch_rhs[i] + prob.mu2 * meas_rhs[i];

  std::vector<double> tmp(op.measurements), at(npix);
  const double mu1 = prob.mu1, mu2 = prob.mu2;
  const auto& w = ops.weights;
  LinearMap system = [&](std::span<const double> x, std::span<double> y) {
    op.apply(x, tmp);
    op.adjoint(tmp, at);
    for (std::size_t i = 0; i < npix; ++i) y[i] = mu1 * w[i] * x[i] + mu2 * at[i];
  };
  const CgResult sol = cg_solve(system, b, prob.tol, prob.cg_max_iter, std::span<const double>(state.f.vec()));
  report.cg_iterations = sol.iterations;
  state.f.vec() = sol.x;
  detail::require_finite(state.f, "linop");

  const PatchMatrix pf = patch_transform(state.f, ops.cfg);
  detail::update_duals(pf, ops.nbr, state.beta, state.dual1);
  const std::vector<double> af = op.forward(state.f.vec());
  double num = 0.0;
  for (std::size_t i = 0; i < af.size(); ++i) {
    const double r = af[i] - prob.g[i];
    state.dual2[i] += r;
    num += r * r;
  }
  const double den = norm2(prob.g);
  report.fidelity = den > 0.0 ? std::sqrt(num) / den : std::sqrt(num);
  return report;
}

inline void run_linop_sweeps(LinopState& state, const ManifoldOperators& ops, const LinopProblem& prob, int sweeps,
                             ConvergenceTrace& trace) {
  for (int l = 0; l < sweeps; ++l) {
    const LinopSweepReport rep = inner_sweep_linop(state, ops, prob);
    TraceRow row;
    row.iter = static_cast<int>(trace.rows.size()) + 1;
    row.objective = rep.nuclear_sum;
    row.residual = rep.fidelity;
    row.raw_residual = rep.fidelity;
    if (!std::isfinite(row.objective) || !std::isfinite(row.residual))
      throw NumericalFailure("linop: non-finite objective or residual at sweep " + std::to_string(row.iter));
    trace.rows.push_back(row);
  }
}

// Alternates manifold rebuilds with split-Bregman sweeps for A f = g.
inline LinopResult solve_linop(const LinopProblem& prob) {
  detail::validate(prob);
  LinopResult result;
  result.image = initialize_linop(prob);
  std::vector<double> dual2(prob.g.size(), 0.0);
  for (int k = 0; k < prob.outer_iters; ++k) {
    const ManifoldOperators ops = build_manifold(result.image, prob.cfg);
    LinopState state = start_linop_sweeps(result.image, ops, std::move(dual2));
    run_linop_sweeps(state, ops, prob, prob.inner_iters, result.trace);
    result.image = std::move(state.f);
    dual2 = std::move(state.dual2);
  }
  return result;
}

}  // namespace mlr

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/image.hpp"
#include "mlr/linalg/cg.hpp"
#include "mlr/rng.hpp"
#include "mlr/solvers/common.hpp"

namespace mlr {

// Recover f from h known on the mask, with f == h on the mask.
struct InpaintProblem {
  ImageGrid data;
  Mask known;
  PatchConfig cfg;
  std::optional<ImageGrid> initial;  // warm start; replaces the random fill off the mask
};

struct SolverParams {
  double lambda = 0.0;  // diffusion weight; negative values sharpen (inverse diffusion)
  double mu = 1.0;      // augmented Lagrangian weight; SVT threshold is 1 / mu
  int outer_iters = 6;
  int inner_iters = 1;
  double tol = 1e-8;  // relative residual target of the f-step solves
  int cg_max_iter = 2000;
  std::uint64_t seed = 0;
};

struct SweepState {
  ImageGrid f;
  std::vector<DenseMatrix> beta;
  std::vector<DenseMatrix> dual;
};

// What one sweep measured: sum of nuclear norms of the new beta blocks and
// the raw constraint residual sum_x ||Q_x P f - beta_x||.
struct SweepReport {
  double nuclear_sum = 0.0;
  double residual = 0.0;
  int cg_iterations = 0;
};

struct InpaintResult {
  ImageGrid image;
  ConvergenceTrace trace;
};

namespace detail {

inline void validate(const InpaintProblem& prob) {
  if (prob.data.empty()) throw InvalidArgument("inpaint: empty image");
  if (prob.known.rows != prob.data.rows() || prob.known.cols != prob.data.cols())
    throw InvalidArgument("inpaint: mask shape does not match the image");
  if (prob.known.count() == 0) throw InvalidArgument("inpaint: the known set is empty");
  for (std::size_t i = 0; i < prob.data.size(); ++i)
    if (prob.known[i] && !std::isfinite(prob.data[i]))
      throw InvalidInput("inpaint: data is not finite on the known set");
  if (prob.initial) {
    if (!prob.initial->same_shape(prob.data)) throw InvalidArgument("inpaint: initial image shape mismatch");
    if (!prob.initial->all_finite()) throw InvalidInput("inpaint: initial image is not finite");
  }
  prob.cfg.validate(prob.data.size());
}

inline void validate(const SolverParams& p) {
  if (!(p.mu > 0.0)) throw InvalidArgument("mu must be positive");
  if (p.inner_iters < 1) throw InvalidArgument("inner iterations must be at least 1");
  if (p.outer_iters < 0) throw InvalidArgument("outer iterations must be non-negative");
  if (!(p.tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (!std::isfinite(p.lambda)) throw InvalidArgument("lambda must be finite");
}

}  // namespace detail

// Keep h on the known set, fill the rest with uniform values drawn
// from the observed range.
inline ImageGrid initialize_fill(const InpaintProblem& prob, std::uint64_t seed) {
  if (prob.known.rows != prob.data.rows() || prob.known.cols != prob.data.cols())
    throw InvalidArgument("initialize_fill: mask shape does not match the image");
  if (prob.known.count() == 0) throw InvalidArgument("initialize_fill: the known set is empty");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < prob.data.size(); ++i)
    if (prob.known[i]) {
      lo = std::min(lo, prob.data[i]);
      hi = std::max(hi, prob.data[i]);
    }
  SplitMix64 rng(seed);
  ImageGrid f = prob.data;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!prob.known[i]) f[i] = rng.uniform(lo, hi);
  return f;
}

// Fresh inner-loop state for the manifold in `ops`: beta = Q P f, D = 0.
inline SweepState start_sweeps(const ImageGrid& f, const ManifoldOperators& ops) {
  const PatchMatrix pf = patch_transform(f, ops.cfg);
  return SweepState{f, detail::gather_all(pf, ops.nbr), detail::zero_blocks(ops.nbr, ops.cfg.patch_dim())};
}

// One split-Bregman sweep (Steps 1.1 to 1.4) on a fixed manifold.
inline SweepReport inner_sweep(SweepState& state, const ManifoldOperators& ops, const InpaintProblem& prob,
                               const SolverParams& params) {
  const std::size_t npix = state.f.size();
  SweepReport report;

  // 1.1 singular value thresholding of every local block.
  {
    const PatchMatrix pf = patch_transform(state.f, ops.cfg);
    report.nuclear_sum = detail::shrink_blocks(pf, ops.nbr, state.beta, state.dual, 1.0 / params.mu);
  }

  // 1.2 Dirichlet problem (-lambda L + mu W) f = mu P^T sum Q^T (beta - D) on the unknown pixels.
  std::vector<std::size_t> free_idx;
  for (std::size_t i = 0; i < npix; ++i)
    if (!prob.known[i]) free_idx.push_back(i);

  if (!free_idx.empty()) {
    const ImageGrid rhs_img = detail::backproject_blocks(ops, state.beta, state.dual);
    const double lambda = params.lambda, mu = params.mu;
    const auto& lap = ops.graph.laplacian;
    const auto& w = ops.weights;
    std::vector<double> full(npix), lap_out(npix);

    auto apply_full = [&](std::span<const double> v, std::span<double> out) {
      if (lambda != 0.0) spmv_into(lap, v, lap_out);
      for (std::size_t i = 0; i < npix; ++i) out[i] = mu * w[i] * v[i] - (lambda != 0.0 ? lambda * lap_out[i] : 0.0);
    };

    // b_U = mu * rhs_U - A_{U,Omega} h_Omega
    std::vector<double> boundary(npix, 0.0), a_boundary(npix);
    for (std::size_t i = 0; i < npix; ++i)
      if (prob.known[i]) boundary[i] = prob.data[i];
    apply_full(boundary, a_boundary);
    std::vector<double> b(free_idx.size()), x0(free_idx.size());
    for (std::size_t k = 0; k < free_idx.size(); ++k) {
      b[k] = mu * rhs_img[free_idx[k]] - a_boundary[free_idx[k]];
      x0[k] = state.f[free_idx[k]];
    }

    std::vector<double> full_out(npix);
    LinearMap restricted = [&](std::span<const double> x, std::span<double> y) {
      std::fill(full.begin(), full.end(), 0.0);
      for (std::size_t k = 0; k < free_idx.size(); ++k) full[free_idx[k]] = x[k];
      apply_full(full, full_out);
      for (std::size_t k = 0; k < free_idx.size(); ++k) y[k] = full_out[free_idx[k]];
    };

    CgResult sol;
    try {
      sol = cg_solve(restricted, b, params.tol, params.cg_max_iter, std::span<const double>(x0));
    } catch (const IndefiniteSystem& e) {
      std::ostringstream msg;
      msg << "inpaint: the f-step system is indefinite for lambda = " << lambda << " and mu = " << mu
          << "; increase mu so that mu W dominates the inverse diffusion (" << e.what() << ")";
      throw IndefiniteSystem(msg.str());
    }
    report.cg_iterations = sol.iterations;
    for (std::size_t k = 0; k < free_idx.size(); ++k) state.f[free_idx[k]] = sol.x[k];
  }

  // 1.3 hard data constraint.
  for (std::size_t i = 0; i < npix; ++i)
    if (prob.known[i]) state.f[i] = prob.data[i];
  detail::require_finite(state.f, "inpaint");

  // 1.4 Bregman update of the duals.
  const PatchMatrix pf = patch_transform(state.f, ops.cfg);
  report.residual = detail::update_duals(pf, ops.nbr, state.beta, state.dual);
  return report;
}

// Objective sum_x ||beta_x||_* + (lambda / 2) ||grad f||^2 and raw residual
// sum_x ||Q_x P f - beta_x|| of a state.
inline TraceRow trace_metrics(const SweepState& state, const ManifoldOperators& ops, const SolverParams& params) {
  TraceRow row;
  for (const auto& b : state.beta) row.objective += nuclear_norm(b);
  if (params.lambda != 0.0) row.objective += 0.5 * params.lambda * nonlocal_gradient_energy(ops.graph, state.f.pixels());
  const PatchMatrix pf = patch_transform(state.f, ops.cfg);
  row.raw_residual = detail::constraint_residual(pf, ops.nbr, state.beta);
  row.residual = row.raw_residual;
  return row;
}

// Runs sweeps on a fixed manifold, appending trace rows. Residuals are
// normalized by the first raw residual recorded in `trace`.
inline void run_sweeps(SweepState& state, const ManifoldOperators& ops, const InpaintProblem& prob,
                       const SolverParams& params, int sweeps, ConvergenceTrace& trace) {
  for (int l = 0; l < sweeps; ++l) {
    const SweepReport rep = inner_sweep(state, ops, prob, params);
    TraceRow row;
    row.iter = static_cast<int>(trace.rows.size()) + 1;
    row.objective = rep.nuclear_sum;
    if (params.lambda != 0.0)
      row.objective += 0.5 * params.lambda * nonlocal_gradient_energy(ops.graph, state.f.pixels());
    row.raw_residual = rep.residual;
    const double base = trace.rows.empty() ? rep.residual : trace.rows.front().raw_residual;
    row.residual = base > 0.0 ? rep.residual / base : 0.0;
    if (!std::isfinite(row.objective) || !std::isfinite(row.residual))
      throw NumericalFailure("inpaint: non-finite objective or residual at sweep " + std::to_string(row.iter));
    trace.rows.push_back(row);
  }
}

// Alternates manifold rebuilds (KNN, W, Laplacian) with inner
// split-Bregman sweeps.
inline InpaintResult solve_inpaint(const InpaintProblem& prob, const SolverParams& params) {
  detail::validate(prob);
  detail::validate(params);
  InpaintResult result;
  if (prob.initial) {
    result.image = *prob.initial;
    for (std::size_t i = 0; i < result.image.size(); ++i)
      if (prob.known[i]) result.image[i] = prob.data[i];
  } else {
    result.image = initialize_fill(prob, params.seed);
  }
  if (prob.known.count() == prob.data.size()) {
    result.image = prob.data;
    return result;
  }
  for (int k = 0; k < params.outer_iters; ++k) {
    const ManifoldOperators ops = build_manifold(result.image, prob.cfg);
    SweepState state = start_sweeps(result.image, ops);
    run_sweeps(state, ops, prob, params, params.inner_iters, result.trace);
    result.image = std::move(state.f);
  }
  return result;
}

}  // namespace mlr

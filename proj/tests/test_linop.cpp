#include <gtest/gtest.h>

#include <cmath>

#include "mlr/ct/fanbeam.hpp"
#include "mlr/io/metrics.hpp"
#include "mlr/solvers/linop.hpp"

using namespace mlr;

namespace {

ImageGrid ramp(std::size_t n) {
  ImageGrid f(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) f(r, c) = 20.0 + 3.0 * double(r) + 2.0 * double(c);
  return f;
}

ImageGrid block_upsample(std::span<const double> low, std::size_t m, std::size_t n, std::size_t s) {
  ImageGrid f(m, n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) f(r, c) = low[(r / s) * (n / s) + c / s];
  return f;
}

double relative_error(const ImageGrid& f, const ImageGrid& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    num += (f[i] - ref[i]) * (f[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / den);
}

// W is about 9 (K+1) in the interior, so mu1 = 0.01 keeps the two penalties comparable.
LinopProblem identity_toy(double mu1 = 0.01, double mu2 = 1.0) {
  LinopProblem p;
  const ImageGrid truth = ramp(8);
  p.op = LinearDegradation::identity(64);
  p.g = truth.vec();
  p.cfg = PatchConfig::from_patch_size(3, 5);
  p.rows = p.cols = 8;
  p.mu1 = mu1;
  p.mu2 = mu2;
  p.tol = 1e-10;
  return p;
}

}  // namespace

TEST(AverageOperator, PreservesConstants) {
  const LinearDegradation a = build_average_operator(6, 4, 2);
  const std::vector<double> f(24, 5.0);
  for (double v : a.forward(f)) EXPECT_DOUBLE_EQ(v, 5.0);
}

TEST(AverageOperator, HandExpansion) {
  std::vector<double> f(16);
  for (std::size_t i = 0; i < 16; ++i) f[i] = double(i + 1);
  const auto y = build_average_operator(4, 4, 2).forward(f);
  EXPECT_EQ(y, (std::vector<double>{3.5, 5.5, 11.5, 13.5}));
}

TEST(AverageOperator, RowsSumToOne) {
  const LinearDegradation a = build_average_operator(6, 9, 3);
  ASSERT_TRUE(a.matrix.has_value());
  for (std::size_t r = 0; r < a.matrix->rows(); ++r) {
    double s = 0.0;
    for (double v : a.matrix->row_values(r)) s += v;
    EXPECT_DOUBLE_EQ(s, 1.0);
  }
}

TEST(AverageOperator, AdjointIdentity) {
  SplitMix64 rng(31);
  const LinearDegradation a = build_average_operator(8, 12, 4);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> f(96), y(6);
    for (double& v : f) v = rng.normal();
    for (double& v : y) v = rng.normal();
    EXPECT_NEAR(dot(a.forward(f), y), dot(f, a.backward(y)), 1e-12);
  }
}

TEST(AverageOperator, RejectsBadFactor) {
  EXPECT_THROW(build_average_operator(5, 4, 2), InvalidArgument);
  EXPECT_THROW(build_average_operator(4, 4, 0), InvalidArgument);
}

TEST(LinearDegradation, CopiesStayBoundToTheirOwnMatrix) {
  LinearDegradation a = build_average_operator(4, 4, 2);
  LinearDegradation b = a;
  LinearDegradation c = std::move(a);
  std::vector<double> f(16, 2.0);
  EXPECT_EQ(b.forward(f), c.forward(f));
  EXPECT_EQ(b.forward(f), (std::vector<double>(4, 2.0)));
}

TEST(LeastSquares, OneStepOnAverageIsBlockUpsample) {
  const ImageGrid truth = ramp(8);
  const LinearDegradation a = build_average_operator(8, 8, 2);
  const auto low = a.forward(truth.vec());
  const ImageGrid ls = least_squares(a, low, 8, 8, 1);
  const ImageGrid up = block_upsample(low, 8, 8, 2);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(ls[i], up[i], 1e-12);
}

TEST(InnerSweepLinop, ZeroDataIsAFixedPoint) {
  LinopProblem p = identity_toy();
  p.g.assign(64, 0.0);
  const ImageGrid f(8, 8, 0.0);
  const ManifoldOperators ops = build_manifold(f, p.cfg);
  LinopState s = start_linop_sweeps(f, ops, std::vector<double>(64, 0.0));
  inner_sweep_linop(s, ops, p);
  for (double v : s.dual2) EXPECT_EQ(v, 0.0);
  for (double v : s.f.vec()) EXPECT_EQ(v, 0.0);
}

TEST(InnerSweepLinop, MeasurementDualAccumulatesResidual) {
  LinopProblem p = identity_toy();
  const ImageGrid f0 = initialize_linop(p);
  const ManifoldOperators ops = build_manifold(f0, p.cfg);
  LinopState s = start_linop_sweeps(f0, ops, std::vector<double>(64, 0.0));
  for (int l = 0; l < 3; ++l) {
    const std::vector<double> before = s.dual2;
    inner_sweep_linop(s, ops, p);
    const auto af = p.op.forward(s.f.vec());
    for (std::size_t i = 0; i < 64; ++i) ASSERT_NEAR(s.dual2[i] - before[i], af[i] - p.g[i], 1e-9);
  }
}

TEST(InnerSweepLinop, SystemIsPositiveDefiniteForAnyWeights) {
  for (double mu1 : {1e-3, 0.1, 1.0, 50.0})
    for (double mu2 : {1e-3, 1.0, 1e3}) {
      LinopProblem p = identity_toy(mu1, mu2);
      p.op = build_average_operator(8, 8, 2);
      p.g = p.op.forward(ramp(8).vec());
      const ImageGrid f0 = initialize_linop(p);
      const ManifoldOperators ops = build_manifold(f0, p.cfg);
      LinopState s = start_linop_sweeps(f0, ops, std::vector<double>(16, 0.0));
      EXPECT_NO_THROW(for (int l = 0; l < 3; ++l) inner_sweep_linop(s, ops, p)) << mu1 << " " << mu2;
    }
}

TEST(InnerSweepLinop, IdentityToyReachesDataIn50Sweeps) {
  const LinopProblem p = identity_toy();
  const ImageGrid f0 = initialize_linop(p);
  const ManifoldOperators ops = build_manifold(f0, p.cfg);
  LinopState s = start_linop_sweeps(f0, ops, std::vector<double>(64, 0.0));
  ConvergenceTrace trace;
  run_linop_sweeps(s, ops, p, 50, trace);
  EXPECT_LT(relative_fidelity(p.op, s.f.vec(), p.g), 1e-2);
  for (std::size_t i = 40; i < 50; ++i) EXPECT_LE(trace.rows[i].residual, trace.rows[i - 1].residual * (1.0 + 1e-12));
}

TEST(SolveLinop, IdentityConvergesToData) {
  LinopProblem p = identity_toy();
  p.outer_iters = 5;
  p.inner_iters = 10;
  const LinopResult r = solve_linop(p);
  EXPECT_LT(relative_error(r.image, ImageGrid(8, 8, p.g)), 1e-2);
  EXPECT_EQ(r.trace.rows.size(), 50u);
}

TEST(SolveLinop, LargeFidelityWeightApproachesData) {
  LinopProblem p = identity_toy(1.0, 1e3);
  p.outer_iters = 1;
  p.inner_iters = 10;
  const LinopResult r = solve_linop(p);
  EXPECT_LT(relative_error(r.image, ImageGrid(8, 8, p.g)), 1e-3);
}

TEST(SolveLinop, ConstantPhantomFullViewCt) {
  const std::size_t n = 32;
  const ImageGrid truth(n, n, 100.0);
  const FanBeamGeometry geo = FanBeamGeometry::standard(n, 90);
  LinopProblem p;
  p.op = LinearDegradation::from_sparse(build_system_matrix(geo));
  p.g = p.op.forward(truth.vec());
  p.cfg = PatchConfig::from_patch_size(5, 10);
  p.rows = p.cols = n;
  p.mu1 = 0.01;
  p.outer_iters = 3;
  p.inner_iters = 2;
  p.tol = 1e-6;
  const LinopResult r = solve_linop(p);
  EXPECT_LT(relative_error(r.image, truth), 1e-2);
}

TEST(SolveLinop, AverageSuperResolutionBeatsBlockUpsample) {
  const std::size_t n = 32;
  const ImageGrid truth = ramp(n);
  LinopProblem p;
  p.op = build_average_operator(n, n, 2);
  p.g = p.op.forward(truth.vec());
  p.cfg = PatchConfig::from_patch_size(5, 10);
  p.rows = p.cols = n;
  p.outer_iters = 4;
  p.inner_iters = 2;
  p.init = LinopInit::LeastSquares;
  p.init_iters = 1;
  const LinopResult r = solve_linop(p);
  const double base = psnr(block_upsample(p.g, n, n, 2), truth);
  EXPECT_GT(psnr(r.image, truth), base);
}

TEST(SolveLinop, Validation) {
  LinopProblem p = identity_toy();
  p.mu1 = 0.0;
  EXPECT_THROW(solve_linop(p), InvalidArgument);
  p = identity_toy();
  p.g.resize(10);
  EXPECT_THROW(solve_linop(p), InvalidArgument);
  p = identity_toy();
  p.rows = 4;
  EXPECT_THROW(solve_linop(p), InvalidArgument);
}

TEST(SolveLinop, Deterministic) {
  LinopProblem p = identity_toy();
  p.outer_iters = 2;
  p.inner_iters = 2;
  p.seed = 99;
  EXPECT_EQ(solve_linop(p).image, solve_linop(p).image);
}

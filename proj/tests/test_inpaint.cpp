#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlr/io/mask.hpp"
#include "mlr/io/metrics.hpp"
#include "mlr/io/phantom.hpp"
#include "mlr/solvers/inpaint.hpp"

using namespace mlr;

namespace {

InpaintProblem toy_problem(std::uint64_t seed = 7) {
  InpaintProblem p;
  p.data = make_phantom(PhantomKind::Texture, 8);
  p.known = gen_mask({MaskSpec::Kind::RandomRate, 0.5, 2, seed}, 8, 8);
  p.cfg = PatchConfig::from_patch_size(3, 5);
  return p;
}

bool matches_on_mask(const ImageGrid& f, const InpaintProblem& p) {
  for (std::size_t i = 0; i < f.size(); ++i)
    if (p.known[i] && f[i] != p.data[i]) return false;
  return true;
}

}  // namespace

TEST(InitializeFill, FullyObserved) {
  InpaintProblem p = toy_problem();
  p.known = Mask(8, 8, true);
  EXPECT_EQ(initialize_fill(p, 3), p.data);
}

TEST(InitializeFill, DeterministicAndInRange) {
  const InpaintProblem p = toy_problem();
  const ImageGrid a = initialize_fill(p, 5), b = initialize_fill(p, 5), c = initialize_fill(p, 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < p.data.size(); ++i)
    if (p.known[i]) {
      lo = std::min(lo, p.data[i]);
      hi = std::max(hi, p.data[i]);
    }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (p.known[i]) {
      EXPECT_EQ(a[i], p.data[i]);
    } else {
      EXPECT_GE(a[i], lo);
      EXPECT_LE(a[i], hi);
    }
  }
}

TEST(InitializeFill, EmptyMaskRejected) {
  InpaintProblem p = toy_problem();
  p.known = Mask(8, 8, false);
  EXPECT_THROW(initialize_fill(p, 1), InvalidArgument);
}

TEST(InnerSweep, FullyObservedKeepsData) {
  InpaintProblem p = toy_problem();
  p.known = Mask(8, 8, true);
  const ManifoldOperators ops = build_manifold(p.data, p.cfg);
  SweepState s = start_sweeps(p.data, ops);
  inner_sweep(s, ops, p, SolverParams{});
  EXPECT_EQ(s.f, p.data);
}

TEST(InnerSweep, DualsStayZeroAtFixedPoint) {
  InpaintProblem p = toy_problem();
  p.data = ImageGrid(8, 8, 0.0);
  const ManifoldOperators ops = build_manifold(p.data, p.cfg);
  SweepState s = start_sweeps(p.data, ops);
  inner_sweep(s, ops, p, SolverParams{});
  for (const auto& d : s.dual)
    for (double v : d.data()) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 0; i < s.f.size(); ++i) EXPECT_EQ(s.f[i], 0.0);
}

TEST(InnerSweep, ToyResidualDropsWithin30Sweeps) {
  const InpaintProblem p = toy_problem();
  const SolverParams params;
  const ImageGrid f0 = initialize_fill(p, params.seed);
  const ManifoldOperators ops = build_manifold(f0, p.cfg);
  SweepState s = start_sweeps(f0, ops);
  ConvergenceTrace trace;
  run_sweeps(s, ops, p, params, 30, trace);
  ASSERT_EQ(trace.rows.size(), 30u);
  EXPECT_EQ(trace.rows.front().residual, 1.0);
  EXPECT_LT(trace.rows.back().residual, 1e-2);
}

TEST(InnerSweep, HardConstraintAndShrinkageEverySweep) {
  const InpaintProblem p = toy_problem(9);
  SolverParams params;
  params.lambda = 0.5;
  const ImageGrid f0 = initialize_fill(p, 1);
  const ManifoldOperators ops = build_manifold(f0, p.cfg);
  SweepState s = start_sweeps(f0, ops);
  for (int l = 0; l < 10; ++l) {
    std::vector<double> before;
    const PatchMatrix pf = patch_transform(s.f, p.cfg);
    for (std::size_t x = 0; x < ops.nbr.centers; ++x) {
      DenseMatrix b = gather(ops.nbr, pf.columns, x);
      b += s.dual[x];
      before.push_back(nuclear_norm(b));
    }
    inner_sweep(s, ops, p, params);
    ASSERT_TRUE(matches_on_mask(s.f, p));
    for (std::size_t x = 0; x < ops.nbr.centers; ++x) ASSERT_LE(nuclear_norm(s.beta[x]), before[x] + 1e-9);
  }
}

TEST(InnerSweep, StrongInverseDiffusionIsReported) {
  const InpaintProblem p = toy_problem();
  SolverParams params;
  params.lambda = -1000.0;
  params.mu = 0.01;
  const ImageGrid f0 = initialize_fill(p, 0);
  const ManifoldOperators ops = build_manifold(f0, p.cfg);
  SweepState s = start_sweeps(f0, ops);
  try {
    inner_sweep(s, ops, p, params);
    FAIL() << "expected IndefiniteSystem";
  } catch (const IndefiniteSystem& e) {
    EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos);
  }
}

TEST(TraceMetrics, ExactConstraintHasZeroResidual) {
  const InpaintProblem p = toy_problem();
  const ManifoldOperators ops = build_manifold(p.data, p.cfg);
  const SweepState s = start_sweeps(p.data, ops);
  const TraceRow row = trace_metrics(s, ops, SolverParams{});
  EXPECT_EQ(row.raw_residual, 0.0);
  double nuc = 0.0;
  for (const auto& b : s.beta) nuc += nuclear_norm(b);
  EXPECT_EQ(row.objective, nuc);
}

TEST(TraceMetrics, TwoCenterHandComputation) {
  // 1 x 2 image, tau = 1, K = 1: each block is the 1 x 2 row [f(x), f(other)].
  const ImageGrid f(1, 2, std::vector<double>{3.0, 7.0});
  const ManifoldOperators ops = build_manifold(f, PatchConfig::from_patch_size(1, 1));
  SweepState s = start_sweeps(f, ops);
  s.beta[0] = DenseMatrix(1, 2, {1.0, 2.0});
  s.beta[1] = DenseMatrix(1, 2, {6.0, 3.0});
  SolverParams params;
  params.lambda = 2.0;
  const TraceRow row = trace_metrics(s, ops, params);
  // Coincidence-free pair: sigma = 4 at both ends, w = exp(-16 / 16) on the edge.
  const double w = std::exp(-1.0);
  const double nuc = std::sqrt(1.0 + 4.0) + std::sqrt(36.0 + 9.0);
  const double energy = 2.0 * w * 16.0;
  EXPECT_NEAR(row.objective, nuc + 0.5 * 2.0 * energy, 1e-10);
  const double res = std::hypot(3.0 - 1.0, 7.0 - 2.0) + std::hypot(7.0 - 6.0, 3.0 - 3.0);
  EXPECT_NEAR(row.raw_residual, res, 1e-10);
}

TEST(TraceCsv, Header) {
  ConvergenceTrace t;
  t.rows.push_back({1, 2.5, 1.0, 4.0});
  std::ostringstream os;
  t.write_csv(os);
  EXPECT_EQ(os.str(), "iter,objective,residual\n1,2.5,1\n");
}

TEST(SolveInpaint, FullyObservedReturnsData) {
  InpaintProblem p = toy_problem();
  p.known = Mask(8, 8, true);
  EXPECT_EQ(solve_inpaint(p, SolverParams{}).image, p.data);
}

TEST(SolveInpaint, ConstantImageStaysConstant) {
  const double c = 100.0;
  InpaintProblem p;
  p.data = ImageGrid(16, 16, c);
  p.known = gen_mask({MaskSpec::Kind::RandomRate, 0.5, 2, 4}, 16, 16);
  p.cfg = PatchConfig::from_patch_size(3, 8);
  const InpaintResult r = solve_inpaint(p, SolverParams{});
  double dev = 0.0;
  for (std::size_t i = 0; i < r.image.size(); ++i) dev = std::max(dev, std::abs(r.image[i] - c));
  EXPECT_LE(dev, 0.05 * c);
}

TEST(SolveInpaint, TextureBeatsInitialFill) {
  InpaintProblem p;
  p.data = make_phantom(PhantomKind::Texture, 32);
  p.known = gen_mask({MaskSpec::Kind::RandomRate, 0.3, 2, 21}, 32, 32);
  p.cfg = PatchConfig::from_patch_size(5, 10);
  SolverParams params;
  params.outer_iters = 6;
  const InpaintResult r = solve_inpaint(p, params);
  const double init = psnr(initialize_fill(p, params.seed), p.data);
  EXPECT_TRUE(matches_on_mask(r.image, p));
  EXPECT_GT(psnr(r.image, p.data), init);
  EXPECT_EQ(r.trace.rows.size(), 6u);
}

TEST(SolveInpaint, Deterministic) {
  const InpaintProblem p = toy_problem(3);
  SolverParams params;
  params.outer_iters = 2;
  params.inner_iters = 2;
  params.seed = 12;
  const InpaintResult a = solve_inpaint(p, params), b = solve_inpaint(p, params);
  EXPECT_EQ(a.image, b.image);
  ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) EXPECT_EQ(a.trace.rows[i].objective, b.trace.rows[i].objective);
}

TEST(SolveInpaint, WarmStartKeepsData) {
  InpaintProblem p = toy_problem();
  p.initial = ImageGrid(8, 8, 50.0);
  SolverParams params;
  params.outer_iters = 0;
  const InpaintResult r = solve_inpaint(p, params);
  for (std::size_t i = 0; i < r.image.size(); ++i) EXPECT_EQ(r.image[i], p.known[i] ? p.data[i] : 50.0);
}

TEST(SolveInpaint, ParameterValidation) {
  const InpaintProblem p = toy_problem();
  SolverParams params;
  params.mu = 0.0;
  EXPECT_THROW(solve_inpaint(p, params), InvalidArgument);
  params.mu = 1.0;
  params.inner_iters = 0;
  EXPECT_THROW(solve_inpaint(p, params), InvalidArgument);
  InpaintProblem q = toy_problem();
  q.known = Mask(4, 4, true);
  EXPECT_THROW(solve_inpaint(q, SolverParams{}), InvalidArgument);
  q = toy_problem();
  q.initial = ImageGrid(3, 3);
  EXPECT_THROW(solve_inpaint(q, SolverParams{}), InvalidArgument);
}

#include <gtest/gtest.h>

#include "mlr/manifold/patch.hpp"
#include "mlr/rng.hpp"

using namespace mlr;

namespace {

ImageGrid random_image(std::size_t m, std::size_t n, SplitMix64& rng) {
  ImageGrid f(m, n);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.uniform(0.0, 255.0);
  return f;
}

}  // namespace

TEST(SymmetricExtend, ZeroWidthIsIdentity) {
  SplitMix64 rng(1);
  const ImageGrid f = random_image(4, 5, rng);
  EXPECT_EQ(symmetric_extend(f, 0), f);
}

TEST(SymmetricExtend, HalfSampleMirror) {
  const ImageGrid f(1, 2, std::vector<double>{7.0, 9.0});
  const ImageGrid e = symmetric_extend(f, 1);
  ASSERT_EQ(e.rows(), 3u);
  ASSERT_EQ(e.cols(), 4u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(e(r, 0), 7.0);
    EXPECT_EQ(e(r, 1), 7.0);
    EXPECT_EQ(e(r, 2), 9.0);
    EXPECT_EQ(e(r, 3), 9.0);
  }
}

TEST(SymmetricExtend, InteriorEqualsInput) {
  SplitMix64 rng(2);
  const ImageGrid f = random_image(6, 5, rng);
  const ImageGrid e = symmetric_extend(f, 3);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(e(r + 3, c + 3), f(r, c));
}

TEST(SymmetricExtend, MirrorIndexRecurses) {
  EXPECT_EQ(mirror_index(-1, 3), 0u);
  EXPECT_EQ(mirror_index(3, 3), 2u);
  EXPECT_EQ(mirror_index(-4, 3), 2u);
  EXPECT_EQ(mirror_index(6, 3), 0u);
}

TEST(SymmetricExtend, TooWideRejected) {
  EXPECT_THROW(symmetric_extend(ImageGrid(2, 3), 3), InvalidArgument);
}

TEST(PatchTransform, TauOneIsIdentity) {
  SplitMix64 rng(3);
  const ImageGrid f = random_image(3, 4, rng);
  const PatchMatrix p = patch_transform(f, PatchConfig::from_patch_size(1, 1));
  ASSERT_EQ(p.columns.rows(), 1u);
  for (std::size_t x = 0; x < f.size(); ++x) EXPECT_EQ(p.columns(0, x), f[x]);
}

TEST(PatchTransform, ConstantImage) {
  const PatchMatrix p = patch_transform(ImageGrid(5, 5, 42.0), PatchConfig::from_patch_size(3, 2));
  for (double v : p.columns.data()) EXPECT_EQ(v, 42.0);
}

TEST(PatchTransform, CenterColumnIsRowMajorImage) {
  ImageGrid f(3, 3);
  for (std::size_t i = 0; i < 9; ++i) f[i] = double(i + 1);
  const PatchMatrix p = patch_transform(f, PatchConfig::from_patch_size(3, 1));
  const std::size_t center = 1 * 3 + 1;  // pixel (2,2) counted from 1
  for (std::size_t s = 0; s < 9; ++s) EXPECT_EQ(p.columns(s, center), f[s]);
  EXPECT_EQ(p.center_coords[center], (std::pair<std::size_t, std::size_t>{1, 1}));
}

TEST(PatchTransform, ColumnsAreExtensionWindows) {
  SplitMix64 rng(4);
  const ImageGrid f = random_image(5, 7, rng);
  const PatchConfig cfg = PatchConfig::from_patch_size(5, 3);
  const ImageGrid e = symmetric_extend(f, cfg.eta);
  const PatchMatrix p = patch_transform(f, cfg);
  for (std::size_t x = 0; x < f.size(); ++x) {
    const std::size_t r = x / f.cols(), c = x % f.cols();
    for (std::size_t a = 0; a < cfg.tau; ++a)
      for (std::size_t b = 0; b < cfg.tau; ++b) ASSERT_EQ(p.columns(a * cfg.tau + b, x), e(r + a, c + b));
  }
}

TEST(PatchAdjoint, TauOneReshapes) {
  DenseMatrix g(1, 6);
  for (std::size_t i = 0; i < 6; ++i) g(0, i) = double(i) - 2.5;
  const ImageGrid f = patch_adjoint(g, PatchConfig::from_patch_size(1, 1), 2, 3);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(f[i], g(0, i));
}

TEST(PatchAdjoint, InnerProductIdentity) {
  SplitMix64 rng(5);
  const PatchConfig cfg = PatchConfig::from_patch_size(5, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 3 + rng.below(6), n = 3 + rng.below(6);
    const ImageGrid f = random_image(m, n, rng);
    DenseMatrix g(cfg.patch_dim(), m * n);
    for (double& v : g.data()) v = rng.normal();
    const PatchMatrix pf = patch_transform(f, cfg);
    const ImageGrid ptg = patch_adjoint(g, cfg, m, n);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) lhs += pf.columns.data()[i] * g.data()[i];
    for (std::size_t i = 0; i < f.size(); ++i) rhs += f[i] * ptg[i];
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(PatchAdjoint, GramIsDiagonalWithTauSquaredInterior) {
  const std::size_t m = 9, n = 8;
  const PatchConfig cfg = PatchConfig::from_patch_size(3, 1);
  // Column j of P^T P is P^T P e_j; it must be a multiple of e_j.
  for (std::size_t j = 0; j < m * n; ++j) {
    ImageGrid e(m, n);
    e[j] = 1.0;
    const ImageGrid col = patch_adjoint(patch_transform(e, cfg).columns, cfg, m, n);
    for (std::size_t i = 0; i < m * n; ++i) {
      if (i != j) {
        ASSERT_EQ(col[i], 0.0) << "off-diagonal entry at " << i << "," << j;
      }
    }
    EXPECT_GT(col[j], 0.0);
    const std::size_t r = j / n, c = j % n;
    if (r >= cfg.eta && r + cfg.eta < m && c >= cfg.eta && c + cfg.eta < n) {
      EXPECT_EQ(col[j], 9.0);
    }
  }
}

TEST(PatchAdjoint, ShapeMismatch) {
  EXPECT_THROW(patch_adjoint(DenseMatrix(9, 5), PatchConfig::from_patch_size(3, 1), 2, 3), InvalidArgument);
}

TEST(PatchConfig, Validation) {
  EXPECT_THROW(PatchConfig::from_patch_size(4, 3), InvalidArgument);
  EXPECT_THROW(PatchConfig::from_patch_size(3, 0), InvalidArgument);
  EXPECT_THROW(PatchConfig::from_patch_size(3, 10).validate(10), InvalidArgument);
  EXPECT_NO_THROW(PatchConfig::from_patch_size(3, 9).validate(10));
}

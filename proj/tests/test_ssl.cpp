#include <gtest/gtest.h>

#include <set>

#include "mlr/io/dataset.hpp"
#include "mlr/solvers/ssl.hpp"

using namespace mlr;

namespace {

struct Blobs {
  PointCloud cloud;
  std::vector<int> truth;
};

// Two unit-variance Gaussian blobs in the plane, centers 10 apart.
Blobs two_blobs(std::uint64_t seed, std::size_t per = 100) {
  SplitMix64 rng(seed);
  Blobs b;
  b.cloud.points = DenseMatrix(2, 2 * per);
  b.truth.resize(2 * per);
  for (std::size_t j = 0; j < 2 * per; ++j) {
    b.truth[j] = j < per ? 0 : 1;
    b.cloud.points(0, j) = rng.normal() + (j < per ? 0.0 : 10.0);
    b.cloud.points(1, j) = rng.normal();
  }
  return b;
}

PointCloud line(std::initializer_list<double> xs) {
  PointCloud c;
  c.points = DenseMatrix(1, xs.size(), std::vector<double>(xs));
  return c;
}

}  // namespace

TEST(LabelCoding, EncodeIsOneHot) {
  const std::vector<int> y{2, 0, 1, 2};
  const DenseMatrix phi = encode_labels(y, 3);
  ASSERT_EQ(phi.rows(), 4u);
  ASSERT_EQ(phi.cols(), 3u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(phi(i, j), int(j) == y[i] ? 1.0 : 0.0);
  EXPECT_EQ(decode_labels(phi), y);
}

TEST(LabelCoding, OutOfRangeRejected) {
  const std::vector<int> bad{0, 3};
  EXPECT_THROW(encode_labels(bad, 3), InvalidArgument);
  const std::vector<int> neg{-1};
  EXPECT_THROW(encode_labels(neg, 3), InvalidArgument);
}

TEST(LabelCoding, DecodeTakesArgmaxAndBreaksTiesLow) {
  const DenseMatrix phi(3, 3, {0.1, 0.7, 0.2,  //
                               0.5, 0.5, 0.0,  //
                               -1.0, -2.0, -0.5});
  EXPECT_EQ(decode_labels(phi), (std::vector<int>{1, 0, 2}));
}

TEST(NearestLabelInit, OneDimensional) {
  const PointCloud c = line({0.0, 1.0, 9.0, 10.0});
  const LabelAssignment lab{2, {0, 3}, {0, 1}};
  EXPECT_EQ(nearest_label_init(c, lab), (std::vector<int>{0, 0, 1, 1}));
}

TEST(NearestLabelInit, EquidistantGoesToSmallerIndex) {
  // Point 1 sits midway between labeled points 0 and 2; listing order is irrelevant.
  const PointCloud c = line({0.0, 5.0, 10.0});
  const LabelAssignment lab{2, {2, 0}, {0, 1}};
  const std::vector<int> init = nearest_label_init(c, lab);
  EXPECT_EQ(init[0], 1);
  EXPECT_EQ(init[2], 0);
  EXPECT_EQ(init[1], 1);
}

TEST(LabelAssignment, Validation) {
  EXPECT_THROW((LabelAssignment{2, {0, 0}, {0, 1}}.validate(4)), InvalidArgument);
  EXPECT_THROW((LabelAssignment{2, {0, 5}, {0, 1}}.validate(4)), InvalidArgument);
  EXPECT_THROW((LabelAssignment{2, {0}, {0, 1}}.validate(4)), InvalidArgument);
  EXPECT_EQ((LabelAssignment{3, {0, 1}, {0, 2}}.missing_classes()), (std::vector<int>{1}));
}

TEST(SslSweep, LabeledRowsStayOneHot) {
  const Blobs b = two_blobs(3, 20);
  const LabelAssignment lab{2, {0, 5, 20, 33}, {0, 0, 1, 1}};
  const NeighborhoodSet nbr = knn_build(b.cloud.points, 5);
  DenseMatrix phi = encode_labels(nearest_label_init(b.cloud, lab), 2);
  std::vector<DenseMatrix> dual(nbr.centers, DenseMatrix(nbr.list_size(), 2));
  for (int l = 0; l < 5; ++l) {
    ssl_sweep(phi, nbr, dual, 1.0, lab);
    for (std::size_t k = 0; k < lab.indices.size(); ++k)
      for (std::size_t j = 0; j < 2; ++j)
        ASSERT_EQ(phi(lab.indices[k], j), int(j) == lab.labels[k] ? 1.0 : 0.0);
  }
}

TEST(SslSweep, SingleClassIsAFixedPoint) {
  const Blobs b = two_blobs(4, 15);
  const LabelAssignment lab{1, {0}, {0}};
  const NeighborhoodSet nbr = knn_build(b.cloud.points, 4);
  DenseMatrix phi = encode_labels(nearest_label_init(b.cloud, lab), 1);
  std::vector<DenseMatrix> dual(nbr.centers, DenseMatrix(nbr.list_size(), 1));
  for (int l = 0; l < 10; ++l) ssl_sweep(phi, nbr, dual, 1.0, lab);
  for (int v : decode_labels(phi)) EXPECT_EQ(v, 0);
}

TEST(RankHistogram, MatchesDistinctLabelsPerNeighborhood) {
  const Blobs b = two_blobs(5, 30);
  const NeighborhoodSet nbr = knn_build(b.cloud.points, 6);
  // Alternate labels in thirds so some neighborhoods mix classes.
  std::vector<int> y(b.truth.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = int(i % 3);
  const DenseMatrix phi = encode_labels(y, 3);
  std::map<std::size_t, std::size_t> expected;
  for (std::size_t x = 0; x < nbr.centers; ++x) {
    std::set<int> distinct;
    for (std::size_t j : nbr.neighbors(x)) distinct.insert(y[j]);
    ++expected[distinct.size()];
  }
  EXPECT_EQ(rank_histogram(phi, nbr), expected);
}

TEST(SolveSsl, AllLabeledReturnsLabels) {
  const Blobs b = two_blobs(6, 10);
  LabelAssignment lab{2, {}, {}};
  for (std::size_t i = 0; i < b.truth.size(); ++i) {
    lab.indices.push_back(i);
    lab.labels.push_back(1 - b.truth[i]);  // deliberately "wrong" labels must survive
  }
  SslParams p;
  p.k = 4;
  const SslResult r = solve_ssl(b.cloud, lab, p);
  EXPECT_EQ(r.labels, lab.labels);
}

TEST(SolveSsl, SeparatedBlobsAreClassifiedExactly) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Blobs b = two_blobs(seed);
    const LabelAssignment lab{2, {0, 100}, {0, 1}};
    SslParams p;
    p.k = 5;
    p.mu = 15.0;
    const SslResult r = solve_ssl(b.cloud, lab, p);
    EXPECT_EQ(accuracy(r.labels, b.truth), 1.0) << "seed " << seed;
  }
}

TEST(SolveSsl, BuildsNeighborhoodsOnce) {
  const Blobs b = two_blobs(7, 30);
  const LabelAssignment lab{2, {0, 30}, {0, 1}};
  SslParams p;
  p.k = 5;
  p.outer_iters = 3;
  p.inner_iters = 5;
  const std::size_t before = knn_build_counter();
  solve_ssl(b.cloud, lab, p);
  EXPECT_EQ(knn_build_counter() - before, 1u);
}

TEST(SolveSsl, Deterministic) {
  const Blobs b = two_blobs(8, 40);
  const LabelAssignment lab{2, {3, 50}, {0, 1}};
  SslParams p;
  p.k = 6;
  p.inner_iters = 10;
  const SslResult a = solve_ssl(b.cloud, lab, p), c = solve_ssl(b.cloud, lab, p);
  EXPECT_EQ(a.labels, c.labels);
  EXPECT_EQ(a.rank_hist, c.rank_hist);
}

TEST(SolveSsl, Validation) {
  const Blobs b = two_blobs(9, 10);
  SslParams p;
  p.k = 4;
  EXPECT_THROW(solve_ssl(b.cloud, LabelAssignment{2, {}, {}}, p), InvalidArgument);
  EXPECT_THROW(solve_ssl(b.cloud, LabelAssignment{2, {0}, {2}}, p), InvalidArgument);
  p.mu = 0.0;
  EXPECT_THROW(solve_ssl(b.cloud, LabelAssignment{2, {0}, {0}}, p), InvalidArgument);
  p.mu = 1.0;
  p.k = 20;
  EXPECT_THROW(solve_ssl(b.cloud, LabelAssignment{2, {0}, {0}}, p), InvalidArgument);
}

TEST(Dataset, SampleWithoutReplacementIsDistinct) {
  SplitMix64 rng(11);
  const auto idx = sample_without_replacement(50, 20, rng);
  EXPECT_EQ(idx.size(), 20u);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 20u);
  for (std::size_t i : idx) EXPECT_LT(i, 50u);
  EXPECT_THROW(sample_without_replacement(5, 6, rng), InvalidArgument);
}

TEST(Dataset, DrawLabelsCoversClasses) {
  std::vector<int> truth(100);
  for (std::size_t i = 0; i < 100; ++i) truth[i] = int(i % 4);
  const LabelAssignment lab = draw_labels(truth, 8, 4, 5);
  EXPECT_TRUE(lab.missing_classes().empty());
  EXPECT_TRUE(std::is_sorted(lab.indices.begin(), lab.indices.end()));
  for (std::size_t k = 0; k < lab.indices.size(); ++k) EXPECT_EQ(lab.labels[k], truth[lab.indices[k]]);
}

TEST(Dataset, Accuracy) {
  EXPECT_DOUBLE_EQ(accuracy({0, 1, 1, 2}, {0, 1, 2, 2}), 0.75);
  EXPECT_THROW(accuracy({0}, {0, 1}), InvalidArgument);
}

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/io/idx.hpp"
#include "mlr/rng.hpp"
#include "mlr/solvers/ssl.hpp"

namespace mlr {

// First k entries of a seeded Fisher-Yates shuffle of 0..n-1.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, SplitMix64& rng) {
  if (k > n) throw InvalidArgument("sample size exceeds population");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  return idx;
}

struct LabeledCloud {
  PointCloud cloud;
  std::vector<int> truth;
  std::vector<std::size_t> source;  // index of each point in the original file
};

// `count` images drawn without replacement (all when count == 0), pixel
// bytes as coordinates, in draw order.
inline LabeledCloud idx_subset(const IdxTensor& images, const IdxTensor& labels, std::size_t count,
                               std::uint64_t seed) {
  if (images.dims.size() != 3 || labels.dims.size() != 1) throw InvalidArgument("expected image and label IDX files");
  if (images.count() != labels.count()) throw InvalidArgument("image and label counts differ");
  const std::size_t total = images.count(), d = images.item_size();
  if (count == 0) count = total;
  SplitMix64 rng(seed);
  LabeledCloud out;
  out.source = sample_without_replacement(total, count, rng);
  out.cloud.points = DenseMatrix(d, count);
  out.truth.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t s = out.source[j];
    out.truth[j] = labels.data[s];
    for (std::size_t i = 0; i < d; ++i) out.cloud.points(i, j) = images.data[s * d + i];
  }
  return out;
}

// `k` labeled points drawn without replacement, redrawn until every class in
// 0..classes-1 is present (at most `attempts` draws; the last draw is kept
// otherwise). Indices come back sorted.
inline LabelAssignment draw_labels(const std::vector<int>& truth, std::size_t k, std::size_t classes,
                                   std::uint64_t seed, int attempts = 1000) {
  SplitMix64 rng(seed);
  LabelAssignment lab;
  lab.classes = classes;
  for (int a = 0; a < attempts; ++a) {
    lab.indices = sample_without_replacement(truth.size(), k, rng);
    std::sort(lab.indices.begin(), lab.indices.end());
    lab.labels.clear();
    for (std::size_t i : lab.indices) lab.labels.push_back(truth[i]);
    if (lab.missing_classes().empty()) break;
  }
  return lab;
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw InvalidArgument("accuracy: size mismatch");
  std::size_t c = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) c += predicted[i] == truth[i];
  return static_cast<double>(c) / static_cast<double>(truth.size());
}

}  // namespace mlr

#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mlr/error.hpp"

namespace mlr {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

// Compressed sparse row matrix. Column indices are strictly increasing within
// each row and no explicit zeros are stored.
class SparseOperator {
public:
  SparseOperator() = default;
  SparseOperator(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), offsets_(rows + 1, 0) {}

  // Duplicates are summed; entries that sum to zero are dropped.
  static SparseOperator from_triplets(std::size_t rows, std::size_t cols,
                                      std::vector<Triplet> entries) {
    for (const auto& t : entries)
      if (t.row >= rows || t.col >= cols)
        throw InvalidArgument("SparseOperator: triplet index out of bounds");
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    SparseOperator op(rows, cols);
    std::size_t i = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      while (i < entries.size() && entries[i].row == r) {
        const std::size_t c = entries[i].col;
        double sum = 0.0;
        while (i < entries.size() && entries[i].row == r && entries[i].col == c) sum += entries[i++].value;
        if (sum != 0.0) {
          op.indices_.push_back(c);
          op.values_.push_back(sum);
        }
      }
      op.offsets_[r + 1] = op.indices_.size();
    }
    return op;
  }

  static SparseOperator identity(std::size_t n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(t));
  }

  // Builds directly from per-row data that already satisfies the invariants
  // (sorted unique columns, no zeros). Used by row-parallel assemblers.
  static SparseOperator from_rows(std::size_t cols,
                                  const std::vector<std::vector<std::pair<std::size_t, double>>>& rows) {
    SparseOperator op(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (const auto& [c, v] : rows[r]) {
        if (c >= cols) throw InvalidArgument("SparseOperator: column out of bounds");
        if (v == 0.0) continue;
        if (op.offsets_[r] < op.indices_.size() && op.indices_.back() >= c)
          throw InvalidArgument("SparseOperator: row columns not strictly increasing");
        op.indices_.push_back(c);
        op.values_.push_back(v);
      }
      op.offsets_[r + 1] = op.indices_.size();
    }
    return op;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const std::size_t> row_indices(std::size_t r) const {
    return {indices_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  // Value at (r, c), zero when not stored.
  double at(std::size_t r, std::size_t c) const {
    const auto idx = row_indices(r);
    const auto it = std::lower_bound(idx.begin(), idx.end(), c);
    if (it == idx.end() || *it != c) return 0.0;
    return row_values(r)[static_cast<std::size_t>(it - idx.begin())];
  }

  SparseOperator transposed() const {
    std::vector<Triplet> t;
    t.reserve(nonzeros());
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) t.push_back({indices_[k], r, values_[k]});
    return from_triplets(cols_, rows_, std::move(t));
  }

  friend bool operator==(const SparseOperator&, const SparseOperator&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> indices_;
  std::vector<double> values_;
};

// y = A x (or A^T x when `transpose`), written into `y`.
inline void spmv_into(const SparseOperator& a, std::span<const double> x, std::span<double> y,
                      bool transpose = false) {
  const std::size_t in = transpose ? a.rows() : a.cols();
  const std::size_t out = transpose ? a.cols() : a.rows();
  if (x.size() != in || y.size() != out) throw InvalidArgument("spmv: dimension mismatch");
  const auto off = a.offsets();
  const auto idx = a.indices();
  const auto val = a.values();
  if (!transpose) {
    for (std::size_t r = 0; r < a.rows(); ++r) {
      double s = 0.0;
      for (std::size_t k = off[r]; k < off[r + 1]; ++k) s += val[k] * x[idx[k]];
      y[r] = s;
    }
  } else {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
      const double xr = x[r];
      if (xr == 0.0) continue;
      for (std::size_t k = off[r]; k < off[r + 1]; ++k) y[idx[k]] += val[k] * xr;
    }
  }
}

inline std::vector<double> spmv(const SparseOperator& a, std::span<const double> x,
                                bool transpose = false) {
  std::vector<double> y(transpose ? a.cols() : a.rows());
  spmv_into(a, x, y, transpose);
  return y;
}

// Matrix Market coordinate format, real general, 1-based indices.
inline void write_matrix_market(const SparseOperator& a, std::ostream& os) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nonzeros() << '\n';
  os << std::setprecision(17);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto idx = a.row_indices(r);
    const auto val = a.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) os << r + 1 << ' ' << idx[k] + 1 << ' ' << val[k] << '\n';
  }
}

inline void write_matrix_market(const SparseOperator& a, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  write_matrix_market(a, os);
}

inline SparseOperator read_matrix_market(std::istream& is) {
  std::string line;
  std::size_t offset = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    offset += line.size() + 1;
    return true;
  };
  if (!next_line()) throw FormatError("matrix market: empty stream", 0);
  {
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    auto lower = [](std::string s) {
      for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      return s;
    };
    if (banner != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate" ||
        lower(field) != "real" || lower(symmetry) != "general")
      throw FormatError("matrix market: expected 'matrix coordinate real general' header", 0);
  }
  std::size_t header_end = offset;
  do {
    header_end = offset;
    if (!next_line()) throw FormatError("matrix market: missing size line", offset);
  } while (!line.empty() && line[0] == '%');
  std::size_t rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> nnz)) throw FormatError("matrix market: bad size line", header_end);
  }
  std::vector<Triplet> t;
  t.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    const std::size_t at = offset;
    if (!next_line()) throw FormatError("matrix market: truncated entry list", at);
    std::istringstream ss(line);
    std::size_t r = 0, c = 0;
    double v = 0.0;
    if (!(ss >> r >> c >> v) || r == 0 || c == 0 || r > rows || c > cols)
      throw FormatError("matrix market: bad entry", at);
    t.push_back({r - 1, c - 1, v});
  }
  return SparseOperator::from_triplets(rows, cols, std::move(t));
}

inline SparseOperator read_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open " + path);
  return read_matrix_market(is);
}

}  // namespace mlr

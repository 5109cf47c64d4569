#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "mlr/error.hpp"
#include "mlr/linalg/dense.hpp"

namespace mlr {

// Thin SVD: X = U * diag(S) * V^T with U (rows x k), V (cols x k),
// k = min(rows, cols), S non-increasing and non-negative.
struct SvdFactors {
  DenseMatrix U;
  std::vector<double> S;
  DenseMatrix V;

  DenseMatrix reconstruct() const {
    DenseMatrix out(U.rows(), V.rows());
    for (std::size_t j = 0; j < S.size(); ++j) {
      if (S[j] == 0.0) continue;
      for (std::size_t r = 0; r < U.rows(); ++r) {
        const double us = U(r, j) * S[j];
        for (std::size_t c = 0; c < V.rows(); ++c) out(r, c) += us * V(c, j);
      }
    }
    return out;
  }
};

struct SvtResult {
  DenseMatrix value;
  double nuclear_norm = 0.0;  // of `value`
};

// Singular values at or below this fraction of the largest one count as zero
// in rank queries.
inline constexpr double kRankTolerance = 1e-12;

namespace detail {

// Column-major scratch matrix used inside the Jacobi iteration.
struct ColMajor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  ColMajor(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double* col(std::size_t j) { return a.data() + j * rows; }
  const double* col(std::size_t j) const { return a.data() + j * rows; }
  double& at(std::size_t r, std::size_t c) { return a[c * rows + r]; }
};

inline double col_dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

// Householder QR with column pivoting of a tall column-major matrix, in
// place: A P = Q R. On return the upper triangle of `a` holds R, `reflectors`
// the unit Householder vectors (empty where the column was already zero) and
// `perm[i]` the original index of pivoted column i.
inline void pivoted_qr(ColMajor& a, std::vector<std::vector<double>>& reflectors, std::vector<std::size_t>& perm) {
  const std::size_t m = a.rows, n = a.cols;
  reflectors.assign(n, {});
  perm.resize(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t best = j;
    double best_norm = -1.0;
    for (std::size_t c = j; c < n; ++c) {
      const double* cc = a.col(c);
      double s = 0.0;
      for (std::size_t i = j; i < m; ++i) s += cc[i] * cc[i];
      if (s > best_norm) {
        best_norm = s;
        best = c;
      }
    }
    if (best != j) {
      std::swap_ranges(a.col(j), a.col(j) + m, a.col(best));
      std::swap(perm[j], perm[best]);
    }
    double* cj = a.col(j);
    const double norm = std::sqrt(std::max(best_norm, 0.0));
    if (norm == 0.0) continue;
    std::vector<double> v(cj + j, cj + m);
    v[0] += (v[0] >= 0.0 ? norm : -norm);
    const double vnorm = std::sqrt(col_dot(v.data(), v.data(), v.size()));
    for (double& e : v) e /= vnorm;
    for (std::size_t c = j; c < n; ++c) {
      double* cc = a.col(c) + j;
      const double proj = 2.0 * col_dot(v.data(), cc, v.size());
      for (std::size_t i = 0; i < v.size(); ++i) cc[i] -= proj * v[i];
    }
    for (std::size_t i = j + 1; i < m; ++i) cj[i] = 0.0;
    reflectors[j] = std::move(v);
  }
}

// One-sided (Hestenes) Jacobi on the columns of `b`, accumulating the
// right rotations into `v` (which must start as the identity) when given.
inline void one_sided_jacobi(ColMajor& b, ColMajor* v) {
  constexpr int kMaxSweeps = 80;
  constexpr double kEps = 4.0 * std::numeric_limits<double>::epsilon();
  const std::size_t m = b.rows, n = b.cols;
  std::vector<double> sq(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) total += sq[j] = col_dot(b.col(j), b.col(j), m);
  // Columns below eps * ||B||_F are left alone: rotating them changes nothing
  // above rounding level, and their squared norms can underflow.
  const double negligible = total * std::numeric_limits<double>::epsilon() * std::numeric_limits<double>::epsilon();

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = sq[p], beta = sq[q];
        if (alpha <= negligible || beta <= negligible) continue;
        double* bp = b.col(p);
        double* bq = b.col(q);
        const double gamma = col_dot(bp, bq, m);
        if (std::abs(gamma) <= kEps * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = bp[i], xq = bq[i];
          bp[i] = c * xp - s * xq;
          bq[i] = s * xp + c * xq;
        }
        if (v) {
          double* vp = v->col(p);
          double* vq = v->col(q);
          for (std::size_t i = 0; i < n; ++i) {
            const double xp = vp[i], xq = vq[i];
            vp[i] = c * xp - s * xq;
            vq[i] = s * xp + c * xq;
          }
        }
        // Exact updates of the squared norms keep them consistent with the
        // rotated columns without re-summing.
        sq[p] = alpha - t * gamma;
        sq[q] = beta + t * gamma;
        if (sq[p] < 0.0) sq[p] = col_dot(bp, bp, m);
        if (sq[q] < 0.0) sq[q] = col_dot(bq, bq, m);
      }
    }
    if (!rotated) return;
    // Refresh norms once per sweep to stop drift from the incremental updates.
    for (std::size_t j = 0; j < n; ++j) sq[j] = col_dot(b.col(j), b.col(j), m);
  }
  throw NumericalFailure("svd_thin: one-sided Jacobi did not converge");
}

// Fills column j of `u` with a unit vector orthogonal to columns [0, j).
inline void complete_orthonormal(ColMajor& u, std::size_t j) {
  const std::size_t m = u.rows;
  for (std::size_t e = 0; e < m; ++e) {
    std::vector<double> cand(m, 0.0);
    cand[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) {
        const double proj = col_dot(u.col(k), cand.data(), m);
        for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * u.col(k)[i];
      }
    const double nrm = std::sqrt(col_dot(cand.data(), cand.data(), m));
    if (nrm > 0.5) {
      for (std::size_t i = 0; i < m; ++i) u.col(j)[i] = cand[i] / nrm;
      return;
    }
  }
}

// Core routine for rows >= cols. With A P = Q R, one-sided Jacobi runs on
// the columns of R^T: R^T J = Y with orthogonal columns, so
// A = (Q J) diag(|y_j|) (P Y_normalized)^T. Pivoting makes the Jacobi
// iteration converge in a few sweeps.
inline SvdFactors svd_tall(const DenseMatrix& x) {
  const std::size_t m = x.rows(), n = x.cols();
  ColMajor a(m, n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) a.at(r, c) = x(r, c);

  std::vector<std::vector<double>> reflectors;
  std::vector<std::size_t> perm;
  pivoted_qr(a, reflectors, perm);

  ColMajor w(n, n);  // R^T
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r <= c; ++r) w.at(c, r) = a.at(r, c);

  ColMajor rot(n, n);
  for (std::size_t j = 0; j < n; ++j) rot.at(j, j) = 1.0;
  one_sided_jacobi(w, &rot);

  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = std::sqrt(col_dot(w.col(j), w.col(j), n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return sv[i] > sv[j]; });

  const double smax = n > 0 ? sv[order[0]] : 0.0;
  const double noise = smax * static_cast<double>(m) * std::numeric_limits<double>::epsilon();

  // Right vectors in pivoted coordinates; left vectors of R are the rotations.
  ColMajor vw(n, n);
  ColMajor full(m, n);
  SvdFactors out{DenseMatrix(m, n), std::vector<double>(n), DenseMatrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.S[j] = sv[src];
    for (std::size_t r = 0; r < n; ++r) full.at(r, j) = rot.at(r, src);
    if (sv[src] > noise && sv[src] > 0.0) {
      for (std::size_t r = 0; r < n; ++r) vw.at(r, j) = w.at(r, src) / sv[src];
    } else {
      complete_orthonormal(vw, j);
    }
  }

  for (std::size_t jj = n; jj-- > 0;) {
    const auto& h = reflectors[jj];
    if (h.empty()) continue;
    for (std::size_t c = 0; c < n; ++c) {
      double* col = full.col(c) + jj;
      const double proj = 2.0 * col_dot(h.data(), col, h.size());
      for (std::size_t i = 0; i < h.size(); ++i) col[i] -= proj * h[i];
    }
  }
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out.U(r, c) = full.at(r, c);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out.V(perm[r], c) = vw.at(r, c);
  return out;
}

// Singular values and right singular vectors of a tall matrix without
// forming U: columns of R^T after Jacobi are V scaled by S.
struct RightFactors {
  std::vector<double> S;  // non-increasing
  DenseMatrix V;          // cols x cols
};

inline RightFactors svd_right_tall(const DenseMatrix& x) {
  const std::size_t m = x.rows(), n = x.cols();
  ColMajor a(m, n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) a.at(r, c) = x(r, c);
  std::vector<std::vector<double>> reflectors;
  std::vector<std::size_t> perm;
  pivoted_qr(a, reflectors, perm);
  ColMajor w(n, n);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r <= c; ++r) w.at(c, r) = a.at(r, c);
  one_sided_jacobi(w, nullptr);

  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = std::sqrt(col_dot(w.col(j), w.col(j), n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return sv[i] > sv[j]; });
  RightFactors out{std::vector<double>(n), DenseMatrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.S[j] = sv[src];
    if (sv[src] > 0.0)
      for (std::size_t r = 0; r < n; ++r) out.V(perm[r], j) = w.at(r, src) / sv[src];
  }
  return out;
}

// SVT of a tall matrix: X V_k diag(1 - t / s_k) V_k^T over s_k > t.
inline SvtResult svt_tall(const DenseMatrix& x, double t) {
  const std::size_t m = x.rows(), n = x.cols();
  const RightFactors f = svd_right_tall(x);
  SvtResult out{DenseMatrix(m, n), 0.0};
  std::size_t keep = 0;
  while (keep < n && f.S[keep] > t) ++keep;
  if (keep == 0) return out;
  if (t == 0.0 && keep == n) {
    out.value = x;
    for (double s : f.S) out.nuclear_norm += s;
    return out;
  }
  // Z = X V_k scaled column-wise, then Y = Z V_k^T.
  std::vector<double> z(m * keep, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double* xr = x.row(r).data();
    for (std::size_t k = 0; k < keep; ++k) {
      double acc = 0.0;
      for (std::size_t c = 0; c < n; ++c) acc += xr[c] * f.V(c, k);
      z[r * keep + k] = acc * (1.0 - t / f.S[k]);
    }
  }
  for (std::size_t k = 0; k < keep; ++k) out.nuclear_norm += f.S[k] - t;
  for (std::size_t r = 0; r < m; ++r) {
    double* yr = out.value.row(r).data();
    for (std::size_t k = 0; k < keep; ++k) {
      const double zk = z[r * keep + k];
      for (std::size_t c = 0; c < n; ++c) yr[c] += zk * f.V(c, k);
    }
  }
  return out;
}

}  // namespace detail

inline SvdFactors svd_thin(const DenseMatrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw InvalidArgument("svd_thin: empty matrix");
  if (!x.all_finite()) throw InvalidInput("svd_thin: non-finite entry");
  if (x.rows() >= x.cols()) return detail::svd_tall(x);
  SvdFactors t = detail::svd_tall(x.transposed());
  std::swap(t.U, t.V);
  return t;
}

inline std::size_t numerical_rank(std::span<const double> s, double rel_tol = kRankTolerance) {
  if (s.empty() || s[0] <= 0.0) return 0;
  const double cut = rel_tol * s[0];
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [cut](double v) { return v > cut; }));
}

inline std::vector<double> singular_values(const DenseMatrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw InvalidArgument("singular_values: empty matrix");
  if (!x.all_finite()) throw InvalidInput("singular_values: non-finite entry");
  return x.rows() >= x.cols() ? detail::svd_right_tall(x).S : detail::svd_right_tall(x.transposed()).S;
}

inline double nuclear_norm(const DenseMatrix& x) {
  const std::vector<double> s = singular_values(x);
  return std::accumulate(s.begin(), s.end(), 0.0);
}

// Singular value thresholding together with the nuclear norm of the result,
// which the solvers report without a second decomposition.
inline SvtResult svt_with_norm(const DenseMatrix& x, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("svt: threshold must be non-negative");
  if (x.rows() == 0 || x.cols() == 0) throw InvalidArgument("svt: empty matrix");
  if (!x.all_finite()) throw InvalidInput("svt: non-finite entry");
  if (x.rows() >= x.cols()) return detail::svt_tall(x, t);
  SvtResult r = detail::svt_tall(x.transposed(), t);
  r.value = r.value.transposed();
  return r;
}

inline DenseMatrix svt(const DenseMatrix& x, double t) { return svt_with_norm(x, t).value; }

}  // namespace mlr

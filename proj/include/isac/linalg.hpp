#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "isac/errors.hpp"

namespace isac {

using cd = std::complex<double>;
using CVec = std::vector<cd>;

/// Dense row-major complex matrix. Dimensions in this simulator stay small
/// (tens of columns), so everything below is plain O(n^3) dense code.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  cd& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const cd& operator()(std::size_t i, std::size_t j) const {
    return a_[i * cols_ + j];
  }

  const std::vector<cd>& data() const { return a_; }
  std::vector<cd>& data() { return a_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cd> a_;
};

inline cd vdot(const CVec& x, const CVec& y) {
  cd s{0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

inline double norm_sq(const CVec& x) {
  double s = 0.0;
  for (const cd& v : x) s += std::norm(v);
  return s;
}

inline double frobenius_norm_sq(const CMatrix& a) {
  double s = 0.0;
  for (const cd& v : a.data()) s += std::norm(v);
  return s;
}

/// A^H A (Hermitian, PSD by construction).
inline CMatrix gram_matrix(const CMatrix& a) {
  const std::size_t m = a.cols();
  CMatrix g(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      cd s{0.0, 0.0};
      for (std::size_t r = 0; r < a.rows(); ++r) s += std::conj(a(r, i)) * a(r, j);
      g(i, j) = s;
      g(j, i) = std::conj(s);
    }
  }
  return g;
}

/// A^H y.
inline CVec adjoint_apply(const CMatrix& a, const CVec& y) {
  CVec out(a.cols(), cd{0.0, 0.0});
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const cd yr = y[r];
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += std::conj(a(r, j)) * yr;
  }
  return out;
}

/// A x.
inline CVec matvec(const CMatrix& a, const CVec& x) {
  CVec out(a.rows(), cd{0.0, 0.0});
  for (std::size_t r = 0; r < a.rows(); ++r) {
    cd s{0.0, 0.0};
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(r, j) * x[j];
    out[r] = s;
  }
  return out;
}

/// Rank-revealing Cholesky factorization of a Hermitian PSD matrix with
/// diagonal pivoting. Pivots at or below `pivot_threshold` (in eigenvalue
/// units) terminate the factorization; the count of accepted pivots is the
/// numerical rank. This is how the stacked-response rank r is obtained
/// without ever materializing the tall stacked matrix.
struct PivotedCholesky {
  std::vector<std::size_t> perm;  // accepted pivot columns, factorization order
  std::size_t rank = 0;
  CMatrix l;  // rank x rank lower-triangular factor of G[perm, perm]
};

inline PivotedCholesky pivoted_cholesky(CMatrix g, double pivot_threshold) {
  const std::size_t n = g.rows();
  if (g.cols() != n) throw DomainError("pivoted_cholesky: matrix not square");

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  std::size_t rank = n;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = g(k, k).real();
    for (std::size_t j = k + 1; j < n; ++j) {
      if (g(j, j).real() > best) {
        best = g(j, j).real();
        p = j;
      }
    }
    if (!(best > pivot_threshold)) {
      rank = k;
      break;
    }
    if (p != k) {
      std::swap(perm[k], perm[p]);
      for (std::size_t j = 0; j < n; ++j) std::swap(g(k, j), g(p, j));
      for (std::size_t i = 0; i < n; ++i) std::swap(g(i, k), g(i, p));
    }
    const double d = std::sqrt(g(k, k).real());
    g(k, k) = d;
    for (std::size_t i = k + 1; i < n; ++i) g(i, k) /= d;
    // Update the whole active square, not just its lower wedge: the block
    // must stay Hermitian for the full row/column pivot swaps above to be
    // valid.
    for (std::size_t j = k + 1; j < n; ++j) {
      for (std::size_t i = k + 1; i < n; ++i) g(i, j) -= g(i, k) * std::conj(g(j, k));
    }
  }

  PivotedCholesky out;
  out.rank = rank;
  out.perm.assign(perm.begin(), perm.begin() + static_cast<long>(n));
  out.l = CMatrix(rank, rank);
  for (std::size_t i = 0; i < rank; ++i)
    for (std::size_t j = 0; j <= i; ++j) out.l(i, j) = g(i, j);
  return out;
}

/// Solves L t = b for lower-triangular L.
inline CVec forward_solve(const CMatrix& l, const CVec& b) {
  const std::size_t n = l.rows();
  CVec t(n);
  for (std::size_t i = 0; i < n; ++i) {
    cd s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * t[j];
    t[i] = s / l(i, i);
  }
  return t;
}

/// Solves L^H w = t for lower-triangular L.
inline CVec backward_solve_adjoint(const CMatrix& l, const CVec& t) {
  const std::size_t n = l.rows();
  CVec w(n);
  for (std::size_t ii = n; ii-- > 0;) {
    cd s = t[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= std::conj(l(j, ii)) * w[j];
    w[ii] = s / std::conj(l(ii, ii));
  }
  return w;
}

/// Orthonormal basis of the column space of A by modified Gram-Schmidt with
/// re-orthogonalization. Columns whose residual norm falls at or below
/// rel_tol times the largest column norm are treated as dependent. Reference
/// path for the projection statistic; works on the explicitly materialized
/// stacked matrix.
inline CMatrix mgs_orthonormal_basis(const CMatrix& a, double rel_tol) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  double max_norm = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += std::norm(a(r, j));
    max_norm = std::max(max_norm, std::sqrt(s));
  }
  const double thr = rel_tol * max_norm;

  std::vector<CVec> q;
  q.reserve(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    CVec v(rows);
    for (std::size_t r = 0; r < rows; ++r) v[r] = a(r, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (const CVec& qi : q) {
        const cd proj = vdot(qi, v);
        for (std::size_t r = 0; r < rows; ++r) v[r] -= proj * qi[r];
      }
    }
    const double nrm = std::sqrt(norm_sq(v));
    if (nrm > thr && nrm > 0.0) {
      for (std::size_t r = 0; r < rows; ++r) v[r] /= nrm;
      q.push_back(std::move(v));
    }
  }

  CMatrix out(rows, q.size());
  for (std::size_t j = 0; j < q.size(); ++j)
    for (std::size_t r = 0; r < rows; ++r) out(r, j) = q[j][r];
  return out;
}

/// Relative rank tolerance used on singular values of the stacked response:
/// max(rows, cols) * machine epsilon.
inline double rank_rel_tol(std::size_t rows, std::size_t cols) {
  return static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon();
}

}  // namespace isac

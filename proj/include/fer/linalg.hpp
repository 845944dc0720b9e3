#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "fer/error.hpp"
#include "fer/matrix.hpp"

namespace fer {

/// Eigenpairs sorted by descending eigenvalue; column i of `vectors` belongs
/// to `values[i]`.
struct EigResult {
  std::vector<double> values;
  Matrix vectors;
};

struct JacobiOptions {
  int max_sweeps = 100;
  double rel_tol = 1e-12;
};

namespace detail {

// Sign convention: the largest-magnitude entry of each eigenvector is positive
// (the first one wins among entries equal within 1e-12).
inline void normalize_sign(Matrix& v, std::size_t c) {
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t r = 0; r < v.rows(); ++r) {
    const double a = std::abs(v(r, c));
    if (a > best_abs + 1e-12) {
      best_abs = a;
      best = r;
    }
  }
  if (v(best, c) < 0.0)
    for (std::size_t r = 0; r < v.rows(); ++r) v(r, c) = -v(r, c);
}

inline bool lex_greater(const Matrix& v, std::size_t a, std::size_t b) {
  for (std::size_t r = 0; r < v.rows(); ++r) {
    if (v(r, a) > v(r, b)) return true;
    if (v(r, a) < v(r, b)) return false;
  }
  return false;
}

// Orders eigenpairs descending; runs of eigenvalues equal within 1e-10
// (relative to the spectrum scale) are ordered lexicographically by vector.
inline EigResult sort_eigenpairs(std::vector<double> values, Matrix vectors) {
  const std::size_t n = values.size();
  for (std::size_t c = 0; c < n; ++c) normalize_sign(vectors, c);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  double scale = 1.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  const double tie = 1e-10 * scale;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && values[order[end - 1]] - values[order[end]] <= tie) ++end;
    if (end - start > 1)
      std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(end),
                       [&](std::size_t a, std::size_t b) { return lex_greater(vectors, a, b); });
    start = end;
  }
  EigResult out{std::vector<double>(n), Matrix(vectors.rows(), n)};
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = values[order[i]];
    for (std::size_t r = 0; r < vectors.rows(); ++r) out.vectors(r, i) = vectors(r, order[i]);
  }
  return out;
}

}  // namespace detail

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
inline EigResult sym_eig(const Matrix& input, const JacobiOptions& opts = {}) {
  require(!input.empty(), ErrorKind::InvalidArgument, "sym_eig on empty matrix");
  require(input.is_square(), ErrorKind::NonSquare, "sym_eig needs a square matrix");
  require(is_symmetric(input, 1e-12), ErrorKind::NotSymmetric, "sym_eig input not symmetric");

  const std::size_t n = input.rows();
  Matrix a = input;
  a.symmetrize();
  const double norm = a.frobenius();

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  // Rotations act on rows p and q of A and of Vᵀ (both contiguous); the
  // columns of A follow by symmetry.
  Matrix vt = Matrix::identity(n);
  bool converged = norm == 0.0 || off_norm() <= opts.rel_tol * norm;
  for (int sweep = 0; sweep < opts.max_sweeps && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        auto rp = a.row(p);
        auto rq = a.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double apk = rp[k];
          const double aqk = rq[k];
          rp[k] = c * apk - s * aqk;
          rq[k] = s * apk + c * aqk;
          a(k, p) = rp[k];
          a(k, q) = rq[k];
        }
        rp[p] -= t * apq;
        rq[q] += t * apq;
        rp[q] = 0.0;
        rq[p] = 0.0;
        auto vp = vt.row(p);
        auto vq = vt.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k];
          const double y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
    converged = off_norm() <= opts.rel_tol * norm;
  }
  if (!(converged))
    fail(ErrorKind::DidNotConverge,
         "Jacobi iteration exceeded " + std::to_string(opts.max_sweeps) + " sweeps");
  Matrix v = vt.transpose();

  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
  return detail::sort_eigenpairs(std::move(values), std::move(v));
}

/// Lower-triangular L with A = L·Lᵀ, or nullopt when A is not positive
/// definite.
inline std::optional<Matrix> try_cholesky(const Matrix& a) {
  if (!a.is_square() || a.empty()) return std::nullopt;
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

inline Matrix cholesky(const Matrix& a) {
  require(a.is_square(), ErrorKind::NonSquare, "cholesky needs a square matrix");
  auto l = try_cholesky(a);
  require(l.has_value(), ErrorKind::NotPositiveDefinite, "matrix is not positive definite");
  return *std::move(l);
}

/// Solves L·X = B for lower-triangular L.
inline Matrix forward_substitute(const Matrix& l, const Matrix& b) {
  require(l.rows() == b.rows(), ErrorKind::DimensionMismatch, "forward_substitute size mismatch");
  Matrix x = b;
  const std::size_t n = l.rows();
  for (std::size_t c = 0; c < b.cols(); ++c)
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  return x;
}

/// Solves Lᵀ·X = B for lower-triangular L.
inline Matrix backward_substitute_transposed(const Matrix& l, const Matrix& b) {
  require(l.rows() == b.rows(), ErrorKind::DimensionMismatch, "backward_substitute size mismatch");
  Matrix x = b;
  const std::size_t n = l.rows();
  for (std::size_t c = 0; c < b.cols(); ++c)
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
      x(ii, c) = s / l(ii, ii);
    }
  return x;
}

/// A⁻¹ for symmetric positive-definite A.
inline Matrix inverse_spd(const Matrix& a) {
  const Matrix l = cholesky(a);
  Matrix inv = backward_substitute_transposed(l, forward_substitute(l, Matrix::identity(a.rows())));
  inv.symmetrize();
  return inv;
}

/// Solves A·v = λ·B·v for symmetric A and symmetric positive-definite B by
/// Cholesky whitening. Returned vectors are B-orthonormal.
inline EigResult gen_sym_eig(const Matrix& a, const Matrix& b, const JacobiOptions& opts = {}) {
  require(a.is_square() && b.is_square(), ErrorKind::NonSquare, "gen_sym_eig needs square inputs");
  require(a.rows() == b.rows(), ErrorKind::DimensionMismatch, "gen_sym_eig size mismatch");
  require(is_symmetric(a, 1e-12), ErrorKind::NotSymmetric, "gen_sym_eig: A not symmetric");
  require(is_symmetric(b, 1e-12), ErrorKind::NotSymmetric, "gen_sym_eig: B not symmetric");
  Matrix bs = b;
  bs.symmetrize();
  const Matrix l = cholesky(bs);
  // C = L⁻¹ A L⁻ᵀ
  Matrix y = forward_substitute(l, a);              // L⁻¹A
  Matrix c = forward_substitute(l, y.transpose());  // L⁻¹(L⁻¹A)ᵀ = L⁻¹AL⁻ᵀ
  c.symmetrize();
  EigResult inner = sym_eig(c, opts);
  Matrix v = backward_substitute_transposed(l, inner.vectors);
  return detail::sort_eigenpairs(std::move(inner.values), std::move(v));
}

/// log|Wᵀ·S·W + ridge·I_d| via Cholesky of the d×d Gram.
inline double log_det_gram(const Matrix& w, const Matrix& s, double ridge = 0.0) {
  require(s.is_square(), ErrorKind::NonSquare, "log_det_gram: S not square");
  require(w.rows() == s.rows(), ErrorKind::DimensionMismatch, "log_det_gram: W rows != S size");
  require(w.cols() <= w.rows(), ErrorKind::RankDeficient, "log_det_gram: d exceeds n");
  Matrix g = transpose_times(w, s * w);
  g.symmetrize();
  g.add_identity(ridge);
  auto l = try_cholesky(g);
  require(l.has_value(), ErrorKind::GramNotPositiveDefinite,
          "projected Gram is not positive definite (degenerate projection)");
  double sum = 0.0;
  for (std::size_t i = 0; i < l->rows(); ++i) sum += std::log((*l)(i, i));
  return 2.0 * sum;
}

/// Orthonormal basis of the column space of W (modified Gram–Schmidt with one
/// reorthogonalization pass). Column signs follow W.
inline Matrix orthonormalize(const Matrix& w) {
  require(!w.empty(), ErrorKind::InvalidArgument, "orthonormalize on empty matrix");
  require(w.cols() <= w.rows(), ErrorKind::RankDeficient, "more columns than rows");
  const std::size_t n = w.rows();
  const std::size_t d = w.cols();
  double scale = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += w(r, c) * w(r, c);
    scale = std::max(scale, std::sqrt(s));
  }
  require(scale > 0.0, ErrorKind::RankDeficient, "zero matrix has no column space");
  Matrix q = w;
  for (std::size_t c = 0; c < d; ++c) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t p = 0; p < c; ++p) {
        double proj = 0.0;
        for (std::size_t r = 0; r < n; ++r) proj += q(r, p) * q(r, c);
        for (std::size_t r = 0; r < n; ++r) q(r, c) -= proj * q(r, p);
      }
    double norm = 0.0;
    for (std::size_t r = 0; r < n; ++r) norm += q(r, c) * q(r, c);
    norm = std::sqrt(norm);
    if (!(norm > 1e-12 * scale))
      fail(ErrorKind::RankDeficient, "column " + std::to_string(c) + " is linearly dependent");
    for (std::size_t r = 0; r < n; ++r) q(r, c) /= norm;
  }
  return q;
}

}  // namespace fer

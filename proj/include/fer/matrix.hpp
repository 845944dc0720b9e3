#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "fer/error.hpp"

namespace fer {

/// Dense row-major matrix of doubles.
///
/// Constructors reject non-finite data. A default-constructed matrix is the
/// empty 0x0 placeholder; every other shape has positive extents.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    require(rows > 0 && cols > 0, ErrorKind::InvalidArgument, "matrix extents must be positive");
    require(std::isfinite(fill), ErrorKind::NonFinite, "matrix fill value is not finite");
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(rows > 0 && cols > 0, ErrorKind::InvalidArgument, "matrix extents must be positive");
    if (!(data_.size() == rows * cols))
      fail(ErrorKind::DimensionMismatch, "matrix data length " + std::to_string(data_.size()) +
                                             " != " + std::to_string(rows) + "x" +
                                             std::to_string(cols));
    for (double v : data_)
      require(std::isfinite(v), ErrorKind::NonFinite, "matrix entry is not finite");
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    require(rows_ > 0 && cols_ > 0, ErrorKind::InvalidArgument, "matrix extents must be positive");
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      require(row.size() == cols_, ErrorKind::DimensionMismatch, "ragged matrix literal");
      for (double v : row) {
        require(std::isfinite(v), ErrorKind::NonFinite, "matrix entry is not finite");
        data_.push_back(v);
      }
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  static Matrix column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> col(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  void set_col(std::size_t c, std::span<const double> values) {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  /// Columns [first, first + count).
  Matrix cols_range(std::size_t first, std::size_t count) const {
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
    return out;
  }

  double trace() const noexcept {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius() const noexcept {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Matrix& operator+=(const Matrix& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }

  /// this += alpha * o
  void add_scaled(const Matrix& o, double alpha) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * o.data_[i];
  }

  void add_identity(double alpha) {
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) (*this)(i, i) += alpha;
  }

  /// Replaces the matrix with (A + Aᵀ)/2; square only.
  void symmetrize() {
    require(is_square(), ErrorKind::NonSquare, "symmetrize needs a square matrix");
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j) {
        double m = 0.5 * ((*this)(i, j) + (*this)(j, i));
        (*this)(i, j) = m;
        (*this)(j, i) = m;
      }
  }

  bool operator==(const Matrix& o) const = default;

 private:
  void check_same_shape(const Matrix& o) const {
    if (!(rows_ == o.rows_ && cols_ == o.cols_))
      fail(ErrorKind::DimensionMismatch,
           "shape " + std::to_string(rows_) + "x" + std::to_string(cols_) + " vs " +
               std::to_string(o.rows_) + "x" + std::to_string(o.cols_));
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
inline Matrix operator*(Matrix a, double s) { return a *= s; }
inline Matrix operator*(double s, Matrix a) { return a *= s; }

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (!(a.cols() == b.rows()))
    fail(ErrorKind::DimensionMismatch,
         "product " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
             std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

/// aᵀ·b without materializing the transpose.
inline Matrix transpose_times(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorKind::DimensionMismatch, "transpose_times row mismatch");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

/// Accumulates alpha·aᵀ·a into the square matrix `acc`.
inline void accumulate_gram(Matrix& acc, const Matrix& a, double alpha = 1.0) {
  require(acc.rows() == a.cols() && acc.cols() == a.cols(), ErrorKind::DimensionMismatch,
          "accumulate_gram shape mismatch");
  const std::size_t n = a.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = alpha * a_row[i];
      if (v == 0.0) continue;
      auto acc_row = acc.row(i);
      for (std::size_t j = i; j < n; ++j) acc_row[j] += v * a_row[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) acc(i, j) = acc(j, i);
}

inline std::vector<double> operator*(const Matrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), ErrorKind::DimensionMismatch, "matrix-vector size mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Frobenius inner product ⟨a, b⟩.
inline double inner(const Matrix& a, const Matrix& b) { return dot(a.data(), b.data()); }

inline bool is_symmetric(const Matrix& a, double rel_tol = 1e-12) {
  if (!a.is_square()) return false;
  const double scale = std::max(a.max_abs(), 1e-300);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
  return true;
}

}  // namespace fer

#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "fer/error.hpp"
#include "fer/linalg.hpp"
#include "fer/matrix.hpp"
#include "fer/scatter.hpp"

namespace fer {

/// y = Pᵀ(x − mean).
struct LinearProjection {
  Matrix projection;  // D×out
  std::vector<double> mean;

  std::size_t input_dim() const noexcept { return projection.rows(); }
  std::size_t output_dim() const noexcept { return projection.cols(); }

  std::vector<double> apply(std::span<const double> x) const {
    if (!(x.size() == input_dim()))
      fail(ErrorKind::DimensionMismatch, "projection input has " + std::to_string(x.size()) +
                                             " entries, expected " + std::to_string(input_dim()));
    std::vector<double> y(output_dim(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = x[i] - mean[i];
      if (v == 0.0) continue;
      auto row = projection.row(i);
      for (std::size_t j = 0; j < y.size(); ++j) y[j] += v * row[j];
    }
    return y;
  }

  bool operator==(const LinearProjection&) const = default;
};

namespace detail {

struct VectorClassStats {
  Matrix between;
  Matrix within;
};

// Between/within scatters (normalized by N) of the rows of `x`, whose class
// indices are 0..c-1.
inline VectorClassStats vector_scatters(const Matrix& x, std::span<const std::size_t> cls,
                                        std::size_t classes) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Matrix means(classes, d);
  std::vector<double> counts(classes, 0.0);
  std::vector<double> global(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    counts[cls[i]] += 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      means(cls[i], j) += x(i, j);
      global[j] += x(i, j);
    }
  }
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t j = 0; j < d; ++j) means(c, j) /= counts[c];
  for (double& g : global) g /= static_cast<double>(n);

  VectorClassStats s{Matrix(d, d), Matrix(d, d)};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < classes; ++c) {
    Matrix dev(1, d);
    for (std::size_t j = 0; j < d; ++j) dev(0, j) = means(c, j) - global[j];
    accumulate_gram(s.between, dev, counts[c] * inv_n);
  }
  Matrix dev(1, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) dev(0, j) = x(i, j) - means(cls[i], j);
    accumulate_gram(s.within, dev, inv_n);
  }
  return s;
}

}  // namespace detail

/// Classical LDA on row vectors. The projection columns are the top
/// generalized eigenvectors of (between, within + ridge·I), scaled to unit
/// within-class variance.
///
/// When the dimension exceeds the sample count the problem is solved in the
/// span of the centered samples, which is exact: both scatters vanish on the
/// orthogonal complement.
inline LinearProjection fit_lda_1d(const Matrix& x, std::span<const int> labels,
                                   std::size_t out_dim, Ridge ridge = Ridge::automatic()) {
  require(!x.empty(), ErrorKind::InvalidArgument, "LDA on empty data");
  require(x.rows() == labels.size(), ErrorKind::DimensionMismatch, "LDA label count mismatch");
  std::map<int, std::size_t> index;
  for (int l : labels) index.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [label, idx] : index) idx = next++;
  const std::size_t classes = index.size();
  require(out_dim >= 1, ErrorKind::InvalidArgument, "LDA output dimension must be >= 1");
  if (!(classes >= 2 && out_dim <= classes - 1))
    fail(ErrorKind::OutDimTooLarge,
         "LDA output dimension " + std::to_string(out_dim) +
             " exceeds classes - 1 = " + std::to_string(classes > 0 ? classes - 1 : 0));
  std::vector<std::size_t> cls(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) cls[i] = index.at(labels[i]);

  const std::size_t n = x.rows();
  const std::size_t dim = x.cols();
  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) mean[j] += x(i, j);
  for (double& m : mean) m /= static_cast<double>(n);
  Matrix centered = x;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) centered(i, j) -= mean[j];

  // Basis Q (dim×r) of the sample span; features z = Qᵀ(x − mean).
  std::optional<Matrix> basis;
  Matrix z = centered;
  if (dim > n) {
    Matrix gram = centered * centered.transpose();
    gram.symmetrize();
    EigResult eig = sym_eig(gram);
    const double top = std::max(eig.values.front(), 0.0);
    std::size_t rank = 0;
    while (rank < eig.values.size() && eig.values[rank] > 1e-10 * top) ++rank;
    require(rank >= 1, ErrorKind::DegenerateScatter, "LDA samples are all identical");
    Matrix q = transpose_times(centered, eig.vectors.cols_range(0, rank));  // dim×rank
    for (std::size_t c = 0; c < rank; ++c) {
      const double inv = 1.0 / std::sqrt(eig.values[c]);
      for (std::size_t r = 0; r < dim; ++r) q(r, c) *= inv;
    }
    z = centered * q;
    basis = std::move(q);
  }

  auto stats = detail::vector_scatters(z, cls, classes);
  require(stats.between.max_abs() > 0.0, ErrorKind::DegenerateScatter,
          "LDA between-class scatter is zero");
  // Relative ridges refer to trace(Sw)/dim of the original space.
  require(ridge.value >= 0.0 && std::isfinite(ridge.value), ErrorKind::InvalidConfig,
          "ridge must be >= 0");
  const double r = ridge.mode == Ridge::Mode::Absolute
                       ? ridge.value
                       : ridge.value * stats.within.trace() / static_cast<double>(dim);
  Matrix within = stats.within;
  within.add_identity(r);
  EigResult eig;
  try {
    eig = gen_sym_eig(stats.between, within);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotPositiveDefinite)
      fail(ErrorKind::DegenerateScatter, "LDA within-class scatter is singular; raise the ridge");
    throw;
  }
  Matrix directions = eig.vectors.cols_range(0, std::min(out_dim, eig.vectors.cols()));
  if (directions.cols() < out_dim) {
    // Fewer sample-span dimensions than requested outputs: pad with zeros.
    Matrix padded(directions.rows(), out_dim);
    for (std::size_t i = 0; i < directions.rows(); ++i)
      for (std::size_t j = 0; j < directions.cols(); ++j) padded(i, j) = directions(i, j);
    directions = std::move(padded);
  }
  LinearProjection out;
  out.projection = basis ? (*basis) * directions : directions;
  out.mean = std::move(mean);
  return out;
}

}  // namespace fer

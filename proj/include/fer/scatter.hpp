#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fer/error.hpp"
#include "fer/matrix.hpp"

namespace fer {

/// Image matrices with class labels 1..c. Every class must be populated and
/// every sample must share one m×n shape.
class LabeledMatrixSet {
 public:
  LabeledMatrixSet() = default;

  LabeledMatrixSet(std::vector<Matrix> samples, std::vector<int> labels)
      : samples_(std::move(samples)), labels_(std::move(labels)) {
    require(!samples_.empty(), ErrorKind::EmptyClass, "labeled set has no samples");
    require(samples_.size() == labels_.size(), ErrorKind::DimensionMismatch,
            "sample and label counts differ");
    const std::size_t m = samples_[0].rows();
    const std::size_t n = samples_[0].cols();
    for (const Matrix& a : samples_)
      require(a.rows() == m && a.cols() == n, ErrorKind::DimensionMismatch,
              "samples differ in shape");
    int max_label = 0;
    for (int l : labels_) {
      require(l >= 1, ErrorKind::InvalidArgument, "class labels start at 1");
      max_label = std::max(max_label, l);
    }
    counts_.assign(static_cast<std::size_t>(max_label), 0);
    for (int l : labels_) ++counts_[static_cast<std::size_t>(l - 1)];
    for (std::size_t i = 0; i < counts_.size(); ++i)
      if (!(counts_[i] > 0))
        fail(ErrorKind::EmptyClass, "class " + std::to_string(i + 1) + " is empty");
  }

  const std::vector<Matrix>& samples() const noexcept { return samples_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::size_t>& class_counts() const noexcept { return counts_; }
  std::size_t classes() const noexcept { return counts_.size(); }
  std::size_t total() const noexcept { return samples_.size(); }
  std::size_t rows() const noexcept { return samples_.empty() ? 0 : samples_[0].rows(); }
  std::size_t cols() const noexcept { return samples_.empty() ? 0 : samples_[0].cols(); }

  /// Same labels, every sample transposed.
  LabeledMatrixSet transposed() const {
    std::vector<Matrix> t;
    t.reserve(samples_.size());
    for (const Matrix& a : samples_) t.push_back(a.transpose());
    return LabeledMatrixSet(std::move(t), labels_);
  }

 private:
  std::vector<Matrix> samples_;
  std::vector<int> labels_;
  std::vector<std::size_t> counts_;
};

/// Image scatter matrices (all n×n) of a labeled set.
struct ScatterSet {
  Matrix between;                 // Sb
  Matrix within;                  // Sw, pooled
  std::vector<Matrix> per_class;  // S_i
  std::vector<std::size_t> class_counts;
  std::vector<Matrix> class_means;
  Matrix global_mean;

  std::size_t dim() const noexcept { return between.rows(); }
  std::size_t classes() const noexcept { return per_class.size(); }
  std::size_t total() const noexcept {
    std::size_t t = 0;
    for (std::size_t c : class_counts) t += c;
    return t;
  }
};

inline ScatterSet compute_scatters(const LabeledMatrixSet& set) {
  require(set.total() > 0, ErrorKind::EmptyClass, "empty labeled set");
  const std::size_t m = set.rows();
  const std::size_t n = set.cols();
  const std::size_t c = set.classes();
  const auto total = static_cast<double>(set.total());

  ScatterSet out;
  out.class_counts = set.class_counts();
  out.class_means.assign(c, Matrix(m, n));
  out.global_mean = Matrix(m, n);
  for (std::size_t j = 0; j < set.total(); ++j) {
    const auto cls = static_cast<std::size_t>(set.labels()[j] - 1);
    out.class_means[cls] += set.samples()[j];
    out.global_mean += set.samples()[j];
  }
  for (std::size_t i = 0; i < c; ++i)
    out.class_means[i] *= 1.0 / static_cast<double>(out.class_counts[i]);
  out.global_mean *= 1.0 / total;

  out.between = Matrix(n, n);
  for (std::size_t i = 0; i < c; ++i) {
    const Matrix dev = out.class_means[i] - out.global_mean;
    accumulate_gram(out.between, dev, static_cast<double>(out.class_counts[i]) / total);
  }

  out.within = Matrix(n, n);
  out.per_class.assign(c, Matrix(n, n));
  for (std::size_t j = 0; j < set.total(); ++j) {
    const auto cls = static_cast<std::size_t>(set.labels()[j] - 1);
    const Matrix dev = set.samples()[j] - out.class_means[cls];
    accumulate_gram(out.per_class[cls], dev, 1.0 / static_cast<double>(out.class_counts[cls]));
  }
  for (std::size_t i = 0; i < c; ++i)
    out.within.add_scaled(out.per_class[i], static_cast<double>(out.class_counts[i]) / total);
  return out;
}

/// Regularization added to scatter matrices: either an absolute value or a
/// multiple of trace(S)/n of a reference scatter.
struct Ridge {
  enum class Mode { Absolute, Relative };
  Mode mode = Mode::Relative;
  double value = 1e-8;

  static Ridge automatic() { return {Mode::Relative, 1e-8}; }
  static Ridge relative(double factor) { return {Mode::Relative, factor}; }
  static Ridge absolute(double v) { return {Mode::Absolute, v}; }

  double resolve(const Matrix& reference) const {
    require(value >= 0.0 && std::isfinite(value), ErrorKind::InvalidConfig, "ridge must be >= 0");
    if (mode == Mode::Absolute) return value;
    return value * reference.trace() / static_cast<double>(reference.rows());
  }

  bool operator==(const Ridge&) const = default;
};

}  // namespace fer

#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "fer/dataset.hpp"
#include "fer/error.hpp"
#include "fer/matrix.hpp"

namespace fer {

/// 6×6 counts, row = true class, column = predicted class. Entries may be
/// fractional (published tables average over folds).
class ConfusionMatrix {
 public:
  ConfusionMatrix() : counts_(6, 6) {}

  explicit ConfusionMatrix(Matrix counts) : counts_(std::move(counts)) {
    require(counts_.rows() == 6 && counts_.cols() == 6, ErrorKind::DimensionMismatch,
            "confusion matrix must be 6x6");
    for (double v : counts_.values())
      require(v >= 0.0, ErrorKind::InvalidArgument, "confusion counts must be >= 0");
  }

  void add(int truth, int predicted, double weight = 1.0) {
    if (!(truth >= 1 && truth <= 6 && predicted >= 1 && predicted <= 6))
      fail(ErrorKind::InvalidArgument, "confusion labels must lie in 1..6, got " +
                                           std::to_string(truth) + "/" + std::to_string(predicted));
    counts_(static_cast<std::size_t>(truth - 1), static_cast<std::size_t>(predicted - 1)) += weight;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    counts_ += o.counts_;
    return *this;
  }

  const Matrix& counts() const noexcept { return counts_; }
  double operator()(std::size_t t, std::size_t p) const { return counts_(t, p); }

  double total() const {
    double s = 0.0;
    for (double v : counts_.values()) s += v;
    return s;
  }

  double diagonal() const { return counts_.trace(); }

  /// 100 · diagonal / total; 0 for an empty matrix.
  double recognition_rate() const {
    const double t = total();
    return t > 0.0 ? 100.0 * diagonal() / t : 0.0;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  Matrix counts_;
};

inline std::string format_rate(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rate);
  return buf;
}

/// Table with S/G/F/H/A/D headers and the average recognition rate.
inline std::string format_table(const ConfusionMatrix& m, const std::string& title = "") {
  std::string out;
  if (!title.empty()) out += title + "\n";
  char buf[64];
  out += "     ";
  for (char c : kClassLetters) {
    std::snprintf(buf, sizeof buf, "%8c", c);
    out += buf;
  }
  out += "\n";
  for (std::size_t r = 0; r < 6; ++r) {
    std::snprintf(buf, sizeof buf, "  %c  ", kClassLetters[r]);
    out += buf;
    for (std::size_t c = 0; c < 6; ++c) {
      const double v = m(r, c);
      if (v == std::floor(v))
        std::snprintf(buf, sizeof buf, "%8.0f", v);
      else
        std::snprintf(buf, sizeof buf, "%8.2f", v);
      out += buf;
    }
    out += "\n";
  }
  out += "Average Recognition Rate = " + format_rate(m.recognition_rate()) + "%\n";
  return out;
}

/// `key=value` lines describing one matrix under `prefix`.
inline std::string summary_lines(const ConfusionMatrix& m, const std::string& prefix) {
  std::string out;
  out += prefix + ".total=" + detail::fmt_double(m.total()) + "\n";
  out += prefix + ".correct=" + detail::fmt_double(m.diagonal()) + "\n";
  out += prefix + ".rate=" + format_rate(m.recognition_rate()) + "\n";
  out += prefix + ".counts=";
  for (std::size_t i = 0; i < 36; ++i)
    out += (i ? "," : "") + detail::fmt_double(m.counts().values()[i]);
  out += "\n";
  return out;
}

}  // namespace fer

#pragma once

#include <cstddef>
#include <vector>

#include "fer/error.hpp"

namespace fer {

/// Dense (k, r) grid, k-major. Used for per-channel data indexed by Gabor
/// response k and frame r.
template <class T>
class Grid2 {
 public:
  Grid2() = default;
  Grid2(std::size_t p, std::size_t f) : p_(p), f_(f), cells_(p * f) {}

  std::size_t p() const noexcept { return p_; }
  std::size_t f() const noexcept { return f_; }
  std::size_t size() const noexcept { return cells_.size(); }

  T& operator()(std::size_t k, std::size_t r) { return cells_[k * f_ + r]; }
  const T& operator()(std::size_t k, std::size_t r) const { return cells_[k * f_ + r]; }

  T& at(std::size_t k, std::size_t r) {
    require(k < p_ && r < f_, ErrorKind::ShapeMismatch, "grid index out of range");
    return (*this)(k, r);
  }
  const T& at(std::size_t k, std::size_t r) const {
    require(k < p_ && r < f_, ErrorKind::ShapeMismatch, "grid index out of range");
    return (*this)(k, r);
  }

  /// Cells in (k-major, r-minor) order.
  auto begin() noexcept { return cells_.begin(); }
  auto end() noexcept { return cells_.end(); }
  auto begin() const noexcept { return cells_.begin(); }
  auto end() const noexcept { return cells_.end(); }

  bool operator==(const Grid2&) const = default;

 private:
  std::size_t p_ = 0;
  std::size_t f_ = 0;
  std::vector<T> cells_;
};

}  // namespace fer

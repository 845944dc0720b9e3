#pragma once

#include "fer/error.hpp"
#include "fer/matrix.hpp"

namespace fer {

/// Same-size 2D convolution (kernel flipped) with zero padding outside the
/// image. Kernel extents must be odd and no larger than the image.
inline Matrix conv2_same(const Matrix& image, const Matrix& kernel) {
  require(!image.empty() && !kernel.empty(), ErrorKind::InvalidArgument,
          "conv2_same on empty input");
  require(kernel.rows() % 2 == 1 && kernel.cols() % 2 == 1, ErrorKind::EvenKernelSize,
          "kernel extents must be odd");
  require(kernel.rows() <= image.rows() && kernel.cols() <= image.cols(),
          ErrorKind::KernelLargerThanImage, "kernel larger than image");

  const auto rows = static_cast<std::ptrdiff_t>(image.rows());
  const auto cols = static_cast<std::ptrdiff_t>(image.cols());
  const auto kr = static_cast<std::ptrdiff_t>(kernel.rows());
  const auto kc = static_cast<std::ptrdiff_t>(kernel.cols());
  const std::ptrdiff_t hr = kr / 2;
  const std::ptrdiff_t hc = kc / 2;

  Matrix out(image.rows(), image.cols());
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    for (std::ptrdiff_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t a = 0; a < kr; ++a) {
        const std::ptrdiff_t si = i + hr - a;
        if (si < 0 || si >= rows) continue;
        const auto img_row = image.row(static_cast<std::size_t>(si));
        const auto ker_row = kernel.row(static_cast<std::size_t>(a));
        for (std::ptrdiff_t b = 0; b < kc; ++b) {
          const std::ptrdiff_t sj = j + hc - b;
          if (sj < 0 || sj >= cols) continue;
          acc += ker_row[static_cast<std::size_t>(b)] * img_row[static_cast<std::size_t>(sj)];
        }
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
    }
  }
  return out;
}

}  // namespace fer

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "fer/error.hpp"
#include "fer/matrix.hpp"

namespace fer {

namespace detail {

inline void skip_pgm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      in.get();
    } else {
      return;
    }
  }
}

inline long read_pgm_int(std::istream& in, const std::string& path) {
  skip_pgm_space(in);
  long v = -1;
  if (!(in >> v) || v < 0) fail(ErrorKind::UnreadableImage, path + ": malformed PGM header");
  return v;
}

}  // namespace detail

/// Binary 8-bit PGM (P5) scaled to [0, 1].
inline Matrix read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::UnreadableImage, "cannot open '" + path + "'");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5')
    fail(ErrorKind::UnreadableImage, path + ": not a binary PGM (P5)");
  const long cols = detail::read_pgm_int(in, path);
  const long rows = detail::read_pgm_int(in, path);
  const long maxval = detail::read_pgm_int(in, path);
  if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 255)
    fail(ErrorKind::UnreadableImage, path + ": only 8-bit grayscale PGM is supported");
  in.get();  // single whitespace before the raster
  std::vector<unsigned char> raster(static_cast<std::size_t>(rows * cols));
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.size()))
    fail(ErrorKind::UnreadableImage, path + ": truncated raster");
  std::vector<double> data(raster.size());
  for (std::size_t i = 0; i < raster.size(); ++i)
    data[i] = static_cast<double>(raster[i]) / static_cast<double>(maxval);
  return Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(data));
}

/// Writes values clamped to [0, 1] as 8-bit P5.
inline void write_pgm(const std::string& path, const Matrix& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  std::vector<unsigned char> raster(image.size());
  for (std::size_t i = 0; i < raster.size(); ++i)
    raster[i] =
        static_cast<unsigned char>(std::lround(std::clamp(image.values()[i], 0.0, 1.0) * 255.0));
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
inline Matrix resize_bilinear(const Matrix& src, std::size_t rows, std::size_t cols) {
  if (src.rows() == rows && src.cols() == cols) return src;
  Matrix out(rows, cols);
  const double sy = static_cast<double>(src.rows()) / static_cast<double>(rows);
  const double sx = static_cast<double>(src.cols()) / static_cast<double>(cols);
  const double max_y = static_cast<double>(src.rows() - 1);
  const double max_x = static_cast<double>(src.cols() - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t y1 = std::min(y0 + 1, src.rows() - 1);
    const double ay = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(std::floor(x));
      const std::size_t x1 = std::min(x0 + 1, src.cols() - 1);
      const double ax = x - static_cast<double>(x0);
      out(r, c) = (1 - ay) * ((1 - ax) * src(y0, x0) + ax * src(y0, x1)) +
                  ay * ((1 - ax) * src(y1, x0) + ax * src(y1, x1));
    }
  }
  return out;
}

}  // namespace fer

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fer/error.hpp"
#include "fer/matrix.hpp"

namespace fer {

struct Point2 {
  double x = 0.0;  // column
  double y = 0.0;  // row

  bool operator==(const Point2&) const = default;
};

struct TrackerOptions {
  int levels = 3;
  int window = 15;  // odd side length
  int max_iters = 20;
  double eps = 0.01;  // update norm that ends the refinement, in level pixels
  // Lost when the level-0 gradient matrix has minimum eigenvalue below
  // min_eig_factor · window².
  double min_eig_factor = 1e-4;

  void validate() const {
    require(levels >= 1, ErrorKind::InvalidConfig, "tracker: levels must be >= 1");
    require(window >= 3 && window % 2 == 1, ErrorKind::InvalidConfig,
            "tracker: window must be odd and >= 3");
    require(max_iters >= 1, ErrorKind::InvalidConfig, "tracker: max_iters must be >= 1");
    require(eps > 0.0 && min_eig_factor >= 0.0, ErrorKind::InvalidConfig,
            "tracker: eps must be > 0");
  }

  int half_window() const noexcept { return window / 2; }

  bool operator==(const TrackerOptions&) const = default;
};

namespace detail {

// 5-tap binomial smoothing with edge replication, then every second pixel.
inline Matrix pyramid_down(const Matrix& img) {
  static constexpr double taps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const auto rows = static_cast<std::ptrdiff_t>(img.rows());
  const auto cols = static_cast<std::ptrdiff_t>(img.cols());
  auto clampi = [](std::ptrdiff_t v, std::ptrdiff_t hi) {
    return std::clamp<std::ptrdiff_t>(v, 0, hi - 1);
  };
  Matrix tmp(img.rows(), img.cols());
  for (std::ptrdiff_t r = 0; r < rows; ++r)
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int t = -2; t <= 2; ++t) s += taps[t + 2] * img(r, clampi(c + t, cols));
      tmp(r, c) = s;
    }
  const std::size_t out_rows = (img.rows() + 1) / 2;
  const std::size_t out_cols = (img.cols() + 1) / 2;
  Matrix out(out_rows, out_cols);
  for (std::size_t r = 0; r < out_rows; ++r)
    for (std::size_t c = 0; c < out_cols; ++c) {
      double s = 0.0;
      for (int t = -2; t <= 2; ++t)
        s += taps[t + 2] * tmp(clampi(static_cast<std::ptrdiff_t>(2 * r) + t, rows), 2 * c);
      out(r, c) = s;
    }
  return out;
}

struct Level {
  Matrix image;
  Matrix gx;  // central differences, edge-replicated
  Matrix gy;
};

inline Level make_level(Matrix image) {
  Level l;
  const std::size_t rows = image.rows(), cols = image.cols();
  l.gx = Matrix(rows, cols);
  l.gy = Matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t cl = c > 0 ? c - 1 : 0, cr = std::min(c + 1, cols - 1);
      const std::size_t ru = r > 0 ? r - 1 : 0, rd = std::min(r + 1, rows - 1);
      l.gx(r, c) = 0.5 * (image(r, cr) - image(r, cl));
      l.gy(r, c) = 0.5 * (image(rd, c) - image(ru, c));
    }
  l.image = std::move(image);
  return l;
}

inline std::vector<Level> build_pyramid(const Matrix& frame, int levels) {
  std::vector<Level> out;
  Matrix img = frame;
  for (int l = 0; l < levels; ++l) {
    Matrix next = l + 1 < levels ? pyramid_down(img) : Matrix();
    out.push_back(make_level(std::move(img)));
    img = std::move(next);
    if (l + 1 < levels && (img.rows() < 2 || img.cols() < 2)) break;
  }
  return out;
}

// Bilinear sampler for all points of a window centered at (cx, cy): every
// sample shares the fractional offset, so the weights are computed once.
struct WindowSampler {
  std::ptrdiff_t x0, y0;
  double w00, w01, w10, w11;

  WindowSampler(double cx, double cy) {
    const double fx = std::floor(cx), fy = std::floor(cy);
    x0 = static_cast<std::ptrdiff_t>(fx);
    y0 = static_cast<std::ptrdiff_t>(fy);
    const double ax = cx - fx, ay = cy - fy;
    w00 = (1 - ax) * (1 - ay);
    w01 = ax * (1 - ay);
    w10 = (1 - ax) * ay;
    w11 = ax * ay;
  }

  double operator()(const Matrix& m, int dx, int dy) const {
    const auto rows = static_cast<std::ptrdiff_t>(m.rows());
    const auto cols = static_cast<std::ptrdiff_t>(m.cols());
    const std::ptrdiff_t x = x0 + dx, y = y0 + dy;
    const auto cx0 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x, 0, cols - 1));
    const auto cx1 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x + 1, 0, cols - 1));
    const auto cy0 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y, 0, rows - 1));
    const auto cy1 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y + 1, 0, rows - 1));
    return w00 * m(cy0, cx0) + w01 * m(cy0, cx1) + w10 * m(cy1, cx0) + w11 * m(cy1, cx1);
  }
};

inline double min_eig_2x2(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double half = 0.5 * (a - c);
  return mean - std::sqrt(half * half + b * b);
}

struct PointStep {
  Point2 position;
  bool lost = false;
};

// One point from `prev` to `next`; `u` is in level-0 coordinates.
inline PointStep track_point(const std::vector<Level>& prev, const std::vector<Level>& next,
                             Point2 u, const TrackerOptions& opts) {
  const int h = opts.half_window();
  const double threshold = opts.min_eig_factor * opts.window * opts.window;
  const int top = static_cast<int>(prev.size()) - 1;
  double gx = 0.0, gy = 0.0;  // pyramidal guess at the current level
  double dx = 0.0, dy = 0.0;
  for (int level = top; level >= 0; --level) {
    const double scale = std::ldexp(1.0, -level);
    const double px = u.x * scale, py = u.y * scale;
    const Level& li = prev[level];
    const Level& lj = next[level];
    const WindowSampler at_i(px, py);
    std::vector<double> ival, ix, iy;
    ival.reserve(static_cast<std::size_t>(opts.window * opts.window));
    ix.reserve(ival.capacity());
    iy.reserve(ival.capacity());
    double gxx = 0.0, gxy = 0.0, gyy = 0.0;
    for (int wy = -h; wy <= h; ++wy)
      for (int wx = -h; wx <= h; ++wx) {
        const double a = at_i(li.gx, wx, wy), b = at_i(li.gy, wx, wy);
        ival.push_back(at_i(li.image, wx, wy));
        ix.push_back(a);
        iy.push_back(b);
        gxx += a * a;
        gxy += a * b;
        gyy += b * b;
      }
    const double det = gxx * gyy - gxy * gxy;
    const double me = min_eig_2x2(gxx, gxy, gyy);
    if (level == 0 && me < threshold) return {u, true};
    double nx = 0.0, ny = 0.0;
    if (det > 0.0 && me > 0.0) {
      for (int it = 0; it < opts.max_iters; ++it) {
        const WindowSampler at_j(px + gx + nx, py + gy + ny);
        double bx = 0.0, by = 0.0;
        std::size_t idx = 0;
        for (int wy = -h; wy <= h; ++wy)
          for (int wx = -h; wx <= h; ++wx, ++idx) {
            const double diff = ival[idx] - at_j(lj.image, wx, wy);
            bx += diff * ix[idx];
            by += diff * iy[idx];
          }
        const double ex = (gyy * bx - gxy * by) / det;
        const double ey = (gxx * by - gxy * bx) / det;
        nx += ex;
        ny += ey;
        if (std::hypot(ex, ey) < opts.eps) break;
      }
    }
    if (level > 0) {
      gx = 2.0 * (gx + nx);
      gy = 2.0 * (gy + ny);
    } else {
      dx = gx + nx;
      dy = gy + ny;
    }
  }
  const Point2 moved{u.x + dx, u.y + dy};
  const double max_x = static_cast<double>(prev[0].image.cols() - 1);
  const double max_y = static_cast<double>(prev[0].image.rows() - 1);
  if (!std::isfinite(moved.x) || !std::isfinite(moved.y) || moved.x < 0.0 || moved.y < 0.0 ||
      moved.x > max_x || moved.y > max_y)
    return {u, true};
  return {moved, false};
}

}  // namespace detail

/// Raw tracking result: positions[t][i] and lost[t][i].
struct PointTracks {
  std::vector<std::vector<Point2>> positions;
  std::vector<std::vector<bool>> lost;
};

/// Pyramidal Lucas-Kanade over consecutive frame pairs. Lost points keep
/// their last position and are not tracked further.
inline PointTracks track_points(std::span<const Matrix> frames, std::span<const Point2> points,
                                const TrackerOptions& opts = {}) {
  opts.validate();
  require(frames.size() >= 2, ErrorKind::TooFewFrames, "tracking needs at least two frames");
  for (const Matrix& f : frames)
    require(f.rows() == frames[0].rows() && f.cols() == frames[0].cols(),
            ErrorKind::HeterogeneousFrameSizes, "frames differ in size");
  PointTracks out;
  out.positions.emplace_back(points.begin(), points.end());
  out.lost.emplace_back(points.size(), false);
  std::vector<detail::Level> prev = detail::build_pyramid(frames[0], opts.levels);
  for (std::size_t t = 1; t < frames.size(); ++t) {
    std::vector<detail::Level> next = detail::build_pyramid(frames[t], opts.levels);
    std::vector<Point2> pos = out.positions.back();
    std::vector<bool> lost = out.lost.back();
    for (std::size_t i = 0; i < pos.size(); ++i) {
      if (lost[i]) continue;
      const auto step = detail::track_point(prev, next, pos[i], opts);
      pos[i] = step.position;
      lost[i] = step.lost;
    }
    out.positions.push_back(std::move(pos));
    out.lost.push_back(std::move(lost));
    prev = std::move(next);
  }
  return out;
}

}  // namespace fer

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fer/bidirectional.hpp"
#include "fer/error.hpp"
#include "fer/matrix.hpp"
#include "fer/scatter.hpp"
#include "fer/tracker.hpp"

namespace fer {

inline constexpr std::size_t kGridPoints = 113;

/// Face grid placed on the first frame.
class GridModel {
 public:
  GridModel() = default;

  /// Requires exactly 113 points, each at least `margin` pixels inside the
  /// frame.
  GridModel(std::vector<Point2> points, std::size_t rows, std::size_t cols, double margin = 0.0)
      : points_(std::move(points)), rows_(rows), cols_(cols) {
    if (points_.size() != kGridPoints)
      fail(ErrorKind::InvalidArgument,
           "grid has " + std::to_string(points_.size()) + " points, expected 113");
    check_bounds(margin);
  }

  const std::vector<Point2>& points() const noexcept { return points_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  void check_bounds(double margin) const {
    const double max_x = static_cast<double>(cols_) - 1.0 - margin;
    const double max_y = static_cast<double>(rows_) - 1.0 - margin;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const Point2& p = points_[i];
      if (!(std::isfinite(p.x) && std::isfinite(p.y) && p.x >= margin && p.y >= margin &&
            p.x <= max_x && p.y <= max_y))
        fail(ErrorKind::GridOutOfBounds, "grid point " + std::to_string(i) + " (" +
                                             std::to_string(p.x) + ", " + std::to_string(p.y) +
                                             ") is closer than " + std::to_string(margin) +
                                             " px to the border of a " + std::to_string(rows_) +
                                             "x" + std::to_string(cols_) + " frame");
    }
  }

  bool operator==(const GridModel&) const = default;

 private:
  std::vector<Point2> points_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

/// Regular 113-point lattice clipped to the ellipse inscribed in the frame
/// minus `margin`: the closest lattice points to the center, at the widest
/// spacing that still holds 113 of them.
inline GridModel synthetic_grid(std::size_t rows, std::size_t cols, double margin) {
  const double cx = (static_cast<double>(cols) - 1.0) / 2.0;
  const double cy = (static_cast<double>(rows) - 1.0) / 2.0;
  const double ax = cx - margin, ay = cy - margin;
  if (!(ax > 0.0 && ay > 0.0))
    fail(ErrorKind::GridOutOfBounds,
         "frame too small for a grid with margin " + std::to_string(margin));
  struct Candidate {
    Point2 p;
    double radius;
  };
  for (double spacing = std::min(ax, ay); spacing > 1e-3; spacing *= 0.97) {
    std::vector<Candidate> inside;
    const int nx = static_cast<int>(std::floor(ax / spacing));
    const int ny = static_cast<int>(std::floor(ay / spacing));
    for (int j = -ny; j <= ny; ++j)
      for (int i = -nx; i <= nx; ++i) {
        const double x = i * spacing, y = j * spacing;
        const double rad = (x / ax) * (x / ax) + (y / ay) * (y / ay);
        if (rad <= 1.0) inside.push_back({{cx + x, cy + y}, rad});
      }
    if (inside.size() < kGridPoints) continue;
    std::stable_sort(inside.begin(), inside.end(),
                     [](const Candidate& a, const Candidate& b) { return a.radius < b.radius; });
    inside.resize(kGridPoints);
    std::sort(inside.begin(), inside.end(), [](const Candidate& a, const Candidate& b) {
      return a.p.y != b.p.y ? a.p.y < b.p.y : a.p.x < b.p.x;
    });
    std::vector<Point2> pts;
    for (const auto& c : inside) pts.push_back(c.p);
    return GridModel(std::move(pts), rows, cols, margin);
  }
  fail(ErrorKind::GridOutOfBounds, "cannot fit 113 grid points");
}

/// Tracked positions per frame; lost points carry their last valid position.
struct Trajectory {
  std::vector<std::vector<Point2>> positions;  // f × points
  std::vector<std::vector<bool>> lost;         // f × points

  std::size_t frames() const noexcept { return positions.size(); }
  std::size_t points() const noexcept { return positions.empty() ? 0 : positions[0].size(); }

  bool operator==(const Trajectory&) const = default;
};

inline Trajectory track_pyramidal_lk(std::span<const Matrix> frames, const GridModel& grid,
                                     const TrackerOptions& opts = {}) {
  opts.validate();
  require(frames.size() >= 2, ErrorKind::TooFewFrames, "tracking needs at least two frames");
  if (!(frames[0].rows() == grid.rows() && frames[0].cols() == grid.cols()))
    fail(ErrorKind::GridOutOfBounds, "grid was placed on a " + std::to_string(grid.rows()) + "x" +
                                         std::to_string(grid.cols()) + " frame, sequence is " +
                                         std::to_string(frames[0].rows()) + "x" +
                                         std::to_string(frames[0].cols()));
  grid.check_bounds(opts.half_window());
  PointTracks t = track_points(frames, grid.points(), opts);
  return {std::move(t.positions), std::move(t.lost)};
}

/// Re-estimates each lost point at frame t as its last tracked position plus
/// the mean displacement, over the same interval, of its 4 nearest non-lost
/// neighbors. Distances are measured on `reference` (the first-frame
/// positions). The lost mask is kept. Non-lost entries are untouched.
inline Trajectory recover_lost_points(const Trajectory& traj, std::span<const Point2> reference) {
  const std::size_t np = traj.points();
  require(reference.size() == np, ErrorKind::DimensionMismatch,
          "reference point count differs from the trajectory");
  Trajectory out = traj;
  for (std::size_t t = 1; t < traj.frames(); ++t) {
    const auto& lost = traj.lost[t];
    if (std::none_of(lost.begin(), lost.end(), [](bool b) { return b; })) continue;
    if (std::all_of(lost.begin(), lost.end(), [](bool b) { return b; }))
      fail(ErrorKind::AllPointsLost, "every point is lost at frame " + std::to_string(t));
    for (std::size_t i = 0; i < np; ++i) {
      if (!lost[i]) continue;
      std::size_t last = t;
      while (last > 0 && traj.lost[last][i]) --last;
      std::vector<std::size_t> cand;
      for (std::size_t j = 0; j < np; ++j)
        if (!lost[j]) cand.push_back(j);
      auto dist2 = [&](std::size_t j) {
        const double dx = reference[j].x - reference[i].x;
        const double dy = reference[j].y - reference[i].y;
        return dx * dx + dy * dy;
      };
      const std::size_t k = std::min<std::size_t>(4, cand.size());
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                        [&](std::size_t a, std::size_t b) {
                          const double da = dist2(a), db = dist2(b);
                          return da != db ? da < db : a < b;
                        });
      double mx = 0.0, my = 0.0;
      for (std::size_t q = 0; q < k; ++q) {
        const std::size_t j = cand[q];
        mx += traj.positions[t][j].x - traj.positions[last][j].x;
        my += traj.positions[t][j].y - traj.positions[last][j].y;
      }
      out.positions[t][i] = {traj.positions[last][i].x + mx / static_cast<double>(k),
                             traj.positions[last][i].y + my / static_cast<double>(k)};
    }
  }
  return out;
}

inline Trajectory recover_lost_points(const Trajectory& traj, const GridModel& grid) {
  return recover_lost_points(traj, grid.points());
}

/// (2·points) × (f − 1): rows interleave (dx, dy) per point, column r − 1
/// holds frame r relative to frame 0.
inline Matrix displacement_features(const Trajectory& traj) {
  require(traj.frames() >= 2, ErrorKind::TooFewFrames, "displacements need at least two frames");
  require(traj.points() > 0, ErrorKind::InvalidArgument, "trajectory has no points");
  Matrix d(2 * traj.points(), traj.frames() - 1);
  for (std::size_t r = 1; r < traj.frames(); ++r)
    for (std::size_t i = 0; i < traj.points(); ++i) {
      d(2 * i, r - 1) = traj.positions[r][i].x - traj.positions[0][i].x;
      d(2 * i + 1, r - 1) = traj.positions[r][i].y - traj.positions[0][i].y;
    }
  return d;
}

/// Bidirectional reduction of displacement matrices (one channel).
struct GeometricReducer {
  BidirectionalReducer reducer;

  const Matrix& v() const { return reducer.channels()(0, 0).v; }
  const Matrix& w() const { return reducer.channels()(0, 0).w; }
  std::size_t output_dim() const noexcept { return reducer.feature_dim(); }

  /// Row-major vectorization of Vᵀ·D·W.
  std::vector<double> transform(const Matrix& displacement) const {
    require(reducer.channels().size() == 1, ErrorKind::ReducerNotFitted,
            "geometric reducer is not fitted");
    Grid2<Matrix> g(1, 1);
    g(0, 0) = displacement;
    return reducer.concat_features(g);
  }

  bool operator==(const GeometricReducer&) const = default;
};

inline GeometricReducer reduce_geometric(const LabeledMatrixSet& matrices, std::size_t d_r,
                                         std::size_t d_c, const ReductionOptions& opts = {}) {
  Grid2<LabeledMatrixSet> grid(1, 1);
  grid(0, 0) = matrices;
  return {fit_bidirectional(grid, d_r, d_c, opts)};
}

/// Grid sidecar: one "x y" line per point.
inline std::vector<Point2> parse_grid_points(std::istream& in, const std::string& name) {
  std::vector<Point2> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Point2 p;
    std::string rest;
    if (!(ls >> p.x >> p.y) || (ls >> rest))
      fail(ErrorKind::BadFormat, name + ":" + std::to_string(lineno) + ": expected 'x y'");
    pts.push_back(p);
  }
  return pts;
}

inline GridModel read_grid_file(const std::string& path, std::size_t rows, std::size_t cols) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open grid file '" + path + "'");
  auto pts = parse_grid_points(in, path);
  if (pts.size() != kGridPoints)
    fail(ErrorKind::BadFormat,
         path + ": " + std::to_string(pts.size()) + " grid points, expected 113");
  return GridModel(std::move(pts), rows, cols);
}

inline void write_grid_file(const std::string& path, const GridModel& grid) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write grid file '" + path + "'");
  out.precision(17);
  for (const Point2& p : grid.points()) out << p.x << ' ' << p.y << '\n';
  require(static_cast<bool>(out), ErrorKind::Io, "write to '" + path + "' failed");
}

}  // namespace fer

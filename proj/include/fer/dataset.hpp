#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "fer/config.hpp"
#include "fer/error.hpp"
#include "fer/geometric.hpp"
#include "fer/matrix.hpp"
#include "fer/pgm.hpp"

namespace fer {

inline const std::array<std::string, 6>& class_names() {
  static const std::array<std::string, 6> names{"1_surprise", "2_gloomy", "3_fear",
                                                "4_happy",    "5_angry",  "6_disgust"};
  return names;
}

/// Single-letter headers used in report tables.
inline constexpr std::array<char, 6> kClassLetters{'S', 'G', 'F', 'H', 'A', 'D'};

struct SequenceRecord {
  std::string id;
  std::string group;  // source sequence; all variants of a group share a fold
  std::vector<Matrix> frames;
  int label = 0;  // 1..6
  double intensity_fraction = 1.0;
  std::optional<GridModel> grid;

  bool operator==(const SequenceRecord&) const = default;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// mt19937_64 with explicit transforms, so streams are identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) {
    return std::min(static_cast<std::size_t>(uniform() * static_cast<double>(n)), n - 1);
  }
  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t z = seed ^ fnv1a(tag);
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace detail {

struct Bump {
  double cx, cy, spread, amp;
  double kx = 0.0, ky = 0.0, phase = 0.0;  // grating inside the envelope; 0 for plain blobs
  double vx = 0.0, vy = 0.0;               // motion direction

  double envelope(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * spread * spread));
  }
  double value(double x, double y) const {
    return amp * envelope(x, y) * std::cos(kx * (x - cx) + ky * (y - cy) + phase);
  }
};

struct SubjectTexture {
  std::vector<Bump> parts;
  double gain = 1.0, offset = 0.0;

  double operator()(double x, double y) const {
    double v = 0.5;
    for (const auto& b : parts) v += b.value(x, y);
    return v;
  }
};

struct ClassModel {
  std::vector<Bump> motion;       // displacement field components
  std::vector<Bump> appearance;   // additive pattern grown with intensity
  std::vector<Bump> hetero;       // structured noise patterns ...
  std::vector<double> hetero_sd;  // ... and their class-specific spreads
};

inline Bump random_grating(Rng& rng, double w, double h, double amp, double spread_lo,
                           double spread_hi, double freq_lo, double freq_hi) {
  Bump b;
  b.cx = rng.uniform(0.2 * w, 0.8 * w);
  b.cy = rng.uniform(0.2 * h, 0.8 * h);
  b.spread = rng.uniform(spread_lo, spread_hi);
  b.amp = amp;
  const double f = rng.uniform(freq_lo, freq_hi);
  const double th = rng.uniform(0.0, std::numbers::pi);
  b.kx = f * std::cos(th);
  b.ky = f * std::sin(th);
  b.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return b;
}

inline SubjectTexture make_subject(Rng& rng, double w, double h, double identity) {
  SubjectTexture t;
  // Shared facial layout: eyes, brows, mouth, nose.
  const double s = std::min(w, h);
  t.parts.push_back({0.32 * w, 0.40 * h, 0.07 * s, -0.22});
  t.parts.push_back({0.68 * w, 0.40 * h, 0.07 * s, -0.22});
  t.parts.push_back({0.32 * w, 0.27 * h, 0.05 * s, -0.12, 0.0, 1.2, 0.0});
  t.parts.push_back({0.68 * w, 0.27 * h, 0.05 * s, -0.12, 0.0, 1.2, 0.0});
  t.parts.push_back({0.50 * w, 0.76 * h, 0.08 * s, -0.20, 0.0, 0.9, 0.0});
  t.parts.push_back({0.50 * w, 0.56 * h, 0.06 * s, 0.10});
  // Identity: blobs plus fine texture for the tracker.
  for (int i = 0; i < 6; ++i) {
    Bump b{rng.uniform(0.1 * w, 0.9 * w), rng.uniform(0.1 * h, 0.9 * h),
           rng.uniform(0.06, 0.16) * s, identity * rng.uniform(-0.10, 0.10)};
    t.parts.push_back(b);
  }
  for (int i = 0; i < 3; ++i) {
    Bump g =
        random_grating(rng, w, h, identity * rng.uniform(0.03, 0.06), 0.3 * s, 0.6 * s, 0.5, 1.1);
    t.parts.push_back(g);
  }
  t.gain = 1.0 + identity * rng.uniform(-0.12, 0.12);
  t.offset = identity * rng.uniform(-0.05, 0.05);
  return t;
}

inline ClassModel make_class(Rng& rng, double w, double h, const SynthConfig& cfg) {
  ClassModel m;
  const double s = std::min(w, h);
  // Facial regions that expressions move.
  static constexpr double regions[6][2] = {{0.50, 0.78}, {0.32, 0.28}, {0.68, 0.28},
                                           {0.30, 0.62}, {0.70, 0.62}, {0.50, 0.48}};
  for (int b = 0; b < 3; ++b) {
    const auto& r = regions[rng.index(6)];
    Bump mb{r[0] * w + rng.uniform(-0.05, 0.05) * w, r[1] * h + rng.uniform(-0.05, 0.05) * h,
            rng.uniform(0.10, 0.18) * s, cfg.motion * rng.uniform(0.5, 1.0)};
    const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    mb.vx = std::cos(th);
    mb.vy = std::sin(th);
    m.motion.push_back(mb);
  }
  for (int b = 0; b < 2; ++b)
    m.appearance.push_back(random_grating(rng, w, h, cfg.appearance, 0.10 * s, 0.2 * s, 0.4, 1.4));
  for (int b = 0; b < 4; ++b)
    m.hetero_sd.push_back(cfg.hetero * (b < 2 ? rng.uniform(1.2, 2.0) : rng.uniform(0.05, 0.2)));
  return m;
}

// Class c's structured noise runs along the appearance patterns of four
// other classes, so the noise of one class overlaps the signal of others.
inline void link_hetero(std::vector<ClassModel>& classes) {
  const std::size_t n = classes.size();
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t k = 0; k < classes[c].hetero_sd.size(); ++k) {
      Bump b = classes[(c + 1 + k) % n].appearance[k % 2];
      b.amp = 1.0;
      classes[c].hetero.push_back(b);
    }
}

inline Matrix render_frame(const SubjectTexture& subject, const ClassModel& cls,
                           const std::vector<double>& style, double progress, std::size_t rows,
                           std::size_t cols, double noise, Rng& rng) {
  Matrix frame(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = static_cast<double>(c), y = static_cast<double>(r);
      double dx = 0.0, dy = 0.0;
      for (const auto& m : cls.motion) {
        const double e = m.amp * m.envelope(x, y);
        dx += e * m.vx;
        dy += e * m.vy;
      }
      double v = subject.gain * subject(x - progress * dx, y - progress * dy) + subject.offset;
      for (const auto& a : cls.appearance) v += progress * a.value(x, y);
      for (std::size_t k = 0; k < cls.hetero.size(); ++k) v += style[k] * cls.hetero[k].value(x, y);
      v += noise * rng.normal();
      frame(r, c) = v;
    }
  return frame;
}

}  // namespace detail

/// Six classes of face-like sequences. Each class has its own motion field,
/// its own intensity-grown appearance pattern and its own structured-noise
/// covariance. Source sequences are repeated at several intensity fractions.
inline std::vector<SequenceRecord> gen_synthetic(const RunConfig& config, std::uint64_t seed) {
  config.validate();
  const auto& sc = config.synth;
  const double w = static_cast<double>(config.cols), h = static_cast<double>(config.rows);
  Rng class_rng(derive_seed(seed, "classes"));
  std::vector<detail::ClassModel> classes;
  for (std::size_t c = 0; c < 6; ++c) classes.push_back(detail::make_class(class_rng, w, h, sc));
  detail::link_hetero(classes);
  const GridModel grid = synthetic_grid(config.rows, config.cols, config.tracker.half_window());
  static constexpr double kLevels[4] = {0.25, 0.5, 0.75, 1.0};

  std::vector<SequenceRecord> out;
  for (std::size_t c = 0; c < 6; ++c) {
    const int groups = (sc.per_class + sc.variants - 1) / sc.variants;
    int made = 0;
    for (int g = 0; g < groups; ++g) {
      const std::string group = "c" + std::to_string(c + 1) + "_g" + std::to_string(g);
      Rng rng(derive_seed(seed, group));
      const auto subject = detail::make_subject(rng, w, h, sc.identity);
      std::vector<double> style;
      for (double sd : classes[c].hetero_sd) style.push_back(sd * rng.normal());
      std::array<int, 4> order{0, 1, 2, 3};
      for (int i = 3; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[rng.index(static_cast<std::size_t>(i) + 1)]);
      for (int v = 0; v < sc.variants && made < sc.per_class; ++v, ++made) {
        SequenceRecord rec;
        rec.id = group + "_v" + std::to_string(v);
        rec.group = group;
        rec.label = static_cast<int>(c) + 1;
        rec.intensity_fraction = sc.variants == 1 ? kLevels[3 - rng.index(4)]
                                                  : kLevels[order[static_cast<std::size_t>(v)]];
        Rng noise_rng(derive_seed(seed, rec.id));
        for (std::size_t r = 0; r < config.frames; ++r) {
          const double progress = rec.intensity_fraction * static_cast<double>(r) /
                                  static_cast<double>(config.frames - 1);
          rec.frames.push_back(detail::render_frame(subject, classes[c], style, progress,
                                                    config.rows, config.cols, sc.noise, noise_rng));
        }
        rec.grid = grid;
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

/// Writes `<root>/<class>/<id>/frame_###.pgm`, `meta.txt` and `<id>.grid`.
inline void write_dataset(const std::string& root, const std::vector<SequenceRecord>& records) {
  namespace fs = std::filesystem;
  for (const auto& rec : records) {
    if (!(rec.label >= 1 && rec.label <= 6))
      fail(ErrorKind::BadClassName,
           "record '" + rec.id + "' has label " + std::to_string(rec.label));
    const fs::path class_dir =
        fs::path(root) / class_names()[static_cast<std::size_t>(rec.label - 1)];
    const fs::path seq_dir = class_dir / rec.id;
    std::error_code ec;
    fs::create_directories(seq_dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create '" + seq_dir.string() + "': " + ec.message());
    for (std::size_t r = 0; r < rec.frames.size(); ++r) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%03zu.pgm", r + 1);
      write_pgm((seq_dir / name).string(), rec.frames[r]);
    }
    std::ofstream meta(seq_dir / "meta.txt");
    meta << "intensity_fraction = " << detail::fmt_double(rec.intensity_fraction) << "\n";
    meta << "group = " << rec.group << "\n";
    if (!meta) fail(ErrorKind::Io, "cannot write meta.txt for '" + rec.id + "'");
    if (rec.grid) write_grid_file((class_dir / (rec.id + ".grid")).string(), *rec.grid);
  }
}

namespace detail {

inline void read_meta(const std::filesystem::path& path, SequenceRecord& rec) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::UnreadableImage, "cannot read '" + path.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string key = trim(t.substr(0, eq == std::string::npos ? t.size() : eq));
    const std::string value = eq == std::string::npos ? "" : trim(t.substr(eq + 1));
    if (key == "intensity_fraction") {
      const double v = parse_number(path.string(), value);
      if (!(v > 0.0 && v <= 1.0))
        fail(ErrorKind::InvalidArgument, path.string() + ": intensity_fraction must lie in (0, 1]");
      rec.intensity_fraction = v;
    } else if (key == "group") {
      if (!value.empty()) rec.group = value;
    } else {
      fail(ErrorKind::BadFormat, path.string() + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace detail

/// Reads `<root>/<class>/<sequence>/frame_###.pgm` sequences. Frames are
/// resized to the configured size and `frame.count` of them are taken evenly
/// from first to last. A missing root or an empty one yields no records and a
/// warning on stderr.
inline std::vector<SequenceRecord> ingest_dataset(const std::string& root,
                                                  const RunConfig& config) {
  namespace fs = std::filesystem;
  std::vector<SequenceRecord> out;
  if (!fs::is_directory(root)) {
    std::cerr << "warning: dataset root '" << root << "' is not a directory\n";
    return out;
  }
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  static const std::regex frame_re(R"(frame_(\d+)\.pgm)");
  for (const auto& cdir : class_dirs) {
    const std::string cname = cdir.filename().string();
    const auto it = std::find(class_names().begin(), class_names().end(), cname);
    if (it == class_names().end())
      fail(ErrorKind::BadClassName, "class directory '" + cname +
                                        "' must be one of 1_surprise, 2_gloomy, 3_fear, 4_happy, "
                                        "5_angry, 6_disgust");
    const int label = static_cast<int>(it - class_names().begin()) + 1;
    std::vector<fs::path> seqs;
    for (const auto& e : fs::directory_iterator(cdir))
      if (e.is_directory()) seqs.push_back(e.path());
    std::sort(seqs.begin(), seqs.end());
    for (const auto& sdir : seqs) {
      SequenceRecord rec;
      rec.id = sdir.filename().string();
      rec.group = rec.id;
      rec.label = label;
      std::map<long, fs::path> frames;
      for (const auto& e : fs::directory_iterator(sdir)) {
        std::smatch m;
        const std::string name = e.path().filename().string();
        if (std::regex_match(name, m, frame_re)) frames[std::stol(m[1].str())] = e.path();
      }
      if (frames.empty())
        fail(ErrorKind::MissingFrames, "sequence '" + sdir.string() + "' has no frames");
      long expect = frames.begin()->first;
      for (const auto& [idx, path] : frames) {
        if (idx != expect)
          fail(ErrorKind::MissingFrames, "sequence '" + sdir.string() + "': frame " +
                                             std::to_string(expect) + " missing before frame " +
                                             std::to_string(idx));
        ++expect;
      }
      if (frames.size() < config.frames)
        fail(ErrorKind::MissingFrames, "sequence '" + sdir.string() + "' has " +
                                           std::to_string(frames.size()) + " frames, needs " +
                                           std::to_string(config.frames));
      std::vector<fs::path> ordered;
      for (const auto& [idx, path] : frames) ordered.push_back(path);
      std::size_t src_rows = 0, src_cols = 0;
      for (std::size_t r = 0; r < config.frames; ++r) {
        const std::size_t pick = static_cast<std::size_t>(
            std::lround(static_cast<double>(r) * static_cast<double>(ordered.size() - 1) /
                        static_cast<double>(config.frames - 1)));
        Matrix img = read_pgm(ordered[pick].string());
        if (r == 0) {
          src_rows = img.rows();
          src_cols = img.cols();
        } else if (img.rows() != src_rows || img.cols() != src_cols) {
          fail(ErrorKind::HeterogeneousFrameSizes,
               "sequence '" + sdir.string() + "' mixes frame sizes");
        }
        rec.frames.push_back(resize_bilinear(img, config.rows, config.cols));
      }
      if (fs::exists(sdir / "meta.txt")) detail::read_meta(sdir / "meta.txt", rec);
      const fs::path grid_path = cdir / (rec.id + ".grid");
      if (fs::exists(grid_path)) {
        std::ifstream gin(grid_path);
        auto pts = parse_grid_points(gin, grid_path.string());
        if (pts.size() != kGridPoints)
          fail(ErrorKind::BadFormat, grid_path.string() + ": " + std::to_string(pts.size()) +
                                         " grid points, expected 113");
        const double sx = static_cast<double>(config.cols) / static_cast<double>(src_cols);
        const double sy = static_cast<double>(config.rows) / static_cast<double>(src_rows);
        for (auto& p : pts) p = {(p.x + 0.5) * sx - 0.5, (p.y + 0.5) * sy - 0.5};
        rec.grid = GridModel(std::move(pts), config.rows, config.cols);
      }
      out.push_back(std::move(rec));
    }
  }
  if (out.empty()) std::cerr << "warning: no sequences found under '" << root << "'\n";
  return out;
}

}  // namespace fer

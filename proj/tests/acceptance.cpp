// Acceptance checks. Usage: acceptance [N ...]; no arguments runs all twelve.
// Prints one PASS/FAIL line per criterion and exits non-zero on any failure.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "reference_tables.hpp"
#include "test_util.hpp"

using fer::Matrix;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fer::ScatterSet make_scatters(Matrix sb, std::vector<Matrix> si, std::vector<std::size_t> counts) {
  fer::ScatterSet s;
  s.between = std::move(sb);
  s.per_class = std::move(si);
  s.class_counts = std::move(counts);
  const double total = static_cast<double>(s.total());
  s.within = Matrix(s.dim(), s.dim());
  for (std::size_t i = 0; i < s.classes(); ++i)
    s.within.add_scaled(s.per_class[i], static_cast<double>(s.class_counts[i]) / total);
  return s;
}

double quad(const Matrix& s, double c, double sn) {
  return c * c * s(0, 0) + 2 * c * sn * s(0, 1) + sn * sn * s(1, 1);
}

// J(θ) for w = (cos θ, sin θ).
double scalar_objective(const fer::ScatterSet& s, double t) {
  const double c = std::cos(t), sn = std::sin(t);
  double j = static_cast<double>(s.total()) * std::log(quad(s.between, c, sn));
  for (std::size_t i = 0; i < s.classes(); ++i)
    j -= static_cast<double>(s.class_counts[i]) * std::log(quad(s.per_class[i], c, sn));
  return j;
}

Outcome published_tables() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string d;
  for (const auto& t : testutil::reference_tables()) {
    const auto cm = testutil::to_confusion(t);
    const double rate = cm.recognition_rate();
    const bool good =
        std::abs(rate - t.rate) <= 0.05 && std::abs(cm.total() - 305.0) <= 0.5 &&
        fer::format_table(cm).find("Average Recognition Rate = ") != std::string::npos;
    ok = ok && good;
    d += fmt("%s=%.2f/%.2f ", t.method.c_str(), rate, cm.total());
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 1.0;
  return {ok, d + fmt("(%.3fs)", secs)};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(2, 8), cls(2, 4), cnt(2, 15);
  double worst = 0.0, square = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    // d = n makes J constant in W, so projections keep d < n; that case is checked separately.
    const std::size_t n = dim(rng), d = std::min<std::size_t>(n - 1, 1 + rep % 3), k = cls(rng);
    std::vector<Matrix> si;
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < k; ++i) {
      si.push_back(testutil::random_spd(rng, n));
      counts.push_back(cnt(rng));
    }
    const auto s = make_scatters(testutil::random_spd(rng, n), si, counts);
    const Matrix w = testutil::random_matrix(rng, n, d);
    const Matrix g = fer::hlda_gradient(w, s, 0.0);
    Matrix fd(n, d);
    const double h = 1e-6;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        Matrix wp = w, wm = w;
        wp(i, j) += h;
        wm(i, j) -= h;
        fd(i, j) = (fer::hlda_objective(wp, s, 0.0) - fer::hlda_objective(wm, s, 0.0)) / (2 * h);
      }
    worst = std::max(worst, (fd - g).frobenius() / std::max(g.frobenius(), 1e-12));
    const Matrix q = testutil::random_orthonormal(rng, n, n);
    square =
        std::max(square, fer::hlda_gradient(q, s, 0.0).frobenius() /
                             std::max(1.0, static_cast<double>(s.total()) * s.between.max_abs()));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-5 && square < 1e-10 && secs < 10.0,
          fmt("max relative error %.2e over 50 instances, square-W gradient %.1e (%.2fs)", worst,
              square, secs)};
}

Outcome angle_grid() {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> cnt(3, 20);
  fer::HldaOptions opts;
  opts.ridge = fer::Ridge::absolute(0.0);
  opts.max_iters = 1000;
  double worst = 0.0;
  for (int rep = 0; rep < 25; ++rep) {
    const auto s =
        make_scatters(testutil::random_spd(rng, 2, 0.05),
                      {testutil::random_spd(rng, 2, 0.05), testutil::random_spd(rng, 2, 0.05)},
                      {cnt(rng), cnt(rng)});
    const double j = fer::fit_2dhlda_traced(s, 1, opts).objective;
    double best = -1e300;
    for (int i = 0; i * 1e-4 < std::numbers::pi; ++i)
      best = std::max(best, scalar_objective(s, i * 1e-4));
    worst = std::max(worst, std::abs(best - j));
  }
  return {worst < 1e-6, fmt("max grid-minus-fit gap %.2e over 25 sets", worst)};
}

Outcome fisher_beats_random() {
  std::mt19937_64 rng(41);
  int beaten = 0;
  double margin = 1e300;
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 4 + static_cast<std::size_t>(rep % 4),
                      d = 1 + static_cast<std::size_t>(rep % 3);
    const auto s = fer::compute_scatters(testutil::random_set(rng, 3, 6, 5, n));
    const double best = fer::fisher_ratio(fer::fit_2dlda(s, d, 0.0), s);
    double top = 0.0;
    for (int i = 0; i < 1000; ++i)
      top = std::max(top, fer::fisher_ratio(testutil::random_orthonormal(rng, n, d), s));
    if (best >= top) ++beaten;
    margin = std::min(margin, best / top);
  }
  return {beaten == 10, fmt("%d/10 sets, min ratio fit/best-random %.4f", beaten, margin)};
}

Outcome homoscedastic() {
  std::mt19937_64 rng(51);
  fer::HldaOptions opts;
  opts.ridge = fer::Ridge::absolute(0.0);
  int same = 0;
  double gnorm = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 3 + static_cast<std::size_t>(rep % 5),
                      d = 1 + static_cast<std::size_t>(rep % 2);
    const Matrix s0 = testutil::random_spd(rng, n), sb = testutil::random_spd(rng, n);
    const auto s = make_scatters(sb, {s0, s0, s0}, {3, 5, 4});
    const auto fit = fer::fit_2dhlda_traced(s, d, opts);
    if (fit.from_initializer && fit.projection == fer::fit_2dlda(s, d, 0.0)) ++same;
    gnorm = std::max(gnorm, fer::hlda_gradient(fit.projection, s, 0.0).frobenius());
  }
  return {same == 20 && gnorm < 1e-8,
          fmt("%d/20 returned the initializer, max gradient norm %.2e", same, gnorm)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome heteroscedastic_advantage() {
  const auto t0 = Clock::now();
  std::vector<double> base, prop, geo;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    fer::RunConfig cfg;
    cfg.seed = seed;
    cfg.methods = {"2dlda-lda", "proposed", "proposed-geo"};
    const auto recs = fer::gen_synthetic(cfg, seed);
    const auto res = fer::cross_validate(recs, cfg);
    base.push_back(res.at("2dlda-lda").pooled.recognition_rate());
    prop.push_back(res.at("proposed").pooled.recognition_rate());
    geo.push_back(res.at("proposed-geo").pooled.recognition_rate());
    std::printf("  seed %2llu: 2dlda-lda %.2f  proposed %.2f  proposed-geo %.2f  (%zu records)\n",
                static_cast<unsigned long long>(seed), base.back(), prop.back(), geo.back(),
                recs.size());
    std::fflush(stdout);
  }
  const double mb = median(base), mp = median(prop), mg = median(geo), secs = seconds_since(t0);
  return {
      mp >= mb && mg >= mp && secs < 600.0,
      fmt("medians 2dlda-lda %.2f, proposed %.2f, proposed-geo %.2f (%.0fs)", mb, mp, mg, secs)};
}

Outcome scatter_identities() {
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<int> cls(2, 5), per(1, 6);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int k = cls(rng);
    const std::size_t m = dim(rng), n = dim(rng);
    std::vector<Matrix> samples;
    std::vector<int> labels;
    for (int c = 1; c <= k; ++c) {
      const Matrix shift = testutil::random_matrix(rng, m, n, 3.0);
      const int count = per(rng);
      for (int j = 0; j < count; ++j) {
        samples.push_back(shift + testutil::random_matrix(rng, m, n));
        labels.push_back(c);
      }
    }
    const fer::LabeledMatrixSet set(samples, labels);
    const auto s = fer::compute_scatters(set);
    const auto oracle = testutil::naive_scatters(samples, labels, k);
    const double scale = std::max(1.0, oracle.st.max_abs());
    worst = std::max(worst, testutil::max_abs_diff(s.between + s.within, oracle.st) / scale);
    Matrix pooled(n, n);
    for (int c = 0; c < k; ++c)
      pooled.add_scaled(s.per_class[static_cast<std::size_t>(c)],
                        static_cast<double>(s.class_counts[static_cast<std::size_t>(c)]) /
                            static_cast<double>(samples.size()));
    worst = std::max(worst, testutil::max_abs_diff(s.within, pooled) / scale);
  }
  return {worst < 1e-10, fmt("max scaled deviation %.2e over 100 sets", worst)};
}

Outcome gabor_bank() {
  const auto bank = fer::make_bank(fer::GaborConfig{});
  bool ok = bank.size() == 16;
  double mean_worst = 0.0, center_worst = 0.0;
  for (std::size_t k = 0; k < bank.size(); ++k) {
    const Matrix& g = bank.kernels[k];
    if (bank.info(k).parity == fer::GaborParity::Odd) {
      center_worst = std::max(center_worst, std::abs(g(g.rows() / 2, g.cols() / 2)));
    } else {
      double s = 0.0;
      for (double v : g.values()) s += v;
      mean_worst = std::max(mean_worst, std::abs(s / static_cast<double>(g.size())));
    }
  }
  ok = ok && center_worst == 0.0 && mean_worst < 1e-6;
  std::mt19937_64 rng(81);
  double conv_worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix frame = testutil::random_matrix(rng, 36, 48);
    const auto out = fer::apply_bank(frame, bank);
    for (std::size_t k = 0; k < bank.size(); ++k)
      conv_worst = std::max(
          conv_worst, testutil::max_abs_diff(out[k], testutil::naive_conv(frame, bank.kernels[k])));
  }
  ok = ok && conv_worst <= 1e-12;
  return {ok, fmt("p=%zu, odd center %.1e, even |mean| %.2e, conv diff %.2e", bank.size(),
                  center_worst, mean_worst, conv_worst)};
}

struct Wave {
  double a, wx, wy, phase;
};

Matrix render(const std::vector<Wave>& tex, std::size_t rows, std::size_t cols, double sx,
              double sy) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = static_cast<double>(c) - sx, y = static_cast<double>(r) - sy;
      double v = 128.0;
      for (const auto& w : tex) v += w.a * std::sin(w.wx * x + w.wy * y + w.phase);
      m(r, c) = v;
    }
  return m;
}

Outcome tracker() {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Wave> tex;
  for (int i = 0; i < 12; ++i)
    tex.push_back({20.0 + 10.0 * u(rng), 0.5 * u(rng), 0.5 * u(rng), 3.0 * u(rng)});
  const auto grid = fer::synthetic_grid(64, 80, 11.0);
  const std::vector<Matrix> moving{render(tex, 64, 80, 0, 0), render(tex, 64, 80, 3.0, -2.0)};
  const auto t = fer::track_pyramidal_lk(moving, grid);
  std::size_t good = 0;
  for (std::size_t i = 0; i < fer::kGridPoints; ++i) {
    const double dx = t.positions[1][i].x - t.positions[0][i].x,
                 dy = t.positions[1][i].y - t.positions[0][i].y;
    if (!t.lost[1][i] && std::abs(dx - 3.0) <= 0.1 && std::abs(dy + 2.0) <= 0.1) ++good;
  }
  const std::vector<Matrix> still(5, moving[0]);
  const double stat = fer::displacement_features(fer::track_pyramidal_lk(still, grid)).max_abs();
  const double frac = static_cast<double>(good) / static_cast<double>(fer::kGridPoints);
  return {frac >= 0.95 && stat == 0.0,
          fmt("%zu/%zu points within 0.1 px (%.1f%%), static max |d| = %g", good, fer::kGridPoints,
              100 * frac, stat)};
}

// Projected gradient on the dual with an augmented Lagrangian for yᵀα = 0.
std::vector<double> reference_dual(const Matrix& k, const std::vector<int>& y, double c) {
  const std::size_t n = y.size();
  std::vector<double> a(n, 0.0), g(n);
  double lambda = 0.0, lmax = 0.0;
  const double rho = 10.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(k(i, j));
    lmax = std::max(lmax, row);
  }
  const double step = 1.0 / (lmax + rho * static_cast<double>(n));
  for (int outer = 0; outer < 200; ++outer) {
    for (int it = 0; it < 5000; ++it) {
      double ya = 0.0;
      for (std::size_t i = 0; i < n; ++i) ya += y[i] * a[i];
      for (std::size_t i = 0; i < n; ++i) {
        double qa = 0.0;
        for (std::size_t j = 0; j < n; ++j) qa += y[i] * y[j] * k(i, j) * a[j];
        g[i] = qa - 1.0 + (lambda + rho * ya) * y[i];
      }
      for (std::size_t i = 0; i < n; ++i) a[i] = std::clamp(a[i] - step * g[i], 0.0, c);
    }
    double ya = 0.0;
    for (std::size_t i = 0; i < n; ++i) ya += y[i] * a[i];
    lambda += rho * ya;
  }
  return a;
}

bool kkt_ok(const fer::SvmModel& m, double& worst) {
  bool ok = true;
  for (const auto& b : m.machines) {
    double sum = 0.0;
    for (std::size_t i = 0; i < b.alpha.size(); ++i) {
      ok = ok && b.alpha[i] >= 0.0 && b.alpha[i] <= m.c;
      sum += b.alpha[i] * b.y[i];
    }
    worst = std::max(worst, std::abs(sum));
  }
  return ok && worst < 1e-8;
}

Outcome svm() {
  double kkt = 0.0;
  bool ok = true;
  std::vector<fer::SvmModel> models;

  const Matrix xor4{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<int> y4{1, 1, 2, 2};
  models.push_back(fer::train_svm_rbf(xor4, y4, {10.0, 1.0}));
  int correct = 0;
  for (std::size_t i = 0; i < 4; ++i)
    correct += fer::svm_predict(models.back(), xor4.row(i)) == y4[i];

  std::mt19937_64 rng(101);
  std::normal_distribution<double> n(0.0, 0.15);
  Matrix cloud(100, 2);
  std::vector<int> yc;
  for (std::size_t i = 0; i < 100; ++i) {
    const int qx = static_cast<int>(i % 2), qy = static_cast<int>((i / 2) % 2);
    cloud(i, 0) = qx + n(rng);
    cloud(i, 1) = qy + n(rng);
    yc.push_back(qx == qy ? 1 : 2);
  }
  models.push_back(fer::train_svm_rbf(cloud, yc, {10.0, 2.0}));
  for (std::size_t i = 0; i < 100; ++i)
    correct += fer::svm_predict(models.back(), cloud.row(i)) == yc[i];
  ok = ok && correct == 104;

  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(20, 2);
  std::vector<int> labels, y;
  for (std::size_t i = 0; i < 20; ++i) {
    const int cls = i % 2 ? 2 : 1;
    x(i, 0) = g(rng) + (cls == 1 ? -0.7 : 0.7);
    x(i, 1) = g(rng);
    labels.push_back(cls);
    y.push_back(cls == 1 ? 1 : -1);
  }
  const double c = 1.0, gamma = 0.5;
  models.push_back(fer::train_svm_rbf(x, labels, {c, gamma, 1e-9}));
  Matrix k(20, 20);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 20; ++j)
      k(i, j) =
          std::exp(-gamma * (std::pow(x(i, 0) - x(j, 0), 2) + std::pow(x(i, 1) - x(j, 1), 2)));
  const auto a = reference_dual(k, y, c);
  double bsum = 0.0;
  int free = 0;
  for (std::size_t i = 0; i < 20; ++i)
    if (a[i] > 1e-6 && a[i] < c - 1e-6) {
      double f = 0.0;
      for (std::size_t j = 0; j < 20; ++j) f += a[j] * y[j] * k(i, j);
      bsum += y[i] - f;
      ++free;
    }
  const double b = free ? bsum / free : 0.0;
  int agree = 0;
  double dev = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    double f = b;
    for (std::size_t j = 0; j < 20; ++j) f += a[j] * y[j] * k(i, j);
    agree += fer::svm_predict(models.back(), x.row(i)) == (f >= 0 ? 1 : 2);
    dev = std::max(dev, std::abs(fer::svm_vote(models.back(), x.row(i)).decisions[0] - f));
  }
  ok = ok && free > 0 && agree == 20 && dev < 1e-4;

  Matrix bx;
  std::vector<int> by;
  {
    std::mt19937_64 crng(99);
    const Matrix centers = testutil::random_matrix(crng, 6, 3, 2.0);
    std::normal_distribution<double> s(0.0, 1.5);
    bx = Matrix(48, 3);
    for (std::size_t i = 0; i < 48; ++i) {
      for (std::size_t d = 0; d < 3; ++d) bx(i, d) = centers(i / 8, d) + s(rng);
      by.push_back(static_cast<int>(i / 8) + 1);
    }
  }
  models.push_back(fer::train_svm_rbf(bx, by, {2.0, 0.0}));
  for (const auto& m : models) ok = kkt_ok(m, kkt) && ok;
  return {ok,
          fmt("XOR %d/104 correct, QP oracle agrees on %d/20 (max |df| %.1e), max |sum a y| %.1e",
              correct, agree, dev, kkt)};
}

Outcome fuzzy_tree() {
  std::mt19937_64 rng(111);
  std::mt19937_64 crng(99);
  const Matrix centers = testutil::random_matrix(crng, 6, 4, 2.0);
  std::normal_distribution<double> s(0.0, 1.0);
  Matrix x(36, 4), t(36, 6);
  for (std::size_t i = 0; i < 36; ++i) {
    for (std::size_t d = 0; d < 4; ++d) x(i, d) = centers(i / 6, d) + s(rng);
    t(i, i / 6) = 0.9;
  }
  fer::NfTreeOptions opts;
  opts.epochs = 15;
  double worst = 0.0;
  int checked = 0;
  Matrix z(x.rows(), x.cols());
  const auto tree = fer::train_nf_tree(x, t, opts, [&](int, const fer::NeuroFuzzyTree& tr, double) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto zs = tr.standardize(x.row(r));
      std::copy(zs.begin(), zs.end(), z.row(r).begin());
    }
    std::vector<double> grad;
    tr.loss_and_gradient(z, t, &grad);
    const auto p = tr.parameters();
    fer::NeuroFuzzyTree probe = tr;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(p[i]));
      auto pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      probe.set_parameters(pp);
      const double lp = probe.loss_and_gradient(z, t, nullptr);
      probe.set_parameters(pm);
      const double lm = probe.loss_and_gradient(z, t, nullptr);
      const double fd = (lp - lm) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad[i]) / std::max(std::abs(fd), 1e-6));
      ++checked;
    }
  });
  std::normal_distribution<double> wide(0.0, 10.0);
  int bounded = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> q(4);
    for (double& v : q) v = wide(rng) * (i % 3 == 0 ? 100.0 : 1.0);
    const auto out = tree.predict(q);
    bounded += std::all_of(out.begin(), out.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
  }
  return {checked > 0 && worst < 1e-4 && bounded == 1000,
          fmt("%d gradient entries, max relative error %.2e; %d/1000 probes in [0, 1]", checked,
              worst, bounded)};
}

Outcome determinism() {
  fer::RunConfig cfg;
  cfg.rows = 24;
  cfg.cols = 32;
  cfg.d_r = 6;
  cfg.d_c = 5;
  cfg.geo_d_r = 4;
  cfg.synth.per_class = 8;
  cfg.hlda.max_iters = 10;
  const auto recs = fer::gen_synthetic(cfg, 12);
  fer::FeatureCache cache(recs, cfg);
  const auto fold_of = fer::assign_folds(recs, cfg.folds);
  const auto train = fer::fold_indices(fold_of, 0, false),
             test = fer::fold_indices(fold_of, 0, true);
  std::vector<fer::Method> methods;
  for (const auto& m : fer::all_methods()) methods.push_back(fer::parse_method(m));
  int exact = 0;
  for (const auto& model : fer::train_models(methods, cache, train)) {
    const auto back = fer::deserialize_model(fer::serialize(model));
    // Evaluate through a fresh cache, as a separate process would.
    fer::FeatureCache fresh(recs, back.config);
    exact += fer::evaluate(model, cache, test) == fer::evaluate(back, fresh, test) && back == model;
  }
  const auto report = [&] {
    const auto r = fer::gen_synthetic(cfg, 12);
    return fer::summary_report(fer::cross_validate(r, cfg), r.size(), 12);
  };
  const bool same = report() == report();
  return {exact == 5 && same, fmt("%d/5 methods bit-exact after round trip; repeated reports %s",
                                  exact, same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"confusion tables reproduce published rates", published_tables},
      {"objective gradient matches finite differences", gradient_check},
      {"2x2 optimum matches angle grid", angle_grid},
      {"2DLDA beats random orthonormal projections", fisher_beats_random},
      {"homoscedastic case keeps the initializer", homoscedastic},
      {"heteroscedastic advantage over 10 seeds", heteroscedastic_advantage},
      {"scatter identities", scatter_identities},
      {"Gabor bank properties", gabor_bank},
      {"tracker translation and static sequence", tracker},
      {"SVM XOR, KKT and QP oracle", svm},
      {"neuro-fuzzy tree gradient and bounds", fuzzy_tree},
      {"serialization and determinism", determinism},
  };
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::cerr << "usage: acceptance [1-12 ...]\n";
      return 2;
    }
    which.push_back(n);
  }
  if (which.empty())
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) which.push_back(i);
  int failed = 0;
  for (int n : which) {
    const auto& [name, run] = criteria[static_cast<std::size_t>(n - 1)];
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d: %s: %s\n", o.pass ? "PASS" : "FAIL", n, name.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}

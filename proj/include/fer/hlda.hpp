#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "fer/error.hpp"
#include "fer/linalg.hpp"
#include "fer/matrix.hpp"
#include "fer/scatter.hpp"

namespace fer {

// Ridge convention: every scatter S enters as S + ridge·I, so each projected
// Gram is Wᵀ(S + ridge·I)W. For orthonormal W this is WᵀSW + ridge·I_d, and
// the heteroscedastic objective stays invariant under W -> W·R for any
// invertible R because M = Σ M_i.

namespace detail {

inline Matrix ridged(const Matrix& s, double ridge) {
  Matrix out = s;
  out.add_identity(ridge);
  return out;
}

struct ProjectedTerm {
  Matrix sw;    // S·W
  Matrix chol;  // Cholesky factor of Wᵀ S W
  double log_det;
};

inline std::optional<ProjectedTerm> project_term(const Matrix& w, const Matrix& s) {
  ProjectedTerm t;
  t.sw = s * w;
  Matrix g = transpose_times(w, t.sw);
  g.symmetrize();
  auto l = try_cholesky(g);
  if (!l) return std::nullopt;
  t.chol = *std::move(l);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.chol.rows(); ++i) sum += std::log(t.chol(i, i));
  t.log_det = 2.0 * sum;
  return t;
}

/// Scatter matrices with the ridge already applied, shared by the objective
/// and gradient evaluations of one fit.
struct RidgedScatters {
  Matrix between;
  std::vector<Matrix> per_class;
  std::vector<double> weights;  // M_i
  double total = 0.0;           // M

  RidgedScatters(const ScatterSet& s, double ridge) : between(ridged(s.between, ridge)) {
    for (std::size_t i = 0; i < s.classes(); ++i) {
      per_class.push_back(ridged(s.per_class[i], ridge));
      weights.push_back(static_cast<double>(s.class_counts[i]));
      total += weights.back();
    }
  }

  struct Evaluation {
    double j;
    ProjectedTerm between;
    std::vector<ProjectedTerm> per_class;
  };

  std::optional<Evaluation> evaluate(const Matrix& w) const {
    auto b = project_term(w, between);
    if (!b) return std::nullopt;
    Evaluation e{total * b->log_det, *std::move(b), {}};
    for (std::size_t i = 0; i < per_class.size(); ++i) {
      auto t = project_term(w, per_class[i]);
      if (!t) return std::nullopt;
      e.j -= weights[i] * t->log_det;
      e.per_class.push_back(*std::move(t));
    }
    if (!std::isfinite(e.j)) return std::nullopt;
    return e;
  }

  std::optional<double> objective(const Matrix& w) const {
    auto e = evaluate(w);
    if (!e) return std::nullopt;
    return e->j;
  }

  // 2·S·W·(WᵀSW)⁻¹ = 2·(L⁻ᵀL⁻¹(SW)ᵀ)ᵀ
  static Matrix gram_gradient(const ProjectedTerm& t) {
    Matrix x = backward_substitute_transposed(t.chol, forward_substitute(t.chol, t.sw.transpose()));
    return 2.0 * x.transpose();
  }

  Matrix gradient(const Evaluation& e) const {
    Matrix g = total * gram_gradient(e.between);
    for (std::size_t i = 0; i < per_class.size(); ++i)
      g.add_scaled(gram_gradient(e.per_class[i]), -weights[i]);
    return g;
  }

  std::optional<Matrix> gradient(const Matrix& w) const {
    auto e = evaluate(w);
    if (!e) return std::nullopt;
    return gradient(*e);
  }
};

}  // namespace detail

/// J(W) = M·log|Wᵀ Sb W| − Σ M_i·log|Wᵀ S_i W|, the logarithm of the product
/// of per-class determinant ratios, with every scatter ridged.
inline double hlda_objective(const Matrix& w, const ScatterSet& scatters, double ridge) {
  require(w.rows() == scatters.dim(), ErrorKind::DimensionMismatch, "W rows != scatter size");
  require(w.cols() >= 1 && w.cols() <= w.rows(), ErrorKind::RankExceeded,
          "W must have 1 <= d <= n");
  const detail::RidgedScatters rs(scatters, ridge);
  auto j = rs.objective(w);
  require(j.has_value(), ErrorKind::GramNotPositiveDefinite,
          "projected scatter Gram is not positive definite");
  return *j;
}

/// ∇J = 2M·Sb·W(WᵀSbW)⁻¹ − 2Σ M_i·S_i·W(WᵀS_iW)⁻¹.
inline Matrix hlda_gradient(const Matrix& w, const ScatterSet& scatters, double ridge) {
  require(w.rows() == scatters.dim(), ErrorKind::DimensionMismatch, "W rows != scatter size");
  require(w.cols() >= 1 && w.cols() <= w.rows(), ErrorKind::RankExceeded,
          "W must have 1 <= d <= n");
  const detail::RidgedScatters rs(scatters, ridge);
  auto g = rs.gradient(w);
  require(g.has_value(), ErrorKind::GramNotPositiveDefinite,
          "projected scatter Gram is not positive definite");
  return *std::move(g);
}

/// Determinant ratio |WᵀSbW| / |WᵀSwW| (unridged).
inline double fisher_ratio(const Matrix& w, const ScatterSet& scatters) {
  return std::exp(log_det_gram(w, scatters.between) - log_det_gram(w, scatters.within));
}

namespace detail {

inline bool is_zero_scatter(const Matrix& s) { return !(s.max_abs() > 0.0) || !(s.trace() > 0.0); }

inline Matrix top_generalized(const Matrix& a, const Matrix& b, std::size_t d) {
  EigResult eig = gen_sym_eig(a, b);
  return orthonormalize(eig.vectors.cols_range(0, d));
}

}  // namespace detail

/// 2DLDA: top-d generalized eigenvectors of (Sb + ridge·I, Sw + ridge·I),
/// returned with orthonormal columns.
inline Matrix fit_2dlda(const ScatterSet& scatters, std::size_t d, double ridge) {
  const std::size_t n = scatters.dim();
  if (!(d >= 1 && d <= n))
    fail(ErrorKind::RankExceeded,
         "d = " + std::to_string(d) + " outside [1, " + std::to_string(n) + "]");
  require(!detail::is_zero_scatter(scatters.between), ErrorKind::DegenerateScatter,
          "between-class scatter is zero");
  try {
    return detail::top_generalized(detail::ridged(scatters.between, ridge),
                                   detail::ridged(scatters.within, ridge), d);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotPositiveDefinite || e.kind() == ErrorKind::RankDeficient)
      fail(ErrorKind::DegenerateScatter,
           std::string("within-class scatter is singular: ") + e.what());
    throw;
  }
}

struct HldaOptions {
  int max_iters = 200;
  double step = 1.0;  // initial and maximum line-search step (Frobenius length)
  double tol = 1e-8;  // relative objective improvement that ends the ascent
  Ridge ridge = Ridge::automatic();
  // Additional deterministic starts: per-class generalized eigenvectors of
  // (Sb, S_i). Each is ascended for `screen_iters` steps and the best
  // candidate is refined to convergence.
  bool multi_start = true;
  int screen_iters = 10;

  bool operator==(const HldaOptions&) const = default;
};

struct HldaFit {
  Matrix projection;               // n×d, orthonormal columns
  double objective = 0.0;          // J at `projection`
  double initial_objective = 0.0;  // J at the 2DLDA initializer
  std::vector<double> trace;       // J after each accepted step of the refined start
  int iterations = 0;
  bool from_initializer = true;  // refined start was the 2DLDA solution
  double ridge = 0.0;
};

namespace detail {

struct AscentState {
  Matrix w;
  double j = 0.0;
  double step = 1.0;
  std::vector<double> trace;
  bool done = false;
  int iterations = 0;
  Matrix prev_w;  // previous iterate and its horizontal gradient, for the
  Matrix prev_g;  // Barzilai-Borwein trial step
};

// Steepest ascent with orthonormal retraction. Each line search starts at
// the Barzilai-Borwein length (capped by opts.step) and backtracks by 0.5
// under the Armijo condition with c1 = 1e-4.
inline void ascend(AscentState& s, const RidgedScatters& rs, const HldaOptions& opts, int budget) {
  constexpr double c1 = 1e-4;
  auto current = rs.evaluate(s.w);
  for (int it = 0; it < budget && !s.done && s.iterations < opts.max_iters; ++it) {
    if (!current) {
      s.done = true;
      break;
    }
    // Horizontal component; WᵀG vanishes in exact arithmetic.
    Matrix g = rs.gradient(*current);
    g.add_scaled(s.w * transpose_times(s.w, g), -1.0);
    const double gnorm = g.frobenius();
    if (!(gnorm > 1e-13 * (1.0 + std::abs(s.j)))) {
      s.done = true;
      break;
    }
    double alpha = s.step;
    if (s.prev_w.size() == s.w.size() && s.prev_w.size() > 0) {
      Matrix dw = s.w;
      dw.add_scaled(s.prev_w, -1.0);
      Matrix dg = g;
      dg.add_scaled(s.prev_g, -1.0);
      double sy = 0.0, ss = 0.0;
      for (std::size_t k = 0; k < dw.size(); ++k) {
        sy += dw.values()[k] * dg.values()[k];
        ss += dw.values()[k] * dw.values()[k];
      }
      if (sy < 0.0) alpha = std::min(opts.step, ss / -sy * gnorm);
    }
    bool accepted = false;
    while (alpha > 1e-14) {
      Matrix trial = s.w;
      trial.add_scaled(g, alpha / gnorm);
      std::optional<Matrix> q;
      try {
        q = orthonormalize(trial);
      } catch (const Error&) {
        q.reset();
      }
      if (q) {
        auto et = rs.evaluate(*q);
        // Gains below the rounding floor of J are not progress.
        if (et && et->j - s.j >= std::max(c1 * alpha * gnorm, 1e-12 * (1.0 + std::abs(s.j)))) {
          const double improvement = et->j - s.j;
          s.prev_w = std::move(s.w);
          s.prev_g = std::move(g);
          s.w = *std::move(q);
          s.j = et->j;
          current = std::move(et);
          s.trace.push_back(s.j);
          s.step = std::min(opts.step, 2.0 * alpha);
          accepted = true;
          if (improvement <= opts.tol * std::max(1.0, std::abs(s.j))) s.done = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    ++s.iterations;
    if (!accepted) s.done = true;
  }
}

}  // namespace detail

/// 2DHLDA: maximizes hlda_objective by gradient ascent started from the
/// 2DLDA solution. The returned objective is never below the initializer's.
inline HldaFit fit_2dhlda_traced(const ScatterSet& scatters, std::size_t d,
                                 const HldaOptions& opts = {}) {
  const std::size_t n = scatters.dim();
  if (!(d >= 1 && d <= n))
    fail(ErrorKind::RankExceeded,
         "d = " + std::to_string(d) + " outside [1, " + std::to_string(n) + "]");
  require(opts.max_iters >= 0 && opts.step > 0.0 && opts.tol >= 0.0, ErrorKind::InvalidConfig,
          "invalid 2DHLDA options");
  const double ridge = opts.ridge.resolve(scatters.within);

  Matrix w0;
  try {
    w0 = fit_2dlda(scatters, d, ridge);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegenerateScatter || e.kind() == ErrorKind::RankExceeded) throw;
    fail(ErrorKind::InitializationFailed, std::string("2DLDA initializer failed: ") + e.what());
  }

  const detail::RidgedScatters rs(scatters, ridge);
  auto j0 = rs.objective(w0);
  require(j0.has_value(), ErrorKind::NonFinite,
          "objective not finite at the 2DLDA initializer; increase the ridge");

  std::vector<detail::AscentState> starts;
  auto start = [&](Matrix w, double j) {
    detail::AscentState s;
    s.w = std::move(w);
    s.j = j;
    s.step = opts.step;
    return s;
  };
  starts.push_back(start(w0, *j0));
  if (opts.multi_start && scatters.classes() > 0) {
    for (std::size_t i = 0; i < scatters.classes(); ++i) {
      try {
        Matrix wi = detail::top_generalized(rs.between, rs.per_class[i], d);
        auto ji = rs.objective(wi);
        if (ji) starts.push_back(start(std::move(wi), *ji));
      } catch (const Error&) {
        // A singular class scatter simply contributes no start.
      }
    }
  }

  std::size_t best = 0;
  if (starts.size() > 1) {
    for (auto& s : starts) detail::ascend(s, rs, opts, opts.screen_iters);
    for (std::size_t i = 1; i < starts.size(); ++i)
      if (starts[i].j > starts[best].j + 1e-12 * (1.0 + std::abs(starts[best].j))) best = i;
  }
  detail::AscentState& chosen = starts[best];
  detail::ascend(chosen, rs, opts, opts.max_iters);

  HldaFit fit;
  fit.projection = std::move(chosen.w);
  fit.objective = chosen.j;
  fit.initial_objective = *j0;
  fit.trace = std::move(chosen.trace);
  fit.iterations = chosen.iterations;
  fit.from_initializer = best == 0;
  fit.ridge = ridge;
  require(std::isfinite(fit.objective), ErrorKind::NonFinite, "2DHLDA objective diverged");
  return fit;
}

inline Matrix fit_2dhlda(const ScatterSet& scatters, std::size_t d, const HldaOptions& opts = {}) {
  return fit_2dhlda_traced(scatters, d, opts).projection;
}

}  // namespace fer

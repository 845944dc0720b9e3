#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "fer/binary_io.hpp"
#include "fer/error.hpp"
#include "fer/matrix.hpp"

namespace fer {

struct SvmOptions {
  double c = 10.0;
  double gamma = 0.0;  // 0 selects 1 / input dimension
  double tol = 1e-3;   // maximal KKT violation at termination
  int max_iters = 1000000;

  void validate() const {
    require(std::isfinite(c) && c > 0.0, ErrorKind::InvalidConfig, "svm: C must be > 0");
    require(std::isfinite(gamma) && gamma >= 0.0, ErrorKind::InvalidConfig,
            "svm: gamma must be > 0 (or 0 for 1/dim)");
    require(std::isfinite(tol) && tol > 0.0, ErrorKind::InvalidConfig, "svm: tol must be > 0");
    require(max_iters > 0, ErrorKind::InvalidConfig, "svm: max_iters must be > 0");
  }

  bool operator==(const SvmOptions&) const = default;
};

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::exp(-gamma * s);
}

/// Binary machine for the class pair (positive, negative), positive being
/// the lower label. Only support vectors (α > 0) are kept.
struct BinarySvm {
  int positive = 0;
  int negative = 0;
  Matrix support;                  // rows are support vectors; empty if none
  std::vector<double> alpha;       // in [0, C]
  std::vector<int> y;              // ±1
  double bias = 0.0;               // f(x) = Σ α y K(s, x) + bias
  std::vector<double> dual_trace;  // dual objective after each update
  int iterations = 0;

  double decision(std::span<const double> x, double gamma) const {
    double f = bias;
    for (std::size_t i = 0; i < alpha.size(); ++i)
      f += alpha[i] * y[i] * rbf_kernel(support.row(i), x, gamma);
    return f;
  }

  bool operator==(const BinarySvm& o) const {
    return positive == o.positive && negative == o.negative && support == o.support &&
           alpha == o.alpha && y == o.y && bias == o.bias;
  }
};

/// One-vs-one RBF support vector machine.
struct SvmModel {
  std::size_t dim = 0;
  double gamma = 0.0;
  double c = 0.0;
  std::vector<int> classes;         // ascending
  std::vector<BinarySvm> machines;  // pairs (classes[a], classes[b]), a < b, lexicographic

  bool operator==(const SvmModel&) const = default;
};

namespace detail {

// Decisions within this band of zero count as ties and go to the lower class.
inline constexpr double kSvmTieBand = 1e-10;

struct SmoResult {
  std::vector<double> alpha;
  double rho = 0.0;
  std::vector<double> trace;
  int iterations = 0;
};

// Dual: min ½αᵀQα − eᵀα, 0 ≤ α ≤ C, yᵀα = 0, with second-order working-set
// selection.
inline SmoResult solve_smo(const Matrix& k, std::span<const int> y, const SvmOptions& opts) {
  const std::size_t n = y.size();
  constexpr double tau = 1e-12;
  const double c = opts.c;
  SmoResult res;
  std::vector<double>& a = res.alpha;
  a.assign(n, 0.0);
  std::vector<double> g(n, -1.0);
  auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * k(i, j); };
  auto in_up = [&](std::size_t t) { return (y[t] > 0 && a[t] < c) || (y[t] < 0 && a[t] > 0); };
  auto in_low = [&](std::size_t t) { return (y[t] > 0 && a[t] > 0) || (y[t] < 0 && a[t] < c); };
  auto dual = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += a[t] * (g[t] - 1.0);
    return -0.5 * f;
  };

  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t)
      if (in_up(t) && -y[t] * g[t] > gmax) {
        i = t;
        gmax = -y[t] * g[t];
      }
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      gmin = std::min(gmin, -y[t] * g[t]);
      if (i == n) continue;
      const double b = gmax + y[t] * g[t];
      if (b > 0.0) {
        double aa = k(i, i) + k(t, t) - 2.0 * k(i, t);
        if (aa <= 0.0) aa = tau;
        const double score = -(b * b) / aa;
        if (score < best) {
          best = score;
          j = t;
        }
      }
    }
    if (i == n || j == n || gmax - gmin < opts.tol) break;
    if (res.iterations >= opts.max_iters)
      fail(ErrorKind::SolverStalled,
           "SMO iteration cap reached with KKT violation " + std::to_string(gmax - gmin));
    ++res.iterations;

    const double ai_old = a[i], aj_old = a[j];
    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
      if (quad <= 0.0) quad = tau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) {
          a[j] = 0;
          a[i] = diff;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = c - diff;
        }
      } else if (a[j] > c) {
        a[j] = c;
        a[i] = c + diff;
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
      if (quad <= 0.0) quad = tau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > c) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = sum - c;
        }
      } else if (a[j] < 0) {
        a[j] = 0;
        a[i] = sum;
      }
      if (sum > c) {
        if (a[j] > c) {
          a[j] = c;
          a[i] = sum - c;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = sum;
      }
    }
    const double di = a[i] - ai_old, dj = a[j] - aj_old;
    if (di == 0.0 && dj == 0.0)
      fail(ErrorKind::SolverStalled,
           "SMO update made no progress with KKT violation " + std::to_string(gmax - gmin));
    for (std::size_t t = 0; t < n; ++t) g[t] += q(t, i) * di + q(t, j) * dj;
    res.trace.push_back(dual());
  }

  // ρ from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum = 0.0;
  int free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * g[t];
    if (a[t] >= c) {
      if (y[t] < 0)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else if (a[t] <= 0) {
      if (y[t] > 0)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else {
      ++free;
      sum += yg;
    }
  }
  if (free > 0)
    res.rho = sum / free;
  else if (std::isfinite(ub) && std::isfinite(lb))
    res.rho = 0.5 * (ub + lb);
  else
    res.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  return res;
}

}  // namespace detail

/// Trains one machine per class pair by SMO.
inline SvmModel train_svm_rbf(const Matrix& x, std::span<const int> labels,
                              const SvmOptions& opts = {}) {
  opts.validate();
  require(!x.empty(), ErrorKind::InvalidArgument, "svm: no training samples");
  require(x.rows() == labels.size(), ErrorKind::DimensionMismatch, "svm: label count mismatch");
  SvmModel model;
  model.dim = x.cols();
  model.gamma = opts.gamma > 0.0 ? opts.gamma : 1.0 / static_cast<double>(x.cols());
  model.c = opts.c;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, idx] : by_class) model.classes.push_back(label);

  for (std::size_t ca = 0; ca < model.classes.size(); ++ca)
    for (std::size_t cb = ca + 1; cb < model.classes.size(); ++cb) {
      std::vector<std::size_t> idx = by_class[model.classes[ca]];
      const auto& other = by_class[model.classes[cb]];
      idx.insert(idx.end(), other.begin(), other.end());
      std::sort(idx.begin(), idx.end());
      std::vector<int> y(idx.size());
      for (std::size_t t = 0; t < idx.size(); ++t)
        y[t] = labels[idx[t]] == model.classes[ca] ? 1 : -1;
      Matrix k(idx.size(), idx.size());
      for (std::size_t s = 0; s < idx.size(); ++s)
        for (std::size_t t = s; t < idx.size(); ++t)
          k(s, t) = k(t, s) = rbf_kernel(x.row(idx[s]), x.row(idx[t]), model.gamma);
      detail::SmoResult res;
      try {
        res = detail::solve_smo(k, y, opts);
      } catch (const Error& e) {
        fail(e.kind(), "classes " + std::to_string(model.classes[ca]) + "/" +
                           std::to_string(model.classes[cb]) + ": " + e.message());
      }
      BinarySvm m;
      m.positive = model.classes[ca];
      m.negative = model.classes[cb];
      m.bias = -res.rho;
      m.dual_trace = std::move(res.trace);
      m.iterations = res.iterations;
      std::vector<std::size_t> sv;
      for (std::size_t t = 0; t < idx.size(); ++t)
        if (res.alpha[t] > 0.0) sv.push_back(t);
      if (!sv.empty()) {
        m.support = Matrix(sv.size(), x.cols());
        for (std::size_t s = 0; s < sv.size(); ++s) {
          const auto src = x.row(idx[sv[s]]);
          std::copy(src.begin(), src.end(), m.support.row(s).begin());
          m.alpha.push_back(res.alpha[sv[s]]);
          m.y.push_back(y[sv[s]]);
        }
      }
      model.machines.push_back(std::move(m));
    }
  return model;
}

struct SvmVote {
  int label = 0;
  std::vector<double> decisions;  // per machine, model order
};

inline SvmVote svm_vote(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dim)
    fail(ErrorKind::DimensionMismatch, "svm input has " + std::to_string(x.size()) +
                                           " features, expected " + std::to_string(model.dim));
  require(!model.classes.empty(), ErrorKind::InvalidArgument, "svm model has no classes");
  SvmVote out;
  std::map<int, int> votes;
  for (int c : model.classes) votes[c] = 0;
  for (const auto& m : model.machines) {
    const double f = m.decision(x, model.gamma);
    out.decisions.push_back(f);
    ++votes[f < -detail::kSvmTieBand ? m.negative : m.positive];
  }
  int best = model.classes.front(), best_votes = -1;
  for (const auto& [label, v] : votes)
    if (v > best_votes) {
      best = label;
      best_votes = v;
    }
  out.label = best;
  return out;
}

inline int svm_predict(const SvmModel& model, std::span<const double> x) {
  return svm_vote(model, x).label;
}

inline void write_svm(BinaryWriter& out, const SvmModel& model) {
  out.magic("SVM1");
  out.u32(static_cast<std::uint32_t>(model.dim));
  out.f64(model.gamma);
  out.f64(model.c);
  out.u32(static_cast<std::uint32_t>(model.classes.size()));
  for (int c : model.classes) out.i32(c);
  out.u32(static_cast<std::uint32_t>(model.machines.size()));
  for (const auto& m : model.machines) {
    out.i32(m.positive);
    out.i32(m.negative);
    out.f64(m.bias);
    out.u32(static_cast<std::uint32_t>(m.alpha.size()));
    for (std::size_t i = 0; i < m.alpha.size(); ++i) {
      out.f64(m.alpha[i]);
      out.i32(m.y[i]);
    }
    if (!m.alpha.empty()) out.matrix_values(m.support);
  }
}

inline SvmModel read_svm(BinaryReader& in) {
  in.expect_magic("SVM1");
  SvmModel model;
  model.dim = in.u32();
  model.gamma = in.f64();
  model.c = in.f64();
  require(model.dim > 0 && model.gamma > 0.0 && model.c > 0.0, ErrorKind::BadFormat,
          "SVM1: bad header");
  const std::size_t nc = in.u32();
  for (std::size_t i = 0; i < nc; ++i) model.classes.push_back(in.i32());
  const std::size_t nm = in.u32();
  require(nm == nc * (nc - (nc > 0 ? 1 : 0)) / 2, ErrorKind::BadFormat, "SVM1: machine count");
  for (std::size_t k = 0; k < nm; ++k) {
    BinarySvm m;
    m.positive = in.i32();
    m.negative = in.i32();
    m.bias = in.f64();
    const std::size_t ns = in.u32();
    for (std::size_t i = 0; i < ns; ++i) {
      m.alpha.push_back(in.f64());
      m.y.push_back(in.i32());
    }
    if (ns > 0) m.support = in.matrix_values(ns, model.dim);
    model.machines.push_back(std::move(m));
  }
  return model;
}

}  // namespace fer

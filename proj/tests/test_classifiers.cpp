#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_util.hpp"

using fer::Matrix;
using Node = fer::NeuroFuzzyTree::Node;

namespace {

Matrix one_hot_targets(const std::vector<int>& labels, double scale = 1.0) {
  Matrix t(labels.size(), 6);
  for (std::size_t i = 0; i < labels.size(); ++i)
    t(i, static_cast<std::size_t>(labels[i] - 1)) = scale;
  return t;
}

// Six Gaussian blobs in `dim` dimensions.
void blobs(std::mt19937_64& rng, int per_class, std::size_t dim, double spread, Matrix& x,
           std::vector<int>& y, std::uint64_t center_seed = 99) {
  std::mt19937_64 crng(center_seed);
  const Matrix centers = testutil::random_matrix(crng, 6, dim, 2.0);
  std::normal_distribution<double> n(0.0, spread);
  x = Matrix(static_cast<std::size_t>(6 * per_class), dim);
  y.clear();
  for (int c = 0; c < 6; ++c)
    for (int j = 0; j < per_class; ++j) {
      const auto row = static_cast<std::size_t>(c * per_class + j);
      for (std::size_t d = 0; d < dim; ++d)
        x(row, d) = centers(static_cast<std::size_t>(c), d) + n(rng);
      y.push_back(c + 1);
    }
}

// Depth-2 tree over 2 features with explicit parameters.
fer::NeuroFuzzyTree hand_tree(double slope) {
  std::vector<Node> nodes(7);
  nodes[0] = {0, 0.1, slope, 1, 2, {}};
  nodes[1] = {1, -0.3, slope, 3, 4, {}};
  nodes[2] = {1, 0.4, slope, 5, 6, {}};
  const double leaf[4][2] = {{0.9, 0.1}, {0.2, 0.7}, {0.5, 0.5}, {0.0, 1.0}};
  for (int i = 0; i < 4; ++i) nodes[3 + i].values = {leaf[i][0], leaf[i][1]};
  return fer::NeuroFuzzyTree({0.0, 0.0}, {1.0, 1.0}, 2, nodes);
}

// Projected-gradient solver for the box- and equality-constrained dual, with
// the equality handled by an augmented Lagrangian.
std::vector<double> reference_dual(const Matrix& k, const std::vector<int>& y, double c) {
  const std::size_t n = y.size();
  std::vector<double> a(n, 0.0), g(n);
  double lambda = 0.0;
  const double rho = 10.0;
  double lmax = 0.0;
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

}  // namespace

TEST(NfTree, DepthZeroIsTargetMean) {
  std::mt19937_64 rng(1);
  const Matrix x = testutil::random_matrix(rng, 30, 3);
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) y.push_back(i % 6 + 1);
  const Matrix t = one_hot_targets(y, 0.8);
  fer::NfTreeOptions opts;
  opts.depth = 0;
  const auto tree = fer::train_nf_tree(x, t, opts);
  ASSERT_EQ(tree.nodes().size(), 1u);
  for (const double probe : {-100.0, 0.0, 3.0}) {
    const auto out = tree.predict(std::vector<double>(3, probe));
    for (double v : out) EXPECT_NEAR(v, 0.8 / 6.0, 1e-9);
  }
}

TEST(NfTree, StepFixtureCenter) {
  Matrix x(80, 1);
  std::vector<int> y;
  for (int i = 0; i < 80; ++i) {
    x(static_cast<std::size_t>(i), 0) = -2.0 + 4.0 * (i + 0.5) / 80.0 + 0.3;
    y.push_back(x(static_cast<std::size_t>(i), 0) < 0.0 ? 1 : 2);
  }
  fer::NfTreeOptions opts;
  opts.depth = 1;
  opts.epochs = 300;
  const auto tree = fer::train_nf_tree(x, one_hot_targets(y), opts);
  ASSERT_EQ(tree.nodes().size(), 3u);
  EXPECT_LT(std::abs(tree.raw_center(0)), 0.1);
}

TEST(NfTree, GradientMatchesFiniteDifferencesEveryEpoch) {
  std::mt19937_64 rng(2);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 6, 4, 1.0, x, y);
  const Matrix t = one_hot_targets(y, 0.9);
  Matrix z(x.rows(), x.cols());
  fer::NfTreeOptions opts;
  opts.epochs = 15;
  std::uniform_int_distribution<std::size_t> pick(0, 1000000);
  int checked = 0;
  std::vector<double> losses;
  fer::train_nf_tree(x, t, opts, [&](int, const fer::NeuroFuzzyTree& tree, double loss) {
    losses.push_back(loss);
    for (std::size_t s = 0; s < x.rows(); ++s) {
      const auto zs = tree.standardize(x.row(s));
      std::copy(zs.begin(), zs.end(), z.row(s).begin());
    }
    std::vector<double> grad;
    tree.loss_and_gradient(z, t, &grad);
    const auto p = tree.parameters();
    fer::NeuroFuzzyTree probe = tree;
    for (int rep = 0; rep < 3; ++rep) {
      const std::size_t i = pick(rng) % p.size();
      const double h = 1e-6 * std::max(1.0, std::abs(p[i]));
      auto pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      probe.set_parameters(pp);
      const double lp = probe.loss_and_gradient(z, t, nullptr);
      probe.set_parameters(pm);
      const double lm = probe.loss_and_gradient(z, t, nullptr);
      const double fd = (lp - lm) / (2 * h);
      EXPECT_LE(std::abs(fd - grad[i]), 1e-4 * std::max(std::abs(fd), 1e-6)) << "param " << i;
      ++checked;
    }
  });
  EXPECT_GT(checked, 0);
  for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LE(losses[i], losses[i - 1]);
}

TEST(NfTree, CrispLimitIsTreeLookup) {
  const auto soft = hand_tree(1e4);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{u(rng), u(rng)};
    if (std::abs(x[0] - 0.1) < 0.01 || std::abs(x[1] + 0.3) < 0.01 || std::abs(x[1] - 0.4) < 0.01)
      continue;
    int node = 0;
    while (!soft.nodes()[static_cast<std::size_t>(node)].is_leaf()) {
      const auto& n = soft.nodes()[static_cast<std::size_t>(node)];
      node = x[static_cast<std::size_t>(n.feature)] > n.center ? n.right : n.left;
    }
    const auto out = soft.predict(x);
    const auto& leaf = soft.nodes()[static_cast<std::size_t>(node)].values;
    EXPECT_NEAR(out[0], leaf[0], 1e-12);
    EXPECT_NEAR(out[1], leaf[1], 1e-12);
  }
}

TEST(NfTree, FiringIsPartitionOfUnityAndOutputsBounded) {
  const auto tree = hand_tree(1.7);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> z{n(rng), n(rng)};
    const auto reach = tree.firing(z);
    double sum = 0.0;
    for (std::size_t k = 0; k < reach.size(); ++k)
      if (tree.nodes()[k].is_leaf()) sum += reach[k];
    EXPECT_NEAR(sum, 1.0, 1e-10);
    for (double v : tree.predict(z)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(NfTree, ErrorsAndSingleLeafPrediction) {
  const Matrix x(5, 2, 1.0);
  const Matrix t(5, 6, 0.5);
  try {
    fer::train_nf_tree(x, t);
    FAIL();
  } catch (const fer::Error& e) {
    EXPECT_EQ(e.kind(), fer::ErrorKind::DegenerateTargets);
  }
  Matrix bad = t;
  bad(0, 0) = 1.5;
  EXPECT_THROW(fer::train_nf_tree(x, bad), fer::Error);
  const auto tree = hand_tree(1.0);
  try {
    tree.predict(std::vector<double>{1.0});
    FAIL();
  } catch (const fer::Error& e) {
    EXPECT_EQ(e.kind(), fer::ErrorKind::DimensionMismatch);
  }
}

TEST(NfTree, RoundTrip) {
  std::mt19937_64 rng(5);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 5, 3, 1.0, x, y);
  const auto tree = fer::train_nf_tree(x, one_hot_targets(y));
  fer::BinaryWriter w;
  fer::write_tree(w, tree);
  fer::BinaryReader r(w.bytes());
  const auto back = fer::read_tree(r);
  r.expect_end();
  EXPECT_EQ(back, tree);
}

TEST(Svm, SeparableAndXor) {
  Matrix x{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<int> y{1, 1, 2, 2};
  const auto m = fer::train_svm_rbf(x, y, {10.0, 1.0});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(fer::svm_predict(m, x.row(i)), y[i]);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 0.3);
  Matrix s(40, 2);
  std::vector<int> ys;
  for (std::size_t i = 0; i < 40; ++i) {
    const double side = i < 20 ? -2.0 : 2.0;
    s(i, 0) = side + n(rng);
    s(i, 1) = n(rng);
    ys.push_back(i < 20 ? 1 : 2);
  }
  const auto ms = fer::train_svm_rbf(s, ys);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(fer::svm_predict(ms, s.row(i)), ys[i]);
}

TEST(Svm, KktAndMonotoneDual) {
  std::mt19937_64 rng(7);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 8, 3, 1.5, x, y);
  fer::SvmOptions opts;
  opts.c = 2.0;
  const auto m = fer::train_svm_rbf(x, y, opts);
  EXPECT_EQ(m.machines.size(), 15u);
  for (const auto& b : m.machines) {
    double sum = 0.0;
    for (std::size_t i = 0; i < b.alpha.size(); ++i) {
      EXPECT_GE(b.alpha[i], 0.0);
      EXPECT_LE(b.alpha[i], opts.c);
      sum += b.alpha[i] * b.y[i];
    }
    EXPECT_LT(std::abs(sum), 1e-8);
    for (std::size_t i = 1; i < b.dual_trace.size(); ++i)
      EXPECT_GE(b.dual_trace[i], b.dual_trace[i - 1] - 1e-12);
  }
}

TEST(Svm, AgreesWithReferenceQp) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(20, 2);
  std::vector<int> labels, y;
  for (std::size_t i = 0; i < 20; ++i) {
    const int cls = i % 2 ? 2 : 1;
    x(i, 0) = n(rng) + (cls == 1 ? -0.7 : 0.7);
    x(i, 1) = n(rng);
    labels.push_back(cls);
    y.push_back(cls == 1 ? 1 : -1);
  }
  const double c = 1.0, gamma = 0.5;
  fer::SvmOptions opts{c, gamma, 1e-9};
  const auto model = fer::train_svm_rbf(x, labels, opts);

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
  ASSERT_GT(free, 0);
  const double b = bsum / free;
  auto reference = [&](double px, double py) {
    double f = b;
    for (std::size_t j = 0; j < 20; ++j)
      f += a[j] * y[j] * std::exp(-gamma * (std::pow(px - x(j, 0), 2) + std::pow(py - x(j, 1), 2)));
    return f;
  };
  for (std::size_t i = 0; i < 20; ++i) {
    const double ref = reference(x(i, 0), x(i, 1));
    const int ref_label = ref >= 0 ? 1 : 2;
    EXPECT_EQ(fer::svm_predict(model, x.row(i)), ref_label);
    EXPECT_NEAR(fer::svm_vote(model, x.row(i)).decisions[0], ref, 1e-4);
  }
}

TEST(Svm, MidpointTieGoesToLowerClass) {
  Matrix x{{-1, 0}, {-2, 1}, {-1.5, -1}, {1, 0}, {2, 1}, {1.5, -1}};
  const std::vector<int> y{3, 3, 3, 5, 5, 5};
  const auto m = fer::train_svm_rbf(x, y, {10.0, 0.5, 1e-12});
  const std::vector<double> mid{0.0, 0.0};
  EXPECT_LT(std::abs(fer::svm_vote(m, mid).decisions[0]), 1e-8);
  EXPECT_EQ(fer::svm_predict(m, mid), 3);
  EXPECT_EQ(fer::svm_predict(m, std::vector<double>{-2, 0}), 3);
  EXPECT_EQ(fer::svm_predict(m, std::vector<double>{2, 0}), 5);
}

TEST(Svm, ReorderingKeepsPredictions) {
  std::mt19937_64 rng(9);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 6, 2, 1.0, x, y);
  std::vector<std::size_t> perm(y.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix xp(x.rows(), x.cols());
  std::vector<int> yp;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    std::copy(x.row(perm[i]).begin(), x.row(perm[i]).end(), xp.row(i).begin());
    yp.push_back(y[perm[i]]);
  }
  const fer::SvmOptions opts{10.0, 0.5, 1e-9};
  const auto a = fer::train_svm_rbf(x, y, opts), b = fer::train_svm_rbf(xp, yp, opts);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 300; ++i) {
    const std::vector<double> p{n(rng), n(rng)};
    const auto va = fer::svm_vote(a, p), vb = fer::svm_vote(b, p);
    bool clear = true;
    for (std::size_t k = 0; k < va.decisions.size(); ++k) {
      EXPECT_NEAR(va.decisions[k], vb.decisions[k], 1e-5);
      clear = clear && std::abs(va.decisions[k]) > 1e-4;
    }
    if (clear) {
      EXPECT_EQ(va.label, vb.label);
    }
  }
}

TEST(Svm, DimensionMismatchAndRoundTrip) {
  std::mt19937_64 rng(10);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 4, 3, 1.0, x, y);
  const auto m = fer::train_svm_rbf(x, y);
  try {
    fer::svm_predict(m, std::vector<double>{1.0, 2.0});
    FAIL();
  } catch (const fer::Error& e) {
    EXPECT_EQ(e.kind(), fer::ErrorKind::DimensionMismatch);
  }
  fer::BinaryWriter w;
  fer::write_svm(w, m);
  fer::BinaryReader r(w.bytes());
  const auto back = fer::read_svm(r);
  EXPECT_EQ(back, m);
  for (std::size_t i = 0; i < x.rows(); ++i)
    EXPECT_EQ(fer::svm_vote(back, x.row(i)).decisions, fer::svm_vote(m, x.row(i)).decisions);
}

TEST(Fusion, IntensityTargets) {
  const Matrix t = fer::intensity_targets(std::vector<int>{2, 6}, std::vector<double>{0.5, 1.0});
  EXPECT_EQ(t, (Matrix{{0, 0.5, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 1.0}}));
  EXPECT_THROW(fer::intensity_targets(std::vector<int>{7}, std::vector<double>{1.0}), fer::Error);
}

TEST(Fusion, OracleFeaturesAreExact) {
  std::vector<int> y;
  for (int i = 0; i < 36; ++i) y.push_back(i % 6 + 1);
  const Matrix oracle = one_hot_targets(y);
  const std::vector<double> intensity(y.size(), 1.0);
  // One-hot inputs split one class at a time, so isolating six takes depth 5.
  fer::FusionOptions opts;
  opts.tree.depth = 5;
  const auto model = fer::train_fusion(oracle, oracle, y, intensity, opts);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto p = fer::predict_fusion(model, oracle.row(i), oracle.row(i));
    EXPECT_EQ(p.label, y[i]);
    ASSERT_EQ(p.intensities.size(), 12u);
    for (double v : p.intensities) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Fusion, ConstantTreeIsIgnored) {
  std::mt19937_64 rng(11);
  Matrix geo;
  std::vector<int> y;
  blobs(rng, 8, 4, 1.5, geo, y);
  const Matrix app(geo.rows(), 3, 0.25);
  const std::vector<double> intensity(y.size(), 1.0);
  const fer::FusionOptions opts;
  const auto model = fer::train_fusion(geo, app, y, intensity, opts);
  EXPECT_EQ(model.tree_app.leaf_count(), 1u);
  // Same geometric tree alone, same kernel width.
  const auto tree = fer::train_nf_tree(geo, fer::intensity_targets(y, intensity), opts.tree);
  Matrix single(geo.rows(), 6);
  for (std::size_t i = 0; i < geo.rows(); ++i) {
    const auto v = tree.predict(geo.row(i));
    std::copy(v.begin(), v.end(), single.row(i).begin());
  }
  const auto svm = fer::train_svm_rbf(single, y, opts.svm);
  Matrix pgeo;
  std::vector<int> py;
  blobs(rng, 8, 4, 1.5, pgeo, py);
  int fused_ok = 0, single_ok = 0;
  for (std::size_t i = 0; i < pgeo.rows(); ++i) {
    fused_ok += fer::predict_fusion(model, pgeo.row(i), app.row(0)).label == py[i];
    single_ok += fer::svm_predict(svm, tree.predict(pgeo.row(i))) == py[i];
  }
  EXPECT_LE(std::abs(fused_ok - single_ok), 2);
}

TEST(Fusion, BeatsSingleTreeCentroids) {
  std::mt19937_64 rng(12);
  Matrix geo, app, tgeo, tapp;
  std::vector<int> y, ty, dummy;
  blobs(rng, 15, 3, 1.6, geo, y, 99);
  blobs(rng, 15, 3, 1.6, app, dummy, 77);
  blobs(rng, 15, 3, 1.6, tgeo, ty, 99);
  blobs(rng, 15, 3, 1.6, tapp, dummy, 77);
  const std::vector<double> intensity(y.size(), 1.0);
  const auto model = fer::train_fusion(geo, app, y, intensity);
  auto centroid_accuracy = [&](const fer::NeuroFuzzyTree& tree, const Matrix& train,
                               const Matrix& test) {
    Matrix mu(6, 6);
    for (std::size_t i = 0; i < train.rows(); ++i) {
      const auto v = tree.predict(train.row(i));
      for (std::size_t k = 0; k < 6; ++k) mu(static_cast<std::size_t>(y[i] - 1), k) += v[k] / 15.0;
    }
    int ok = 0;
    for (std::size_t i = 0; i < test.rows(); ++i) {
      const auto v = tree.predict(test.row(i));
      int best = 0;
      double bd = 1e300;
      for (std::size_t c = 0; c < 6; ++c) {
        double d = 0;
        for (std::size_t k = 0; k < 6; ++k) d += std::pow(v[k] - mu(c, k), 2);
        if (d < bd) {
          bd = d;
          best = static_cast<int>(c) + 1;
        }
      }
      ok += best == ty[i];
    }
    return ok;
  };
  int fused = 0;
  for (std::size_t i = 0; i < tgeo.rows(); ++i)
    fused += fer::predict_fusion(model, tgeo.row(i), tapp.row(i)).label == ty[i];
  EXPECT_GE(fused, std::max(centroid_accuracy(model.tree_geo, geo, tgeo),
                            centroid_accuracy(model.tree_app, app, tapp)));
}

TEST(Fusion, DeterministicBytesAndRoundTrip) {
  std::mt19937_64 rng(13);
  Matrix geo, app;
  std::vector<int> y;
  blobs(rng, 5, 3, 1.0, geo, y);
  app = testutil::random_matrix(rng, geo.rows(), 4);
  const std::vector<double> intensity(y.size(), 0.75);
  auto bytes = [](const fer::FusionModel& m) {
    fer::BinaryWriter w;
    fer::write_fusion(w, m);
    return w.bytes();
  };
  const auto a = fer::train_fusion(geo, app, y, intensity);
  const auto b = fer::train_fusion(geo, app, y, intensity);
  EXPECT_EQ(bytes(a), bytes(b));
  fer::BinaryReader r(bytes(a));
  EXPECT_EQ(fer::read_fusion(r), a);
  auto broken = bytes(a);
  broken[5] = 9;
  fer::BinaryReader rb(broken);
  try {
    fer::read_fusion(rb);
    FAIL();
  } catch (const fer::Error& e) {
    EXPECT_EQ(e.kind(), fer::ErrorKind::BadFormat);
  }
}

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "fer/binary_io.hpp"
#include "fer/error.hpp"
#include "fer/matrix.hpp"

namespace fer {

struct NfTreeOptions {
  int depth = 3;
  int epochs = 100;
  double lr = 0.5;         // initial step of the backtracking descent
  double min_mass = 1e-3;  // nodes with less target mass (fraction) become leaves
  double min_slope = 1e-3;

  void validate() const {
    require(depth >= 0 && depth <= 16, ErrorKind::InvalidConfig, "tree: depth must be in [0, 16]");
    require(epochs >= 0, ErrorKind::InvalidConfig, "tree: epochs must be >= 0");
    require(lr > 0.0 && std::isfinite(lr), ErrorKind::InvalidConfig, "tree: lr must be > 0");
    require(min_mass >= 0.0 && min_slope > 0.0, ErrorKind::InvalidConfig,
            "tree: min_mass must be >= 0 and min_slope > 0");
  }

  bool operator==(const NfTreeOptions&) const = default;
};

/// Binary tree with sigmoid memberships. An internal node sends weight
/// μ = σ(slope·(z − center)) to its right child and 1 − μ to its left, with
/// z the node's feature after standardization. The output is the
/// firing-strength-weighted mix of leaf vectors.
class NeuroFuzzyTree {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double center = 0.0;
    double slope = 1.0;
    int left = -1;
    int right = -1;
    std::vector<double> values;  // leaves only

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  NeuroFuzzyTree() = default;
  NeuroFuzzyTree(std::vector<double> mean, std::vector<double> scale, std::size_t outputs,
                 std::vector<Node> nodes)
      : mean_(std::move(mean)),
        scale_(std::move(scale)),
        outputs_(outputs),
        nodes_(std::move(nodes)) {
    validate();
  }

  std::size_t inputs() const noexcept { return mean_.size(); }
  std::size_t outputs() const noexcept { return outputs_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& feature_mean() const noexcept { return mean_; }
  const std::vector<double>& feature_scale() const noexcept { return scale_; }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
  }

  /// Membership center of node `i` in raw feature units.
  double raw_center(std::size_t i) const {
    const Node& n = nodes_.at(i);
    require(!n.is_leaf(), ErrorKind::InvalidArgument, "leaves have no membership");
    const auto f = static_cast<std::size_t>(n.feature);
    return mean_[f] + scale_[f] * n.center;
  }

  std::vector<double> standardize(std::span<const double> x) const {
    if (x.size() != inputs())
      fail(ErrorKind::DimensionMismatch, "tree input has " + std::to_string(x.size()) +
                                             " features, expected " + std::to_string(inputs()));
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean_[i]) / scale_[i];
    return z;
  }

  static double sigmoid(double t) noexcept {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  }

  double membership(std::size_t node, std::span<const double> z) const {
    const Node& n = nodes_[node];
    return sigmoid(n.slope * (z[static_cast<std::size_t>(n.feature)] - n.center));
  }

  /// Firing strength of every node (1 at the root), for standardized input.
  std::vector<double> firing(std::span<const double> z) const {
    std::vector<double> reach(nodes_.size(), 0.0);
    if (nodes_.empty()) return reach;
    reach[0] = 1.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      if (n.is_leaf()) continue;
      const double mu = membership(i, z);
      reach[static_cast<std::size_t>(n.left)] = reach[i] * (1.0 - mu);
      reach[static_cast<std::size_t>(n.right)] = reach[i] * mu;
    }
    return reach;
  }

  std::vector<double> predict_standardized(std::span<const double> z) const {
    const auto reach = firing(z);
    std::vector<double> out(outputs_, 0.0);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].is_leaf())
        for (std::size_t c = 0; c < outputs_; ++c) out[c] += reach[i] * nodes_[i].values[c];
    for (double& v : out) v = std::clamp(v, 0.0, 1.0);
    return out;
  }

  std::vector<double> predict(std::span<const double> x) const {
    return predict_standardized(standardize(x));
  }

  // Flat parameters: per node in index order, (center, slope) for internal
  // nodes and the output vector for leaves.
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Node& node : nodes_) n += node.is_leaf() ? outputs_ : 2;
    return n;
  }

  std::vector<double> parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (const Node& n : nodes_) {
      if (n.is_leaf()) {
        p.insert(p.end(), n.values.begin(), n.values.end());
      } else {
        p.push_back(n.center);
        p.push_back(n.slope);
      }
    }
    return p;
  }

  void set_parameters(std::span<const double> p) {
    require(p.size() == parameter_count(), ErrorKind::DimensionMismatch,
            "tree parameter count mismatch");
    std::size_t k = 0;
    for (Node& n : nodes_) {
      if (n.is_leaf()) {
        for (double& v : n.values) v = p[k++];
      } else {
        n.center = p[k++];
        n.slope = p[k++];
      }
    }
  }

  /// Mean squared error over samples and outputs, and its gradient with
  /// respect to parameters(). `z` holds standardized rows.
  double loss_and_gradient(const Matrix& z, const Matrix& targets,
                           std::vector<double>* grad) const {
    const std::size_t n = z.rows();
    const double norm = 1.0 / static_cast<double>(n * outputs_);
    std::vector<std::size_t> offset(nodes_.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      offset[i] = total;
      total += nodes_[i].is_leaf() ? outputs_ : 2;
    }
    if (grad) grad->assign(total, 0.0);
    std::vector<double> mu(nodes_.size(), 0.0);
    std::vector<std::vector<double>> sub(nodes_.size(), std::vector<double>(outputs_));
    std::vector<double> reach(nodes_.size());
    std::vector<double> resid(outputs_);
    double loss = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const auto zs = z.row(s);
      for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!nodes_[i].is_leaf()) mu[i] = membership(i, zs);
      // Subtree outputs, children carry larger indices than parents.
      for (std::size_t i = nodes_.size(); i-- > 0;) {
        const Node& nd = nodes_[i];
        if (nd.is_leaf()) {
          sub[i] = nd.values;
        } else {
          const auto& l = sub[static_cast<std::size_t>(nd.left)];
          const auto& r = sub[static_cast<std::size_t>(nd.right)];
          for (std::size_t c = 0; c < outputs_; ++c)
            sub[i][c] = (1.0 - mu[i]) * l[c] + mu[i] * r[c];
        }
      }
      for (std::size_t c = 0; c < outputs_; ++c) {
        resid[c] = sub[0][c] - targets(s, c);
        loss += resid[c] * resid[c] * norm;
      }
      if (!grad) continue;
      reach[0] = 1.0;
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& nd = nodes_[i];
        if (nd.is_leaf()) {
          for (std::size_t c = 0; c < outputs_; ++c)
            (*grad)[offset[i] + c] += 2.0 * norm * resid[c] * reach[i];
          continue;
        }
        reach[static_cast<std::size_t>(nd.left)] = reach[i] * (1.0 - mu[i]);
        reach[static_cast<std::size_t>(nd.right)] = reach[i] * mu[i];
        const auto& l = sub[static_cast<std::size_t>(nd.left)];
        const auto& r = sub[static_cast<std::size_t>(nd.right)];
        double dl_dmu = 0.0;
        for (std::size_t c = 0; c < outputs_; ++c) dl_dmu += 2.0 * norm * resid[c] * (r[c] - l[c]);
        dl_dmu *= reach[i];
        const double dmu = mu[i] * (1.0 - mu[i]);
        const double u = zs[static_cast<std::size_t>(nd.feature)] - nd.center;
        (*grad)[offset[i]] += dl_dmu * (-nd.slope * dmu);
        (*grad)[offset[i] + 1] += dl_dmu * (u * dmu);
      }
    }
    return loss;
  }

  bool operator==(const NeuroFuzzyTree&) const = default;

 private:
  void validate() const {
    require(scale_.size() == mean_.size(), ErrorKind::DimensionMismatch, "tree scale size");
    require(!nodes_.empty() && outputs_ > 0, ErrorKind::InvalidArgument, "tree has no nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      if (n.is_leaf()) {
        require(n.values.size() == outputs_, ErrorKind::DimensionMismatch, "leaf output size");
        continue;
      }
      require(static_cast<std::size_t>(n.feature) < inputs(), ErrorKind::InvalidArgument,
              "node feature out of range");
      require(n.left > static_cast<int>(i) && n.right > static_cast<int>(i) &&
                  static_cast<std::size_t>(n.left) < nodes_.size() &&
                  static_cast<std::size_t>(n.right) < nodes_.size(),
              ErrorKind::InvalidArgument, "node children must follow their parent");
      require(std::isfinite(n.slope) && n.slope > 0.0, ErrorKind::InvalidArgument,
              "membership slopes must be positive");
    }
  }

  std::vector<double> mean_;
  std::vector<double> scale_;
  std::size_t outputs_ = 0;
  std::vector<Node> nodes_;
};

namespace detail {

inline double target_entropy(std::span<const double> mass) {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double m : mass)
    if (m > 0.0) {
      const double q = m / total;
      h -= q * std::log(q);
    }
  return h;
}

inline double weighted_median(std::vector<std::pair<double, double>> vw) {
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (const auto& [v, w] : vw) total += w;
  double acc = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return vw.empty() ? 0.0 : vw.back().first;
}

struct GrowState {
  const Matrix& z;
  const Matrix& targets;
  const NfTreeOptions& opts;
  double root_mass;
  std::vector<NeuroFuzzyTree::Node> nodes;
};

inline std::vector<double> class_mass(const GrowState& g, std::span<const double> w) {
  std::vector<double> mass(g.targets.cols(), 0.0);
  for (std::size_t s = 0; s < w.size(); ++s)
    for (std::size_t c = 0; c < mass.size(); ++c) mass[c] += w[s] * g.targets(s, c);
  return mass;
}

inline std::size_t grow(GrowState& g, const std::vector<double>& w, int depth) {
  const std::size_t idx = g.nodes.size();
  g.nodes.emplace_back();
  const auto mass = class_mass(g, w);
  const double node_mass = std::accumulate(mass.begin(), mass.end(), 0.0);
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);

  auto make_leaf = [&] {
    NeuroFuzzyTree::Node leaf;
    leaf.values.assign(g.targets.cols(), 0.0);
    if (wsum > 0.0)
      for (std::size_t c = 0; c < leaf.values.size(); ++c)
        leaf.values[c] = std::clamp(
            [&] {
              double acc = 0.0;
              for (std::size_t s = 0; s < w.size(); ++s) acc += w[s] * g.targets(s, c);
              return acc / wsum;
            }(),
            0.0, 1.0);
    g.nodes[idx] = std::move(leaf);
    return idx;
  };

  if (depth >= g.opts.depth || !(node_mass > g.opts.min_mass * g.root_mass)) return make_leaf();
  const double parent_h = target_entropy(mass);
  if (!(parent_h > 0.0)) return make_leaf();

  double best_gain = 1e-12;
  int best_feature = -1;
  double best_center = 0.0;
  for (std::size_t f = 0; f < g.z.cols(); ++f) {
    std::vector<std::pair<double, double>> vw;
    for (std::size_t s = 0; s < w.size(); ++s)
      if (w[s] > 0.0) vw.emplace_back(g.z(s, f), w[s]);
    const double center = weighted_median(vw);
    std::vector<double> wl(w.size()), wr(w.size());
    for (std::size_t s = 0; s < w.size(); ++s) {
      const double mu = NeuroFuzzyTree::sigmoid(g.z(s, f) - center);
      wl[s] = w[s] * (1.0 - mu);
      wr[s] = w[s] * mu;
    }
    const auto ml = class_mass(g, wl), mr = class_mass(g, wr);
    const double tl = std::accumulate(ml.begin(), ml.end(), 0.0);
    const double tr = std::accumulate(mr.begin(), mr.end(), 0.0);
    const double gain = parent_h - (tl * target_entropy(ml) + tr * target_entropy(mr)) / node_mass;
    if (gain > best_gain) {
      best_gain = gain;
      best_feature = static_cast<int>(f);
      best_center = center;
    }
  }
  if (best_feature < 0) return make_leaf();

  std::vector<double> wl(w.size()), wr(w.size());
  for (std::size_t s = 0; s < w.size(); ++s) {
    const double mu =
        NeuroFuzzyTree::sigmoid(g.z(s, static_cast<std::size_t>(best_feature)) - best_center);
    wl[s] = w[s] * (1.0 - mu);
    wr[s] = w[s] * mu;
  }
  const std::size_t left = grow(g, wl, depth + 1);
  const std::size_t right = grow(g, wr, depth + 1);
  NeuroFuzzyTree::Node& node = g.nodes[idx];
  node.feature = best_feature;
  node.center = best_center;
  node.slope = 1.0;
  node.left = static_cast<int>(left);
  node.right = static_cast<int>(right);
  return idx;
}

}  // namespace detail

/// Called after every epoch with the epoch number (from 1), the current tree
/// and its training loss.
using NfEpochCallback = std::function<void(int, const NeuroFuzzyTree&, double)>;

/// Grows the tree greedily by fuzzy information gain over the target mass,
/// then tunes memberships and leaves by backtracking gradient descent on the
/// mean squared error. The loss never increases from one epoch to the next.
inline NeuroFuzzyTree train_nf_tree(const Matrix& features, const Matrix& targets,
                                    const NfTreeOptions& opts = {},
                                    const NfEpochCallback& on_epoch = {}) {
  opts.validate();
  require(!features.empty() && features.rows() == targets.rows(), ErrorKind::DimensionMismatch,
          "tree features and targets must have the same row count");
  for (double t : targets.values())
    require(t >= 0.0 && t <= 1.0, ErrorKind::InvalidArgument, "tree targets must lie in [0, 1]");
  bool varied = false;
  for (std::size_t s = 1; s < targets.rows() && !varied; ++s)
    for (std::size_t c = 0; c < targets.cols(); ++c)
      if (targets(s, c) != targets(0, c)) {
        varied = true;
        break;
      }
  require(varied, ErrorKind::DegenerateTargets, "all tree targets are identical");

  const std::size_t n = features.rows(), d = features.cols();
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t f = 0; f < d; ++f) mean[f] += features(s, f);
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t f = 0; f < d; ++f) {
      const double dv = features(s, f) - mean[f];
      scale[f] += dv * dv;
    }
  for (double& v : scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 0.0)) v = 1.0;
  }
  Matrix z(n, d);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t f = 0; f < d; ++f) z(s, f) = (features(s, f) - mean[f]) / scale[f];

  double root_mass = 0.0;
  for (double t : targets.values()) root_mass += t;
  detail::GrowState g{z, targets, opts, root_mass, {}};
  detail::grow(g, std::vector<double>(n, 1.0), 0);
  NeuroFuzzyTree tree(std::move(mean), std::move(scale), targets.cols(), std::move(g.nodes));

  auto project = [&](std::vector<double>& p) {
    std::size_t k = 0;
    for (const auto& node : tree.nodes()) {
      if (node.is_leaf()) {
        for (std::size_t c = 0; c < tree.outputs(); ++c, ++k) p[k] = std::clamp(p[k], 0.0, 1.0);
      } else {
        p[k + 1] = std::max(p[k + 1], opts.min_slope);
        k += 2;
      }
    }
  };

  std::vector<double> grad;
  double loss = tree.loss_and_gradient(z, targets, &grad);
  double step = opts.lr;
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    const std::vector<double> p0 = tree.parameters();
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      std::vector<double> p = p0;
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= step * grad[i];
      project(p);
      tree.set_parameters(p);
      const double trial = tree.loss_and_gradient(z, targets, nullptr);
      if (std::isfinite(trial) && trial <= loss) {
        accepted = true;
        loss = trial;
        step = std::min(step * 1.5, 1e3 * opts.lr);
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) tree.set_parameters(p0);
    loss = tree.loss_and_gradient(z, targets, &grad);
    if (on_epoch) on_epoch(epoch, tree, loss);
    if (!accepted) break;
  }
  return tree;
}

inline void write_tree(BinaryWriter& out, const NeuroFuzzyTree& tree) {
  out.magic("NFT1");
  out.u32(static_cast<std::uint32_t>(tree.inputs()));
  out.u32(static_cast<std::uint32_t>(tree.outputs()));
  out.u32(static_cast<std::uint32_t>(tree.nodes().size()));
  out.f64s(tree.feature_mean());
  out.f64s(tree.feature_scale());
  for (const auto& n : tree.nodes()) {
    out.i32(n.feature);
    if (n.is_leaf()) {
      out.f64s(n.values);
    } else {
      out.f64(n.center);
      out.f64(n.slope);
      out.i32(n.left);
      out.i32(n.right);
    }
  }
}

inline NeuroFuzzyTree read_tree(BinaryReader& in) {
  in.expect_magic("NFT1");
  const std::size_t inputs = in.u32(), outputs = in.u32(), count = in.u32();
  require(outputs > 0 && count > 0, ErrorKind::BadFormat, "NFT1: empty tree");
  auto mean = in.f64s(inputs);
  auto scale = in.f64s(inputs);
  std::vector<NeuroFuzzyTree::Node> nodes(count);
  for (auto& n : nodes) {
    n.feature = in.i32();
    if (n.feature < 0) {
      n.feature = -1;
      n.values = in.f64s(outputs);
    } else {
      n.center = in.f64();
      n.slope = in.f64();
      n.left = in.i32();
      n.right = in.i32();
    }
  }
  try {
    return NeuroFuzzyTree(std::move(mean), std::move(scale), outputs, std::move(nodes));
  } catch (const Error& e) {
    fail(ErrorKind::BadFormat, std::string("NFT1: ") + e.message());
  }
}

}  // namespace fer

#pragma once

#include <span>
#include <vector>

#include "fer/binary_io.hpp"
#include "fer/error.hpp"
#include "fer/fuzzy_tree.hpp"
#include "fer/matrix.hpp"
#include "fer/svm.hpp"

namespace fer {

inline constexpr std::size_t kExpressionClasses = 6;

struct FusionOptions {
  NfTreeOptions tree;
  SvmOptions svm{10.0, 1.0 / 12.0};

  bool operator==(const FusionOptions&) const = default;
};

struct FusionModel {
  NeuroFuzzyTree tree_geo;
  NeuroFuzzyTree tree_app;
  SvmModel svm;

  bool operator==(const FusionModel&) const = default;
};

struct FusionPrediction {
  int label = 0;
  std::vector<double> intensities;  // 6 geometric then 6 appearance
};

/// Rows are one-hot for the label (1..6) scaled by the intensity fraction.
inline Matrix intensity_targets(std::span<const int> labels, std::span<const double> intensity) {
  require(labels.size() == intensity.size() && !labels.empty(), ErrorKind::DimensionMismatch,
          "labels and intensities must be aligned");
  Matrix t(labels.size(), kExpressionClasses);
  for (std::size_t s = 0; s < labels.size(); ++s) {
    if (!(labels[s] >= 1 && labels[s] <= static_cast<int>(kExpressionClasses)))
      fail(ErrorKind::InvalidArgument, "label " + std::to_string(labels[s]) + " outside 1..6");
    require(intensity[s] > 0.0 && intensity[s] <= 1.0, ErrorKind::InvalidArgument,
            "intensity fraction must lie in (0, 1]");
    t(s, static_cast<std::size_t>(labels[s] - 1)) = intensity[s];
  }
  return t;
}

inline std::vector<double> fused_intensities(const FusionModel& model, std::span<const double> geo,
                                             std::span<const double> app) {
  std::vector<double> out = model.tree_geo.predict(geo);
  const auto a = model.tree_app.predict(app);
  out.insert(out.end(), a.begin(), a.end());
  return out;
}

/// Trains both trees on their own features, then the SVM on the 12 tree
/// outputs of the training set.
inline FusionModel train_fusion(const Matrix& geo, const Matrix& app, std::span<const int> labels,
                                std::span<const double> intensity, const FusionOptions& opts = {}) {
  require(geo.rows() == labels.size() && app.rows() == labels.size(), ErrorKind::DimensionMismatch,
          "fusion inputs must have one row per label");
  const Matrix targets = intensity_targets(labels, intensity);
  FusionModel model;
  model.tree_geo = train_nf_tree(geo, targets, opts.tree);
  model.tree_app = train_nf_tree(app, targets, opts.tree);
  Matrix fused(labels.size(), 2 * kExpressionClasses);
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const auto v = fused_intensities(model, geo.row(s), app.row(s));
    std::copy(v.begin(), v.end(), fused.row(s).begin());
  }
  model.svm = train_svm_rbf(fused, labels, opts.svm);
  return model;
}

inline FusionPrediction predict_fusion(const FusionModel& model, std::span<const double> geo,
                                       std::span<const double> app) {
  FusionPrediction p;
  p.intensities = fused_intensities(model, geo, app);
  p.label = svm_predict(model.svm, p.intensities);
  return p;
}

inline void write_fusion(BinaryWriter& out, const FusionModel& model) {
  out.magic("FUSE");
  out.u32(1);
  BinaryWriter geo, app, svm;
  write_tree(geo, model.tree_geo);
  write_tree(app, model.tree_app);
  write_svm(svm, model.svm);
  out.section(geo);
  out.section(app);
  out.section(svm);
}

inline FusionModel read_fusion(BinaryReader& in) {
  in.expect_magic("FUSE");
  const std::uint32_t version = in.u32();
  if (version != 1)
    fail(ErrorKind::BadFormat, "FUSE: unsupported version " + std::to_string(version));
  FusionModel model;
  BinaryReader geo = in.section();
  model.tree_geo = read_tree(geo);
  geo.expect_end();
  BinaryReader app = in.section();
  model.tree_app = read_tree(app);
  app.expect_end();
  BinaryReader svm = in.section();
  model.svm = read_svm(svm);
  svm.expect_end();
  require(model.svm.dim == 2 * kExpressionClasses, ErrorKind::BadFormat,
          "FUSE: SVM input dimension must be 12");
  return model;
}

}  // namespace fer

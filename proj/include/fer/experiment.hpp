#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fer/bidirectional.hpp"
#include "fer/binary_io.hpp"
#include "fer/config.hpp"
#include "fer/confusion.hpp"
#include "fer/dataset.hpp"
#include "fer/error.hpp"
#include "fer/fusion.hpp"
#include "fer/gabor.hpp"
#include "fer/geometric.hpp"
#include "fer/svm.hpp"

namespace fer {

enum class Method { Lda2d, Hlda2dConcat, Proposed, ProposedGeo, ProposedFusion };

inline Method parse_method(const std::string& name) {
  static const std::map<std::string, Method> m{{"2dlda-lda", Method::Lda2d},
                                               {"2dhlda", Method::Hlda2dConcat},
                                               {"proposed", Method::Proposed},
                                               {"proposed-geo", Method::ProposedGeo},
                                               {"proposed-fusion", Method::ProposedFusion}};
  const auto it = m.find(name);
  if (it == m.end())
    fail(ErrorKind::InvalidArgument,
         "unknown method '" + name +
             "' (expected 2dlda-lda, 2dhlda, proposed, proposed-geo or proposed-fusion)");
  return it->second;
}

inline std::string method_name(Method m) {
  switch (m) {
    case Method::Lda2d:
      return "2dlda-lda";
    case Method::Hlda2dConcat:
      return "2dhlda";
    case Method::Proposed:
      return "proposed";
    case Method::ProposedGeo:
      return "proposed-geo";
    case Method::ProposedFusion:
      return "proposed-fusion";
  }
  return "?";
}

inline bool uses_geometry(Method m) {
  return m == Method::ProposedGeo || m == Method::ProposedFusion;
}

/// Per-record Gabor grids and displacement matrices, computed on first use.
class FeatureCache {
 public:
  FeatureCache(const std::vector<SequenceRecord>& records, const RunConfig& config)
      : records_(&records),
        config_(config),
        bank_(make_bank(config.gabor)),
        gabor_(records.size()),
        displacement_(records.size()) {}

  const RunConfig& config() const noexcept { return config_; }
  const std::vector<SequenceRecord>& records() const noexcept { return *records_; }

  const Grid2<Matrix>& gabor(std::size_t i) {
    if (!gabor_[i]) {
      const auto& rec = records()[i];
      check_frames(rec);
      gabor_[i] = represent_sequence(rec.frames, bank_);
    }
    return *gabor_[i];
  }

  const Matrix& displacement(std::size_t i) {
    if (!displacement_[i]) {
      const auto& rec = records()[i];
      check_frames(rec);
      const GridModel grid =
          rec.grid ? *rec.grid
                   : synthetic_grid(config_.rows, config_.cols, config_.tracker.half_window());
      const Trajectory t = track_pyramidal_lk(rec.frames, grid, config_.tracker);
      displacement_[i] = displacement_features(recover_lost_points(t, grid));
    }
    return *displacement_[i];
  }

 private:
  void check_frames(const SequenceRecord& rec) const {
    if (rec.frames.size() != config_.frames)
      fail(ErrorKind::MissingFrames, "record '" + rec.id + "' has " +
                                         std::to_string(rec.frames.size()) + " frames, expected " +
                                         std::to_string(config_.frames));
    for (const Matrix& f : rec.frames)
      if (f.rows() != config_.rows || f.cols() != config_.cols)
        fail(ErrorKind::HeterogeneousFrameSizes, "record '" + rec.id + "' frames are not " +
                                                     std::to_string(config_.rows) + "x" +
                                                     std::to_string(config_.cols));
  }

  const std::vector<SequenceRecord>* records_;
  RunConfig config_;
  GaborBank bank_;
  std::vector<std::optional<Grid2<Matrix>>> gabor_;
  std::vector<std::optional<Matrix>> displacement_;
};

/// Frames of each channel stacked vertically: (f·m)×n per Gabor response.
inline Grid2<Matrix> stack_frames(const Grid2<Matrix>& grid) {
  Grid2<Matrix> out(grid.p(), 1);
  for (std::size_t k = 0; k < grid.p(); ++k) {
    const std::size_t m = grid(k, 0).rows(), n = grid(k, 0).cols();
    Matrix s(m * grid.f(), n);
    for (std::size_t r = 0; r < grid.f(); ++r)
      for (std::size_t i = 0; i < m; ++i)
        std::copy(grid(k, r).row(i).begin(), grid(k, r).row(i).end(), s.row(r * m + i).begin());
    out(k, 0) = std::move(s);
  }
  return out;
}

/// Centers every feature and divides each block of features by the block's
/// RMS spread, so relative scales inside a block survive. A block with no
/// spread gets scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // per feature, constant within a block

  static Standardizer fit(const Matrix& x, std::span<const std::size_t> blocks) {
    std::size_t total = 0;
    for (std::size_t b : blocks) total += b;
    require(total == x.cols() && x.rows() > 0, ErrorKind::DimensionMismatch,
            "standardizer blocks do not cover the features");
    Standardizer s;
    s.mean.assign(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) s.mean[j] += x(i, j);
    for (double& m : s.mean) m /= static_cast<double>(x.rows());
    std::size_t start = 0;
    for (std::size_t b : blocks) {
      double ss = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = start; j < start + b; ++j) {
          const double d = x(i, j) - s.mean[j];
          ss += d * d;
        }
      double v = std::sqrt(ss / static_cast<double>(x.rows() * std::max<std::size_t>(b, 1)));
      if (!(v > 1e-12)) v = 1.0;
      s.scale.insert(s.scale.end(), b, v);
      start += b;
    }
    return s;
  }

  std::vector<double> apply(std::span<const double> x) const {
    require(x.size() == mean.size(), ErrorKind::DimensionMismatch, "standardizer size mismatch");
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
    return out;
  }

  bool operator==(const Standardizer&) const = default;
};

struct TrainedModel {
  Method method = Method::Proposed;
  RunConfig config;
  BidirectionalReducer appearance;
  std::optional<GeometricReducer> geometric;
  Standardizer scaler;
  std::optional<SvmModel> svm;
  std::optional<FusionModel> fusion;

  bool operator==(const TrainedModel&) const = default;
};

namespace detail {

inline Matrix rows_matrix(const std::vector<std::vector<double>>& rows) {
  require(!rows.empty() && !rows[0].empty(), ErrorKind::InvalidArgument, "no feature rows");
  Matrix x(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == x.cols(), ErrorKind::DimensionMismatch, "ragged feature rows");
    std::copy(rows[i].begin(), rows[i].end(), x.row(i).begin());
  }
  return x;
}

inline std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Appearance reducers are shared between methods trained on one split.
class SplitTrainer {
 public:
  SplitTrainer(FeatureCache& cache, std::vector<std::size_t> train)
      : cache_(cache), cfg_(cache.config()), train_(std::move(train)) {
    for (std::size_t i : train_) labels_.push_back(cache_.records()[i].label);
    std::set<int> distinct(labels_.begin(), labels_.end());
    require(distinct.size() >= 2, ErrorKind::InsufficientSamplesPerClass,
            "training split needs at least two classes");
    lda_out_ = std::min(cfg_.lda_out, distinct.size() - 1);
  }

  const BidirectionalReducer& appearance(Method m) {
    const int key = m == Method::Lda2d ? 0 : (m == Method::Hlda2dConcat ? 1 : 2);
    auto it = appearance_.find(key);
    if (it != appearance_.end()) return it->second;
    ReductionOptions opts;
    opts.hlda = cfg_.hlda;
    opts.criterion = key == 0 ? Criterion::Homoscedastic : Criterion::Heteroscedastic;
    std::vector<Grid2<Matrix>> grids;
    grids.reserve(train_.size());
    for (std::size_t i : train_)
      grids.push_back(key == 1 ? stack_frames(cache_.gabor(i)) : cache_.gabor(i));
    BidirectionalReducer r;
    if (key == 1) {
      opts.row_direction = false;
      r = fit_bidirectional(grids, labels_, cfg_.rows * cfg_.frames, cfg_.d_c, opts);
    } else {
      r = fit_bidirectional(grids, labels_, cfg_.d_r, cfg_.d_c, opts);
    }
    r.fit_lda(grids, labels_, lda_out_, cfg_.lda_ridge);
    return appearance_.emplace(key, std::move(r)).first->second;
  }

  const GeometricReducer& geometric() {
    if (geometric_) return *geometric_;
    std::vector<Matrix> d;
    for (std::size_t i : train_) d.push_back(cache_.displacement(i));
    ReductionOptions opts;
    opts.hlda = cfg_.hlda;
    opts.hlda.ridge = cfg_.geo_ridge;
    geometric_ =
        reduce_geometric(LabeledMatrixSet(std::move(d), labels_), cfg_.geo_d_r, cfg_.geo_d_c, opts);
    return *geometric_;
  }

  TrainedModel train(Method m) {
    TrainedModel model;
    model.method = m;
    model.config = cfg_;
    model.appearance = appearance(m);
    if (uses_geometry(m)) model.geometric = geometric();
    std::vector<std::vector<double>> app, geo;
    for (std::size_t i : train_) {
      app.push_back(appearance_features(model, cache_, i));
      if (model.geometric) geo.push_back(model.geometric->transform(cache_.displacement(i)));
    }
    if (m == Method::ProposedFusion) {
      std::vector<double> intensity;
      for (std::size_t i : train_) intensity.push_back(cache_.records()[i].intensity_fraction);
      FusionOptions fo;
      fo.tree = cfg_.tree;
      fo.svm = cfg_.fusion_svm;
      model.fusion = train_fusion(rows_matrix(geo), rows_matrix(app), labels_, intensity, fo);
      return model;
    }
    std::vector<std::vector<double>> x;
    for (std::size_t s = 0; s < app.size(); ++s)
      x.push_back(geo.empty() ? app[s] : concat(app[s], geo[s]));
    const Matrix xm = rows_matrix(x);
    std::vector<std::size_t> blocks{app[0].size()};
    if (!geo.empty()) blocks.push_back(geo[0].size());
    model.scaler = Standardizer::fit(xm, blocks);
    Matrix z(xm.rows(), xm.cols());
    for (std::size_t s = 0; s < xm.rows(); ++s) {
      const auto v = model.scaler.apply(xm.row(s));
      std::copy(v.begin(), v.end(), z.row(s).begin());
    }
    model.svm = train_svm_rbf(z, labels_, cfg_.svm);
    return model;
  }

  static std::vector<double> appearance_features(const TrainedModel& model, FeatureCache& cache,
                                                 std::size_t i) {
    if (model.method == Method::Hlda2dConcat)
      return transform_sequence(stack_frames(cache.gabor(i)), model.appearance);
    return transform_sequence(cache.gabor(i), model.appearance);
  }

 private:
  FeatureCache& cache_;
  const RunConfig& cfg_;
  std::vector<std::size_t> train_;
  std::vector<int> labels_;
  std::size_t lda_out_ = 1;
  std::map<int, BidirectionalReducer> appearance_;
  std::optional<GeometricReducer> geometric_;
};

}  // namespace detail

/// Trains each method on the records at `train`; intermediate reducers are
/// shared between methods that use them.
inline std::vector<TrainedModel> train_models(const std::vector<Method>& methods,
                                              FeatureCache& cache,
                                              const std::vector<std::size_t>& train) {
  detail::SplitTrainer trainer(cache, train);
  std::vector<TrainedModel> out;
  for (Method m : methods) out.push_back(trainer.train(m));
  return out;
}

inline int predict_record(const TrainedModel& model, FeatureCache& cache, std::size_t i) {
  const auto app = detail::SplitTrainer::appearance_features(model, cache, i);
  if (model.method == Method::ProposedFusion)
    return predict_fusion(*model.fusion, model.geometric->transform(cache.displacement(i)), app)
        .label;
  const auto x = model.geometric
                     ? detail::concat(app, model.geometric->transform(cache.displacement(i)))
                     : app;
  return svm_predict(*model.svm, model.scaler.apply(x));
}

inline ConfusionMatrix evaluate(const TrainedModel& model, FeatureCache& cache,
                                const std::vector<std::size_t>& test) {
  ConfusionMatrix cm;
  for (std::size_t i : test) cm.add(cache.records()[i].label, predict_record(model, cache, i));
  return cm;
}

/// Stratified, subject-grouped folds: within each class, groups are ranked
/// by (FNV-1a hash, name) and dealt round-robin. Depends only on ids and
/// the fold count.
inline std::vector<int> assign_folds(const std::vector<SequenceRecord>& records, int folds) {
  require(folds >= 2, ErrorKind::InvalidConfig, "folds must be >= 2");
  std::map<int, std::set<std::string>> groups;
  for (const auto& r : records) groups[r.label].insert(r.group.empty() ? r.id : r.group);
  std::map<std::pair<int, std::string>, int> fold_of_group;
  for (const auto& [label, gs] : groups) {
    if (gs.size() < static_cast<std::size_t>(folds))
      fail(ErrorKind::InsufficientSamplesPerClass,
           "class " + std::to_string(label) + " has " + std::to_string(gs.size()) +
               " source sequences, fewer than " + std::to_string(folds) + " folds");
    std::vector<std::pair<std::uint64_t, std::string>> ranked;
    for (const auto& g : gs) ranked.emplace_back(fnv1a(g), g);
    std::sort(ranked.begin(), ranked.end());
    for (std::size_t i = 0; i < ranked.size(); ++i)
      fold_of_group[{label, ranked[i].second}] =
          static_cast<int>(i % static_cast<std::size_t>(folds));
  }
  std::vector<int> out;
  for (const auto& r : records)
    out.push_back(fold_of_group.at({r.label, r.group.empty() ? r.id : r.group}));
  return out;
}

inline std::vector<std::size_t> fold_indices(const std::vector<int>& fold_of, int fold,
                                             bool in_fold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if ((fold_of[i] == fold) == in_fold) out.push_back(i);
  return out;
}

struct MethodResult {
  std::string method;
  std::vector<ConfusionMatrix> folds;
  ConfusionMatrix pooled;
};

struct CvResult {
  std::vector<int> fold_of;
  std::vector<MethodResult> methods;

  const MethodResult& at(const std::string& name) const {
    for (const auto& m : methods)
      if (m.method == name) return m;
    fail(ErrorKind::InvalidArgument, "no result for method '" + name + "'");
  }
};

inline CvResult cross_validate(FeatureCache& cache, const std::vector<std::string>& method_names) {
  const auto& cfg = cache.config();
  std::vector<Method> methods;
  for (const auto& n : method_names) methods.push_back(parse_method(n));
  CvResult res;
  res.fold_of = assign_folds(cache.records(), cfg.folds);
  for (Method m : methods) res.methods.push_back({method_name(m), {}, {}});
  for (int k = 0; k < cfg.folds; ++k) {
    const auto models = train_models(methods, cache, fold_indices(res.fold_of, k, false));
    const auto test = fold_indices(res.fold_of, k, true);
    for (std::size_t j = 0; j < models.size(); ++j) {
      const ConfusionMatrix cm = evaluate(models[j], cache, test);
      res.methods[j].folds.push_back(cm);
      res.methods[j].pooled += cm;
    }
  }
  return res;
}

inline CvResult cross_validate(const std::vector<SequenceRecord>& records,
                               const RunConfig& config) {
  FeatureCache cache(records, config);
  return cross_validate(cache, config.methods);
}

/// Cross-validated RBF-SVM on fixed feature vectors (one row per record),
/// using the same folds as the full pipeline.
inline CvResult cross_validate_vectors(const std::vector<SequenceRecord>& records, const Matrix& x,
                                       int folds, const SvmOptions& svm = {}) {
  require(x.rows() == records.size(), ErrorKind::DimensionMismatch, "one feature row per record");
  CvResult res;
  res.fold_of = assign_folds(records, folds);
  res.methods.push_back({"vectors", {}, {}});
  for (int k = 0; k < folds; ++k) {
    const auto train = fold_indices(res.fold_of, k, false);
    const auto test = fold_indices(res.fold_of, k, true);
    Matrix xt(train.size(), x.cols());
    std::vector<int> labels;
    for (std::size_t s = 0; s < train.size(); ++s) {
      std::copy(x.row(train[s]).begin(), x.row(train[s]).end(), xt.row(s).begin());
      labels.push_back(records[train[s]].label);
    }
    const SvmModel model = train_svm_rbf(xt, labels, svm);
    ConfusionMatrix cm;
    for (std::size_t i : test) cm.add(records[i].label, svm_predict(model, x.row(i)));
    res.methods[0].folds.push_back(cm);
    res.methods[0].pooled += cm;
  }
  return res;
}

/// Human-readable tables for every method (pooled), with per-fold rates.
inline std::string format_report(const CvResult& res) {
  std::string out;
  for (const auto& m : res.methods) {
    out += format_table(m.pooled, "Method " + m.method + " (pooled over " +
                                      std::to_string(m.folds.size()) + " folds)");
    out += "Per-fold rates:";
    for (const auto& f : m.folds) out += " " + format_rate(f.recognition_rate());
    out += "\n\n";
  }
  return out;
}

inline std::string summary_report(const CvResult& res, std::size_t records, std::uint64_t seed) {
  std::string out;
  out += "records=" + std::to_string(records) + "\n";
  out += "seed=" + std::to_string(seed) + "\n";
  out += "folds=" + std::to_string(res.methods.empty() ? 0 : res.methods[0].folds.size()) + "\n";
  for (const auto& m : res.methods) {
    out += summary_lines(m.pooled, m.method + ".pooled");
    for (std::size_t k = 0; k < m.folds.size(); ++k)
      out += summary_lines(m.folds[k], m.method + ".fold" + std::to_string(k));
  }
  return out;
}

inline void write_standardizer(BinaryWriter& out, const Standardizer& s) {
  out.u32(static_cast<std::uint32_t>(s.mean.size()));
  out.f64s(s.mean);
  out.f64s(s.scale);
}

inline Standardizer read_standardizer(BinaryReader& in) {
  Standardizer s;
  const std::size_t n = in.u32();
  s.mean = in.f64s(n);
  s.scale = in.f64s(n);
  return s;
}

/// "FERM" container: method, config text, then one section per component.
inline std::vector<char> serialize(const TrainedModel& model) {
  BinaryWriter out;
  out.magic("FERM");
  out.u32(1);
  out.string(method_name(model.method));
  out.string(config_to_text(model.config));
  BinaryWriter app;
  write_reducer(app, model.appearance);
  out.section(app);
  out.u32(model.geometric ? 1 : 0);
  if (model.geometric) {
    BinaryWriter geo;
    write_reducer(geo, model.geometric->reducer);
    out.section(geo);
  }
  if (model.fusion) {
    out.u32(2);
    BinaryWriter f;
    write_fusion(f, *model.fusion);
    out.section(f);
  } else {
    out.u32(1);
    BinaryWriter s;
    write_standardizer(s, model.scaler);
    write_svm(s, *model.svm);
    out.section(s);
  }
  return out.bytes();
}

inline TrainedModel deserialize_model(std::vector<char> bytes) {
  BinaryReader in(std::move(bytes));
  in.expect_magic("FERM");
  const std::uint32_t version = in.u32();
  if (version != 1)
    fail(ErrorKind::BadFormat, "FERM: unsupported version " + std::to_string(version));
  TrainedModel model;
  model.method = parse_method(in.string());
  try {
    model.config = parse_config_text(in.string());
  } catch (const Error& e) {
    fail(ErrorKind::BadFormat, "FERM: stored config is invalid: " + e.message());
  }
  BinaryReader app = in.section();
  model.appearance = read_reducer(app);
  app.expect_end();
  if (in.u32() == 1) {
    BinaryReader geo = in.section();
    model.geometric = GeometricReducer{read_reducer(geo)};
    geo.expect_end();
  }
  const std::uint32_t kind = in.u32();
  BinaryReader body = in.section();
  if (kind == 2) {
    model.fusion = read_fusion(body);
  } else if (kind == 1) {
    model.scaler = read_standardizer(body);
    model.svm = read_svm(body);
  } else {
    fail(ErrorKind::BadFormat, "FERM: unknown classifier kind");
  }
  body.expect_end();
  in.expect_end();
  require(model.appearance.lda().has_value(), ErrorKind::BadFormat, "FERM: appearance LDA missing");
  require(!uses_geometry(model.method) || model.geometric.has_value(), ErrorKind::BadFormat,
          "FERM: geometric reducer missing");
  require((model.method == Method::ProposedFusion) == model.fusion.has_value(),
          ErrorKind::BadFormat, "FERM: classifier does not match the method");
  return model;
}

}  // namespace fer

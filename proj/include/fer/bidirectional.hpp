#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fer/binary_io.hpp"
#include "fer/error.hpp"
#include "fer/grid.hpp"
#include "fer/hlda.hpp"
#include "fer/lda.hpp"
#include "fer/matrix.hpp"
#include "fer/scatter.hpp"

namespace fer {

/// Row projection V (m×d_r) and column projection W (n×d_c) of one channel.
struct ChannelProjection {
  Matrix v;
  Matrix w;

  bool operator==(const ChannelProjection&) const = default;
};

enum class Criterion { Homoscedastic, Heteroscedastic };

struct ReductionOptions {
  Criterion criterion = Criterion::Heteroscedastic;
  HldaOptions hlda;
  // When false only the column direction is reduced and V = I_m.
  bool row_direction = true;
};

/// C = Vᵀ·A·W.
inline Matrix reduce(const Matrix& a, const Matrix& v, const Matrix& w) {
  if (!(a.rows() == v.rows() && a.cols() == w.rows()))
    fail(ErrorKind::DimensionMismatch,
         "reduce: A is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ", V has " +
             std::to_string(v.rows()) + " rows, W has " + std::to_string(w.rows()));
  return transpose_times(v, a * w);
}

/// Projection for one direction: 2DLDA or 2DHLDA on the given set.
inline Matrix fit_direction(const LabeledMatrixSet& set, std::size_t d,
                            const ReductionOptions& opts) {
  const ScatterSet scatters = compute_scatters(set);
  if (opts.criterion == Criterion::Homoscedastic)
    return fit_2dlda(scatters, d, opts.hlda.ridge.resolve(scatters.within));
  return fit_2dhlda(scatters, d, opts.hlda);
}

/// W from the raw matrices, then V from the transposed projections (A·W)ᵀ.
inline ChannelProjection fit_channel(const LabeledMatrixSet& set, std::size_t d_r, std::size_t d_c,
                                     const ReductionOptions& opts) {
  ChannelProjection out;
  out.w = fit_direction(set, d_c, opts);
  if (!opts.row_direction) {
    if (d_r != set.rows())
      fail(ErrorKind::RankExceeded, "column-only reduction keeps all " +
                                        std::to_string(set.rows()) +
                                        " rows, d_r = " + std::to_string(d_r));
    out.v = Matrix::identity(set.rows());
    return out;
  }
  std::vector<Matrix> projected;
  projected.reserve(set.total());
  for (const Matrix& a : set.samples()) projected.push_back((a * out.w).transpose());
  const LabeledMatrixSet rows(std::move(projected), set.labels());
  out.v = fit_direction(rows, d_r, opts);
  return out;
}

/// Per-channel projections plus the optional final LDA over the
/// concatenated channel features.
class BidirectionalReducer {
 public:
  BidirectionalReducer() = default;
  BidirectionalReducer(std::size_t m, std::size_t n, std::size_t d_r, std::size_t d_c,
                       Grid2<ChannelProjection> channels)
      : m_(m), n_(n), d_r_(d_r), d_c_(d_c), channels_(std::move(channels)) {
    for (const auto& ch : channels_)
      require(ch.v.rows() == m && ch.v.cols() == d_r && ch.w.rows() == n && ch.w.cols() == d_c,
              ErrorKind::DimensionMismatch, "channel projection shape mismatch");
  }

  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t d_r() const noexcept { return d_r_; }
  std::size_t d_c() const noexcept { return d_c_; }
  std::size_t p() const noexcept { return channels_.p(); }
  std::size_t f() const noexcept { return channels_.f(); }
  const Grid2<ChannelProjection>& channels() const noexcept { return channels_; }
  const std::optional<LinearProjection>& lda() const noexcept { return lda_; }

  /// Length of the concatenated vector before the final LDA.
  std::size_t feature_dim() const noexcept { return channels_.size() * d_r_ * d_c_; }
  std::size_t output_dim() const noexcept { return lda_ ? lda_->output_dim() : feature_dim(); }

  /// Reduced channels flattened row-major and concatenated k-major, r-minor.
  std::vector<double> concat_features(const Grid2<Matrix>& grid) const {
    require(channels_.size() > 0, ErrorKind::ReducerNotFitted, "reducer has no channels");
    if (!(grid.p() == p() && grid.f() == f()))
      fail(ErrorKind::ShapeMismatch, "grid is " + std::to_string(grid.p()) + "x" +
                                         std::to_string(grid.f()) + ", reducer expects " +
                                         std::to_string(p()) + "x" + std::to_string(f()));
    std::vector<double> out;
    out.reserve(feature_dim());
    for (std::size_t k = 0; k < p(); ++k)
      for (std::size_t r = 0; r < f(); ++r) {
        const Matrix& a = grid(k, r);
        if (!(a.rows() == m_ && a.cols() == n_))
          fail(ErrorKind::ShapeMismatch, "channel matrix is " + std::to_string(a.rows()) + "x" +
                                             std::to_string(a.cols()) + ", expected " +
                                             std::to_string(m_) + "x" + std::to_string(n_));
        const Matrix c = reduce(a, channels_(k, r).v, channels_(k, r).w);
        out.insert(out.end(), c.values().begin(), c.values().end());
      }
    return out;
  }

  void set_lda(LinearProjection lda) {
    require(lda.input_dim() == feature_dim(), ErrorKind::DimensionMismatch,
            "LDA input dimension differs from the concatenated feature length");
    lda_ = std::move(lda);
  }

  /// Fits the final LDA on the concatenated features of training grids.
  void fit_lda(std::span<const Grid2<Matrix>> grids, std::span<const int> labels,
               std::size_t out_dim, Ridge ridge = Ridge::automatic()) {
    require(!grids.empty(), ErrorKind::InvalidArgument, "no training grids");
    Matrix x(grids.size(), feature_dim());
    for (std::size_t i = 0; i < grids.size(); ++i) {
      const auto row = concat_features(grids[i]);
      std::copy(row.begin(), row.end(), x.row(i).begin());
    }
    set_lda(fit_lda_1d(x, labels, out_dim, ridge));
  }

  bool operator==(const BidirectionalReducer&) const = default;

 private:
  std::size_t m_ = 0, n_ = 0, d_r_ = 0, d_c_ = 0;
  Grid2<ChannelProjection> channels_;
  std::optional<LinearProjection> lda_;
};

/// b = LDA(concat of Vᵀ·A·W over channels).
inline std::vector<double> transform_sequence(const Grid2<Matrix>& grid,
                                              const BidirectionalReducer& reducer) {
  require(reducer.lda().has_value(), ErrorKind::ReducerNotFitted, "final LDA is not fitted");
  return reducer.lda()->apply(reducer.concat_features(grid));
}

namespace detail {

template <class ChannelSet>
BidirectionalReducer fit_grid(std::size_t p, std::size_t f, std::size_t m, std::size_t n,
                              std::size_t d_r, std::size_t d_c, const ReductionOptions& opts,
                              ChannelSet&& channel_set) {
  if (!(d_c >= 1 && d_c <= n && d_r >= 1 && d_r <= m))
    fail(ErrorKind::RankExceeded, "reduced size " + std::to_string(d_r) + "x" +
                                      std::to_string(d_c) + " does not fit " + std::to_string(m) +
                                      "x" + std::to_string(n));
  Grid2<ChannelProjection> channels(p, f);
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t r = 0; r < f; ++r) {
      try {
        channels(k, r) = fit_channel(channel_set(k, r), d_r, d_c, opts);
      } catch (const Error& e) {
        if (e.channel()) throw;
        throw Error(e.kind(), e.message(), ChannelTag{k, r});
      }
    }
  return BidirectionalReducer(m, n, d_r, d_c, std::move(channels));
}

}  // namespace detail

/// Fits every channel of a p×f grid of labeled sets. Errors carry the
/// channel's (k, r) coordinates, counted from 0.
inline BidirectionalReducer fit_bidirectional(const Grid2<LabeledMatrixSet>& train, std::size_t d_r,
                                              std::size_t d_c, const ReductionOptions& opts = {}) {
  require(train.size() > 0, ErrorKind::InvalidArgument, "empty channel grid");
  const std::size_t m = train(0, 0).rows();
  const std::size_t n = train(0, 0).cols();
  for (const auto& set : train)
    require(set.rows() == m && set.cols() == n, ErrorKind::DimensionMismatch,
            "channels differ in matrix size");
  return detail::fit_grid(
      train.p(), train.f(), m, n, d_r, d_c, opts,
      [&](std::size_t k, std::size_t r) -> const LabeledMatrixSet& { return train(k, r); });
}

/// Same, from per-sequence response grids with one label each.
inline BidirectionalReducer fit_bidirectional(std::span<const Grid2<Matrix>> sequences,
                                              std::span<const int> labels, std::size_t d_r,
                                              std::size_t d_c, const ReductionOptions& opts = {}) {
  require(!sequences.empty(), ErrorKind::InvalidArgument, "no training sequences");
  require(sequences.size() == labels.size(), ErrorKind::DimensionMismatch,
          "sequence and label counts differ");
  const std::size_t p = sequences[0].p();
  const std::size_t f = sequences[0].f();
  for (const auto& g : sequences)
    require(g.p() == p && g.f() == f && g.size() > 0, ErrorKind::ShapeMismatch,
            "sequence grids differ in shape");
  const std::size_t m = sequences[0](0, 0).rows();
  const std::size_t n = sequences[0](0, 0).cols();
  const std::vector<int> label_copy(labels.begin(), labels.end());
  return detail::fit_grid(p, f, m, n, d_r, d_c, opts, [&](std::size_t k, std::size_t r) {
    std::vector<Matrix> samples;
    samples.reserve(sequences.size());
    for (const auto& g : sequences) samples.push_back(g(k, r));
    return LabeledMatrixSet(std::move(samples), label_copy);
  });
}

inline void write_reducer(BinaryWriter& out, const BidirectionalReducer& reducer) {
  out.magic("BDR1");
  for (std::size_t v :
       {reducer.p(), reducer.f(), reducer.m(), reducer.n(), reducer.d_r(), reducer.d_c()})
    out.u32(static_cast<std::uint32_t>(v));
  out.u32(static_cast<std::uint32_t>(reducer.lda() ? reducer.lda()->output_dim() : 0));
  for (const auto& ch : reducer.channels()) {
    out.matrix_values(ch.v);
    out.matrix_values(ch.w);
  }
  if (reducer.lda()) {
    out.matrix_values(reducer.lda()->projection);
    out.f64s(reducer.lda()->mean);
  }
}

inline BidirectionalReducer read_reducer(BinaryReader& in) {
  in.expect_magic("BDR1");
  const std::size_t p = in.u32(), f = in.u32(), m = in.u32(), n = in.u32();
  const std::size_t d_r = in.u32(), d_c = in.u32(), lda_out = in.u32();
  require(p > 0 && f > 0 && m > 0 && n > 0 && d_r > 0 && d_c > 0 && d_r <= m && d_c <= n,
          ErrorKind::BadFormat, "BDR1: bad header");
  Grid2<ChannelProjection> channels(p, f);
  for (auto& ch : channels) {
    ch.v = in.matrix_values(m, d_r);
    ch.w = in.matrix_values(n, d_c);
  }
  BidirectionalReducer reducer(m, n, d_r, d_c, std::move(channels));
  if (lda_out > 0) {
    LinearProjection lda;
    lda.projection = in.matrix_values(reducer.feature_dim(), lda_out);
    lda.mean = in.f64s(reducer.feature_dim());
    reducer.set_lda(std::move(lda));
  }
  return reducer;
}

inline std::vector<char> serialize(const BidirectionalReducer& reducer) {
  BinaryWriter out;
  write_reducer(out, reducer);
  return out.bytes();
}

inline BidirectionalReducer deserialize_reducer(std::vector<char> bytes) {
  BinaryReader in(std::move(bytes));
  BidirectionalReducer r = read_reducer(in);
  in.expect_end();
  return r;
}

}  // namespace fer

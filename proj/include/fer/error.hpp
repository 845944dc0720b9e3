#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fer {

enum class ErrorKind {
  // matrixkit
  NonSquare,
  NotSymmetric,
  DidNotConverge,
  NotPositiveDefinite,
  DimensionMismatch,
  GramNotPositiveDefinite,
  RankDeficient,
  KernelLargerThanImage,
  EvenKernelSize,
  NonFinite,
  // gabor
  InvalidConfig,
  FrameTooSmall,
  HeterogeneousFrameSizes,
  // subspace
  EmptyClass,
  DegenerateScatter,
  RankExceeded,
  InitializationFailed,
  OutDimTooLarge,
  ReducerNotFitted,
  ShapeMismatch,
  // geometric
  TooFewFrames,
  GridOutOfBounds,
  AllPointsLost,
  // classifiers
  DegenerateTargets,
  SolverStalled,
  // pipeline
  MissingFrames,
  UnreadableImage,
  BadClassName,
  InsufficientSamplesPerClass,
  InvalidArgument,
  BadFormat,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonSquare:
      return "NonSquare";
    case ErrorKind::NotSymmetric:
      return "NotSymmetric";
    case ErrorKind::DidNotConverge:
      return "DidNotConverge";
    case ErrorKind::NotPositiveDefinite:
      return "NotPositiveDefinite";
    case ErrorKind::DimensionMismatch:
      return "DimensionMismatch";
    case ErrorKind::GramNotPositiveDefinite:
      return "GramNotPositiveDefinite";
    case ErrorKind::RankDeficient:
      return "RankDeficient";
    case ErrorKind::KernelLargerThanImage:
      return "KernelLargerThanImage";
    case ErrorKind::EvenKernelSize:
      return "EvenKernelSize";
    case ErrorKind::NonFinite:
      return "NonFinite";
    case ErrorKind::InvalidConfig:
      return "InvalidConfig";
    case ErrorKind::FrameTooSmall:
      return "FrameTooSmall";
    case ErrorKind::HeterogeneousFrameSizes:
      return "HeterogeneousFrameSizes";
    case ErrorKind::EmptyClass:
      return "EmptyClass";
    case ErrorKind::DegenerateScatter:
      return "DegenerateScatter";
    case ErrorKind::RankExceeded:
      return "RankExceeded";
    case ErrorKind::InitializationFailed:
      return "InitializationFailed";
    case ErrorKind::OutDimTooLarge:
      return "OutDimTooLarge";
    case ErrorKind::ReducerNotFitted:
      return "ReducerNotFitted";
    case ErrorKind::ShapeMismatch:
      return "ShapeMismatch";
    case ErrorKind::TooFewFrames:
      return "TooFewFrames";
    case ErrorKind::GridOutOfBounds:
      return "GridOutOfBounds";
    case ErrorKind::AllPointsLost:
      return "AllPointsLost";
    case ErrorKind::DegenerateTargets:
      return "DegenerateTargets";
    case ErrorKind::SolverStalled:
      return "SolverStalled";
    case ErrorKind::MissingFrames:
      return "MissingFrames";
    case ErrorKind::UnreadableImage:
      return "UnreadableImage";
    case ErrorKind::BadClassName:
      return "BadClassName";
    case ErrorKind::InsufficientSamplesPerClass:
      return "InsufficientSamplesPerClass";
    case ErrorKind::InvalidArgument:
      return "InvalidArgument";
    case ErrorKind::BadFormat:
      return "BadFormat";
    case ErrorKind::Io:
      return "Io";
  }
  return "Unknown";
}

/// Input/configuration problems, as opposed to numerical or runtime failures.
/// The CLI maps the former to exit code 1 and the latter to exit code 2.
inline bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidArgument:
    case ErrorKind::MissingFrames:
    case ErrorKind::UnreadableImage:
    case ErrorKind::BadClassName:
    case ErrorKind::BadFormat:
    case ErrorKind::InsufficientSamplesPerClass:
    case ErrorKind::GridOutOfBounds:
    case ErrorKind::HeterogeneousFrameSizes:
      return true;
    default:
      return false;
  }
}

/// Channel coordinates (k = Gabor response, r = frame) attached to errors
/// raised while fitting one channel of a bidirectional reducer.
struct ChannelTag {
  std::size_t k = 0;
  std::size_t r = 0;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        message_(what) {}

  Error(ErrorKind kind, const std::string& what, ChannelTag channel)
      : std::runtime_error(std::string(to_string(kind)) +
                           " [channel k=" + std::to_string(channel.k) +
                           " r=" + std::to_string(channel.r) + "]: " + what),
        kind_(kind),
        message_(what),
        channel_(channel) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::optional<ChannelTag>& channel() const noexcept { return channel_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::optional<ChannelTag> channel_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const char* what) {
  if (!condition) fail(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace fer

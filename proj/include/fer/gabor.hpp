#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "fer/conv.hpp"
#include "fer/error.hpp"
#include "fer/grid.hpp"
#include "fer/matrix.hpp"

namespace fer {

struct GaborConfig {
  std::vector<double> scales{std::numbers::pi / 2.0, std::numbers::pi / 8.0};
  std::vector<double> orientations{0.0, std::numbers::pi / 4.0, std::numbers::pi / 2.0,
                                   3.0 * std::numbers::pi / 4.0};
  double sigma = std::numbers::pi;
  std::size_t kernel_size = 3;

  void validate() const {
    require(!scales.empty(), ErrorKind::InvalidConfig, "gabor: no scales");
    require(!orientations.empty(), ErrorKind::InvalidConfig, "gabor: no orientations");
    for (double s : scales)
      require(std::isfinite(s) && s > 0.0, ErrorKind::InvalidConfig, "gabor: scales must be > 0");
    for (double o : orientations)
      require(std::isfinite(o), ErrorKind::InvalidConfig, "gabor: orientation not finite");
    require(std::isfinite(sigma) && sigma > 0.0, ErrorKind::InvalidConfig,
            "gabor: sigma must be > 0");
    require(kernel_size >= 3 && kernel_size % 2 == 1, ErrorKind::InvalidConfig,
            "gabor: kernel_size must be odd and >= 3");
  }

  std::size_t bank_size() const { return 2 * scales.size() * orientations.size(); }

  bool operator==(const GaborConfig&) const = default;
};

enum class GaborParity { Even, Odd };

struct GaborKernelInfo {
  std::size_t scale_index;
  std::size_t orientation_index;
  GaborParity parity;
};

/// Even/odd kernel pairs per (scale, orientation). Kernel order is
/// scale-major, then orientation, then even before odd.
struct GaborBank {
  std::vector<Matrix> kernels;
  GaborConfig config;

  std::size_t size() const noexcept { return kernels.size(); }

  GaborKernelInfo info(std::size_t k) const {
    const std::size_t pair = k / 2;
    return {pair / config.orientations.size(), pair % config.orientations.size(),
            k % 2 == 0 ? GaborParity::Even : GaborParity::Odd};
  }
};

namespace detail {

inline double gabor_envelope(double k2, double sigma, double x, double y) {
  return (k2 / (sigma * sigma)) * std::exp(-k2 * (x * x + y * y) / (2.0 * sigma * sigma));
}

}  // namespace detail

/// Lattice DC term for the even kernel: the value κ that makes the sampled
/// kernel envelope·(cos − κ) sum to zero. Tends to exp(−σ²/2) as the lattice
/// grows.
inline double gabor_dc_term(double frequency, double orientation, double sigma,
                            std::size_t kernel_size) {
  const auto half = static_cast<std::ptrdiff_t>(kernel_size / 2);
  const double k2 = frequency * frequency;
  const double kx = frequency * std::cos(orientation);
  const double ky = frequency * std::sin(orientation);
  double num = 0.0;
  double den = 0.0;
  for (std::ptrdiff_t yi = -half; yi <= half; ++yi)
    for (std::ptrdiff_t xi = -half; xi <= half; ++xi) {
      const auto x = static_cast<double>(xi);
      const auto y = static_cast<double>(yi);
      const double env = detail::gabor_envelope(k2, sigma, x, y);
      num += env * std::cos(kx * x + ky * y);
      den += env;
    }
  return num / den;
}

/// Builds the bank. Kernel (row, col) = (y + h, x + h) for lattice offsets
/// x, y in [−h, h].
inline GaborBank make_bank(const GaborConfig& config) {
  config.validate();
  GaborBank bank;
  bank.config = config;
  const std::size_t size = config.kernel_size;
  const auto half = static_cast<std::ptrdiff_t>(size / 2);
  const double sigma = config.sigma;
  for (double frequency : config.scales) {
    for (double theta : config.orientations) {
      const double k2 = frequency * frequency;
      const double kx = frequency * std::cos(theta);
      const double ky = frequency * std::sin(theta);
      const double dc = gabor_dc_term(frequency, theta, sigma, size);
      Matrix even(size, size);
      Matrix odd(size, size);
      for (std::ptrdiff_t yi = -half; yi <= half; ++yi)
        for (std::ptrdiff_t xi = -half; xi <= half; ++xi) {
          const auto x = static_cast<double>(xi);
          const auto y = static_cast<double>(yi);
          const double env = detail::gabor_envelope(k2, sigma, x, y);
          const double phase = kx * x + ky * y;
          const auto r = static_cast<std::size_t>(yi + half);
          const auto c = static_cast<std::size_t>(xi + half);
          even(r, c) = env * (std::cos(phase) - dc);
          odd(r, c) = env * std::sin(phase);
        }
      bank.kernels.push_back(std::move(even));
      bank.kernels.push_back(std::move(odd));
    }
  }
  return bank;
}

/// Responses of one frame to every kernel, in bank order.
inline std::vector<Matrix> apply_bank(const Matrix& frame, const GaborBank& bank) {
  const std::size_t ks = bank.config.kernel_size;
  if (!(frame.rows() > ks && frame.cols() > ks))
    fail(ErrorKind::FrameTooSmall, "frame " + std::to_string(frame.rows()) + "x" +
                                       std::to_string(frame.cols()) + " not larger than kernel " +
                                       std::to_string(ks));
  std::vector<Matrix> out;
  out.reserve(bank.size());
  for (const Matrix& kernel : bank.kernels) out.push_back(conv2_same(frame, kernel));
  return out;
}

/// p×f grid of responses; entry (k, r) is kernel k applied to frame r.
inline Grid2<Matrix> represent_sequence(std::span<const Matrix> frames, const GaborBank& bank) {
  require(!frames.empty(), ErrorKind::TooFewFrames, "empty sequence");
  for (const Matrix& f : frames)
    require(f.rows() == frames[0].rows() && f.cols() == frames[0].cols(),
            ErrorKind::HeterogeneousFrameSizes, "frames differ in size");
  Grid2<Matrix> grid(bank.size(), frames.size());
  for (std::size_t r = 0; r < frames.size(); ++r) {
    auto responses = apply_bank(frames[r], bank);
    for (std::size_t k = 0; k < responses.size(); ++k) grid(k, r) = std::move(responses[k]);
  }
  return grid;
}

}  // namespace fer

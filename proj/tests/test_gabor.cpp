#include <gtest/gtest.h>

#include <numbers>

#include "test_util.hpp"

using fer::Matrix;
using std::numbers::pi;

namespace {

fer::GaborConfig single(double freq, double theta, std::size_t size, double sigma = pi) {
  fer::GaborConfig c;
  c.scales = {freq};
  c.orientations = {theta};
  c.kernel_size = size;
  c.sigma = sigma;
  return c;
}

}  // namespace

TEST(GaborBank, DefaultBankHasSixteenKernels) {
  const auto bank = fer::make_bank(fer::GaborConfig{});
  EXPECT_EQ(bank.size(), 16u);
  EXPECT_EQ(bank.config.bank_size(), 16u);
  for (const auto& k : bank.kernels) {
    EXPECT_EQ(k.rows(), 3u);
    EXPECT_EQ(k.cols(), 3u);
  }
  const auto info = bank.info(5);
  EXPECT_EQ(info.scale_index, 0u);
  EXPECT_EQ(info.orientation_index, 2u);
  EXPECT_EQ(info.parity, fer::GaborParity::Odd);
}

TEST(GaborBank, OddCenterZeroEvenMeanZero) {
  for (std::size_t size : {3u, 5u, 9u, 15u}) {
    fer::GaborConfig c;
    c.kernel_size = size;
    c.scales = {pi / 2, pi / 8, 1.0};
    const auto bank = fer::make_bank(c);
    for (std::size_t k = 0; k < bank.size(); ++k) {
      const Matrix& g = bank.kernels[k];
      if (bank.info(k).parity == fer::GaborParity::Odd) {
        EXPECT_EQ(g(size / 2, size / 2), 0.0);
      } else {
        double mean = 0.0;
        for (double v : g.values()) mean += v;
        EXPECT_LT(std::abs(mean / static_cast<double>(g.size())), 1e-6);
      }
    }
  }
}

TEST(GaborBank, PointwiseClosedForm) {
  const double sigma = pi, f = pi / 2, theta = 0.0;
  const auto bank = fer::make_bank(single(f, theta, 9, sigma));
  // Independent DC term: the constant that zeroes the sampled even kernel.
  const double k2 = f * f;
  double num = 0.0, den = 0.0;
  for (int y = -4; y <= 4; ++y)
    for (int x = -4; x <= 4; ++x) {
      const double env =
          k2 / (sigma * sigma) * std::exp(-k2 * (x * x + y * y) / (2 * sigma * sigma));
      num += env * std::cos(f * x);
      den += env;
    }
  const double kappa = num / den;
  for (int y = -4; y <= 4; ++y)
    for (int x = -4; x <= 4; ++x) {
      const double env =
          k2 / (sigma * sigma) * std::exp(-k2 * (x * x + y * y) / (2 * sigma * sigma));
      const auto r = static_cast<std::size_t>(y + 4), c = static_cast<std::size_t>(x + 4);
      EXPECT_NEAR(bank.kernels[0](r, c), env * (std::cos(f * x) - kappa), 1e-12);
      EXPECT_NEAR(bank.kernels[1](r, c), env * std::sin(f * x), 1e-12);
    }
}

TEST(GaborBank, LatticeDcTendsToContinuousValue) {
  const double sigma = pi, f = pi / 2;
  EXPECT_NEAR(fer::gabor_dc_term(f, 0.3, sigma, 41), std::exp(-sigma * sigma / 2), 1e-9);
}

TEST(GaborBank, RotationByPiNegatesOddKeepsEven) {
  for (double theta : {0.0, pi / 4, 1.1}) {
    const auto a = fer::make_bank(single(pi / 2, theta, 7));
    const auto b = fer::make_bank(single(pi / 2, theta + pi, 7));
    EXPECT_LT(testutil::max_abs_diff(a.kernels[0], b.kernels[0]), 1e-12);
    EXPECT_LT(testutil::max_abs_diff(a.kernels[1], b.kernels[1] * -1.0), 1e-12);
  }
}

TEST(GaborBank, Deterministic) {
  fer::GaborConfig c;
  c.kernel_size = 7;
  EXPECT_EQ(fer::make_bank(c).kernels, fer::make_bank(c).kernels);
}

TEST(GaborBank, InvalidConfig) {
  fer::GaborConfig c;
  c.kernel_size = 4;
  EXPECT_THROW(fer::make_bank(c), fer::Error);
  c = {};
  c.scales.clear();
  EXPECT_THROW(fer::make_bank(c), fer::Error);
  c = {};
  c.sigma = 0.0;
  EXPECT_THROW(fer::make_bank(c), fer::Error);
}

TEST(ApplyBank, ConstantFrameOddResponsesVanishInInterior) {
  fer::GaborConfig c;
  c.kernel_size = 5;
  const auto bank = fer::make_bank(c);
  const Matrix frame(20, 20, 0.7);
  const auto out = fer::apply_bank(frame, bank);
  for (std::size_t k = 1; k < out.size(); k += 2)
    for (std::size_t r = 2; r < 18; ++r)
      for (std::size_t col = 2; col < 18; ++col) EXPECT_NEAR(out[k](r, col), 0.0, 1e-8);
}

TEST(ApplyBank, ImpulseGivesFlippedKernels) {
  const auto bank = fer::make_bank(fer::GaborConfig{});
  Matrix frame(9, 9);
  frame(4, 4) = 1.0;
  const auto out = fer::apply_bank(frame, bank);
  for (std::size_t k = 0; k < bank.size(); ++k)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        EXPECT_DOUBLE_EQ(out[k](3 + i, 3 + j), bank.kernels[k](i, j));
}

TEST(ApplyBank, SpotChecksAgainstNaive) {
  std::mt19937_64 rng(7);
  const auto bank = fer::make_bank(fer::GaborConfig{});
  const Matrix frame = testutil::random_matrix(rng, 32, 32);
  const auto out = fer::apply_bank(frame, bank);
  ASSERT_EQ(out.size(), 16u);
  std::uniform_int_distribution<std::size_t> pix(0, 31);
  for (std::size_t k = 0; k < 16; ++k) {
    EXPECT_EQ(out[k].rows(), 32u);
    const Matrix naive = testutil::naive_conv(frame, bank.kernels[k]);
    for (int s = 0; s < 3; ++s) {
      const std::size_t r = pix(rng), c = pix(rng);
      EXPECT_NEAR(out[k](r, c), naive(r, c), 1e-12);
    }
  }
}

TEST(ApplyBank, TranslationEquivariantAwayFromBorders) {
  fer::GaborConfig c;
  c.kernel_size = 5;
  const auto bank = fer::make_bank(c);
  std::mt19937_64 rng(8);
  const Matrix patch = testutil::random_matrix(rng, 6, 6);
  Matrix a(30, 30), b(30, 30);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      a(8 + i, 8 + j) = patch(i, j);
      b(13 + i, 11 + j) = patch(i, j);
    }
  const auto ra = fer::apply_bank(a, bank), rb = fer::apply_bank(b, bank);
  for (std::size_t k = 0; k < bank.size(); ++k)
    for (std::size_t r = 4; r < 20; ++r)
      for (std::size_t col = 4; col < 20; ++col) EXPECT_EQ(ra[k](r, col), rb[k](r + 5, col + 3));
}

TEST(ApplyBank, FrameTooSmall) {
  try {
    fer::apply_bank(Matrix(3, 10), fer::make_bank(fer::GaborConfig{}));
    FAIL();
  } catch (const fer::Error& e) {
    EXPECT_EQ(e.kind(), fer::ErrorKind::FrameTooSmall);
  }
}

TEST(RepresentSequence, GridShapeAndOrder) {
  std::mt19937_64 rng(9);
  const auto bank = fer::make_bank(fer::GaborConfig{});
  std::vector<Matrix> frames;
  for (int i = 0; i < 5; ++i) frames.push_back(testutil::random_matrix(rng, 12, 16));
  frames[2] = frames[0];
  const auto grid = fer::represent_sequence(frames, bank);
  EXPECT_EQ(grid.p(), 16u);
  EXPECT_EQ(grid.f(), 5u);
  EXPECT_EQ(grid.size(), 80u);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(grid(k, 0), grid(k, 2));
  const auto single_frame = fer::represent_sequence(std::span(frames).first(1), bank);
  const auto direct = fer::apply_bank(frames[0], bank);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(single_frame(k, 0), direct[k]);
}

TEST(RepresentSequence, HeterogeneousSizes) {
  std::vector<Matrix> frames{Matrix(10, 10), Matrix(10, 11)};
  try {
    fer::represent_sequence(frames, fer::make_bank(fer::GaborConfig{}));
    FAIL();
  } catch (const fer::Error& e) {
    EXPECT_EQ(e.kind(), fer::ErrorKind::HeterogeneousFrameSizes);
  }
}

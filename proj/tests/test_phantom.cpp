#include "oracles.hpp"
#include "spectrec/error.hpp"
#include "spectrec/metrics.hpp"
#include "spectrec/phantom.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace spectrec;

TEST(AbundanceMaps, SumToOneAndNonnegative) {
  const Matrix a = make_abundance_maps(30, 20, 4, 3);
  ASSERT_EQ(a.rows(), 4);
  ASSERT_EQ(a.cols(), 600);
  EXPECT_GE(a.minCoeff(), 0.0);
  EXPECT_LT((a.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(AbundanceMaps, SingleBlobGeometry) {
  const Index h = 60, w = 60;
  const Matrix a = make_abundance_maps(h, w, 2, 17, 1);
  // The blob peak: pixel where component 2 dominates most.
  Index peak = 0;
  a.row(1).maxCoeff(&peak);
  EXPECT_GT(a(1, peak), 0.5);
  // Far from the blob the background takes (almost) everything.
  const Index py = peak / w, px = peak % w;
  Index far = 0;
  double best = -1.0;
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      const double d = std::hypot(static_cast<double>(y - py), static_cast<double>(x - px));
      if (d > best) {
        best = d;
        far = y * w + x;
      }
    }
  }
  EXPECT_NEAR(a(0, far), 1.0, 1e-3);
  EXPECT_NEAR(a(1, far), 0.0, 1e-3);
}

TEST(AbundanceMaps, DeterministicAndValidated) {
  EXPECT_EQ(make_abundance_maps(10, 10, 3, 5), make_abundance_maps(10, 10, 3, 5));
  EXPECT_NE(make_abundance_maps(10, 10, 3, 5), make_abundance_maps(10, 10, 3, 6));
  EXPECT_THROW(make_abundance_maps(10, 10, 1, 5), InvalidArgument);
  EXPECT_THROW(make_abundance_maps(1, 2, 3, 5), InvalidArgument);
}

TEST(Endmembers, NonnegativeAndSeparated) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix m = make_endmembers(200, 4, seed);
    EXPECT_GE(m.minCoeff(), 0.0);
    for (Index i = 0; i < 4; ++i) {
      for (Index j = i + 1; j < 4; ++j) EXPECT_GE(spectral_angle(m.col(i), m.col(j)), 0.05);
    }
  }
}

TEST(Endmembers, FullSizeBandCount) {
  const Matrix m = make_endmembers(1337, 4, 1);
  EXPECT_EQ(m.rows(), 1337);
  EXPECT_EQ(m.cols(), 4);
  EXPECT_GE(m.minCoeff(), 0.0);
  EXPECT_THROW(make_endmembers(4, 4, 1), InvalidArgument);
}

TEST(Noise, InfiniteSnrIsNoiseFree) {
  std::mt19937_64 rng(1);
  const SpectrumImage x(4, 4, oracle::random_matrix(3, 16, rng));
  const NoisyImage out = add_noise(x, std::numeric_limits<double>::infinity(), 9);
  EXPECT_EQ(out.image.data(), x.data());
  EXPECT_EQ(out.sigma2, 0.0);
}

TEST(Noise, VarianceMatchesDefinition) {
  std::mt19937_64 rng(2);
  const SpectrumImage x(5, 5, oracle::random_matrix(4, 25, rng));
  const NoisyImage out = add_noise(x, 19.0, 3);
  const double power = x.data().squaredNorm() / 100.0;
  EXPECT_NEAR(10.0 * std::log10(power / out.sigma2), 19.0, 1e-12);
  EXPECT_EQ(add_noise(x, 19.0, 3).image.data(), out.image.data());
  EXPECT_THROW(add_noise(x, std::numeric_limits<double>::quiet_NaN(), 3), InvalidArgument);
}

TEST(Noise, EmpiricalSnrWithinTolerance) {
  const Matrix m = make_endmembers(50, 3, 4);
  const Matrix a = make_abundance_maps(100, 100, 3, 5);
  const SpectrumImage truth(100, 100, m * a);
  for (double snr : {19.0, 25.0}) {
    const NoisyImage noisy = add_noise(truth, snr, 6);
    const double signal = truth.data().squaredNorm();
    const double noise = (noisy.image.data() - truth.data()).squaredNorm();
    EXPECT_NEAR(10.0 * std::log10(signal / noise), snr, 0.2);
  }
}

TEST(Phantom, FactorsReproduceTruth) {
  PhantomConfig config;
  config.height = 12;
  config.width = 9;
  config.bands = 20;
  config.components = 3;
  config.seed = 8;
  const Phantom p = make_phantom(config);
  EXPECT_EQ(p.truth.data(), p.endmembers * p.abundances);
  EXPECT_LT((p.abundances.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  Eigen::FullPivLU<Matrix> lu(p.truth.data());
  EXPECT_LE(lu.rank(), 3);
  EXPECT_EQ(make_phantom(config).noisy.data(), p.noisy.data());
  EXPECT_GT(p.sigma2, 0.0);
}

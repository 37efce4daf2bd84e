#include "oracles.hpp"
#include "spectrec/error.hpp"
#include "spectrec/phantom.hpp"
#include "spectrec/sss.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace spectrec;

namespace {

SubspaceModel manual_model(Index nb, Index dim, double sigma2, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SubspaceModel model;
  model.basis = Eigen::HouseholderQR<Matrix>(oracle::random_matrix(nb, nb, rng)).householderQ();
  model.dim = dim;
  model.sigma2_hat = sigma2;
  model.weights = Vector::LinSpaced(dim, 0.5, 2.0);
  return model;
}

}  // namespace

TEST(Stein, HandDerivedCase) {
  const std::vector<double> eigs{4.0, 1.0};
  const Vector out = stein_correct(eigs, 10);
  EXPECT_NEAR(out(0), 4.0 / (1.0 + 0.1 * 5.0 / 3.0), 1e-12);
  EXPECT_NEAR(out(0), 3.4285714285714286, 1e-9);
  EXPECT_NEAR(out(1), 1.2, 1e-9);
}

TEST(Stein, LargeSampleLimitIsIdentity) {
  const std::vector<double> eigs{9.0, 4.0, 1.5, 0.2};
  const Vector out = stein_correct(eigs, 1000000000000);
  for (std::size_t b = 0; b < eigs.size(); ++b) EXPECT_NEAR(out(static_cast<Index>(b)), eigs[b], 1e-9);
}

TEST(Stein, EqualEigenvaluesFormOneBlock) {
  const std::vector<double> flat{2.5, 2.5, 2.5};
  const Vector out = stein_correct(flat, 7);
  for (Index b = 0; b < 3; ++b) EXPECT_EQ(out(b), 2.5);

  // Members of the tied pair skip each other but both count for the third value.
  const Vector mixed = stein_correct(std::vector<double>{4.0, 4.0, 1.0}, 10);
  EXPECT_NEAR(mixed(0), 4.0 / (1.0 + 0.1 * 5.0 / 3.0), 1e-12);
  EXPECT_NEAR(mixed(1), mixed(0), 0.0);
  EXPECT_NEAR(mixed(2), 1.0 / (1.0 - 2.0 * 0.1 * 5.0 / 3.0), 1e-12);
}

TEST(Stein, RejectsUnsortedOrNegative) {
  EXPECT_THROW(stein_correct(std::vector<double>{1.0, 2.0}, 5), InvalidArgument);
  EXPECT_THROW(stein_correct(std::vector<double>{1.0, -0.5}, 5), InvalidArgument);
}

TEST(Isotonic, FeasibleInputUnchanged) {
  const auto blocks = isotonic_decreasing(std::vector<double>{5.0, 3.0, 3.0, 1.0});
  EXPECT_EQ(expand_blocks(blocks), (Vector(4) << 5.0, 3.0, 3.0, 1.0).finished());
}

TEST(Isotonic, PoolsViolators) {
  const auto blocks = isotonic_decreasing(std::vector<double>{3.0, 5.0, 2.0});
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks[0].value, 4.0);
  EXPECT_EQ(blocks[0].count, 2);
  EXPECT_EQ(expand_blocks(blocks), (Vector(3) << 4.0, 4.0, 2.0).finished());
}

TEST(Isotonic, ClampsNegatives) {
  EXPECT_EQ(expand_blocks(isotonic_decreasing(std::vector<double>{1.0, -2.0})),
            (Vector(2) << 1.0, 0.0).finished());
}

TEST(Isotonic, WeightedPooling) {
  const auto blocks = isotonic_decreasing(std::vector<PooledBlock>{{3.0, 1.0, 1}, {5.0, 3.0, 2}});
  ASSERT_EQ(blocks.size(), 1u);
  EXPECT_DOUBLE_EQ(blocks[0].value, 4.5);
  EXPECT_DOUBLE_EQ(blocks[0].weight, 4.0);
  EXPECT_EQ(blocks[0].count, 3);
}

TEST(Isotonic, MatchesGridBruteForce) {
  int checked = 0;
  for (int length = 1; length <= 4; ++length) {
    std::vector<int> digits(static_cast<std::size_t>(length), -3);
    while (true) {
      const std::vector<double> x(digits.begin(), digits.end());
      const Vector fit = expand_blocks(isotonic_decreasing(x));
      const std::vector<double> reference = oracle::grid_isotonic(x);
      for (int i = 0; i < length; ++i) {
        ASSERT_NEAR(fit(i), reference[static_cast<std::size_t>(i)], 1e-12);
      }
      ++checked;
      int pos = 0;
      while (pos < length && digits[static_cast<std::size_t>(pos)] == 5) {
        digits[static_cast<std::size_t>(pos)] = -3;
        ++pos;
      }
      if (pos == length) break;
      ++digits[static_cast<std::size_t>(pos)];
    }
  }
  EXPECT_EQ(checked, 9 + 81 + 729 + 6561);
}

TEST(EstimateSubspace, SingleDirectionPlusNoise) {
  const double v = 0.5;
  const SubspaceModel model = estimate_subspace(oracle::low_rank_plus_noise(10, 5000, 1, v, 1));
  EXPECT_EQ(model.dim, 1);
  EXPECT_NEAR(model.sigma2_hat, v, 0.15 * v);
}

TEST(EstimateSubspace, RankThreeAcrossSeeds) {
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SubspaceModel model = estimate_subspace(oracle::low_rank_plus_noise(20, 400, 3, 1.0, seed));
    if (model.dim == 3 && std::abs(model.sigma2_hat - 1.0) < 0.15) ++successes;
  }
  EXPECT_GE(successes, 9);
}

TEST(EstimateSubspace, ModelInvariants) {
  const SubspaceModel model = estimate_subspace(oracle::low_rank_plus_noise(12, 300, 2, 0.1, 3));
  const Index nb = 12;
  EXPECT_LT((model.basis.transpose() * model.basis - Matrix::Identity(nb, nb)).cwiseAbs().maxCoeff(), 1e-10);
  for (Index b = 1; b < nb; ++b) {
    EXPECT_GE(model.raw_eigs(b - 1), model.raw_eigs(b));
    EXPECT_GE(model.corrected_eigs(b - 1), model.corrected_eigs(b));
  }
  EXPECT_GE(model.corrected_eigs.minCoeff(), 0.0);
  EXPECT_EQ(model.sigma2_hat, model.corrected_eigs.minCoeff());
  ASSERT_EQ(model.weights.size(), model.dim);
  for (Index b = 0; b < model.dim; ++b) {
    EXPECT_GT(model.corrected_eigs(b), model.sigma2_hat);
    EXPECT_DOUBLE_EQ(model.weights(b), model.sigma2_hat / (model.corrected_eigs(b) - model.sigma2_hat));
    EXPECT_GT(model.weights(b), 0.0);
    if (b > 0) EXPECT_GE(model.weights(b), model.weights(b - 1));
  }
  for (Index b = model.dim; b < nb; ++b) EXPECT_EQ(model.corrected_eigs(b), model.sigma2_hat);
}

TEST(EstimateSubspace, PureNoiseHasNoSignal) {
  std::mt19937_64 rng(4);
  try {
    estimate_subspace(oracle::random_matrix(10, 2000, rng));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no signal subspace detected"), std::string::npos);
  }
}

TEST(EstimateSubspace, ZeroDataIsDegenerate) {
  try {
    estimate_subspace(Matrix::Zero(4, 10));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate covariance"), std::string::npos);
  }
  EXPECT_THROW(estimate_subspace(Matrix::Ones(1, 10)), InvalidArgument);
  EXPECT_THROW(estimate_subspace(Matrix::Ones(4, 1)), InvalidArgument);
}

TEST(BallProjection, ClosedFormCases) {
  Vector p = Vector::Zero(4);
  p(0) = 2.0;
  const Vector out = project_onto_ball(p, Vector::Zero(4), 1.0);
  EXPECT_EQ(out, (Vector(4) << 1.0, 0.0, 0.0, 0.0).finished());
  Vector inside = Vector::Constant(4, 0.1);
  EXPECT_EQ(project_onto_ball(inside, Vector::Zero(4), 1.0), inside);
  EXPECT_EQ(project_onto_ball(p, Vector::Ones(4), 0.0), Vector::Ones(4));
}

TEST(SssModel, GradientMatchesFiniteDifferences) {
  const ImageShape shape{3, 4, 4};
  const SamplingMask mask = make_random_mask(16, 6, 2);
  std::mt19937_64 rng(5);
  const Matrix y = oracle::random_matrix(3, 6, rng);
  const SssModel model(y, mask, shape, manual_model(3, 2, 0.1, 6), SssParams{0.8});
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix s = oracle::random_matrix(2, 16, rng);
    const Matrix fd = oracle::finite_difference_gradient(
        [&](const Matrix& v) { return model.smooth_objective(v); }, s);
    EXPECT_LT(oracle::relative_error(model.smooth_gradient(s), fd), 1e-5);
  }
}

TEST(SssModel, LipschitzBoundHolds) {
  const ImageShape shape{3, 4, 4};
  const SamplingMask mask = make_random_mask(16, 6, 3);
  std::mt19937_64 rng(7);
  const Matrix y = oracle::random_matrix(3, 6, rng);
  const SssModel model(y, mask, shape, manual_model(3, 2, 0.1, 8), SssParams{1.5});
  EXPECT_DOUBLE_EQ(model.lipschitz_bound(), 8.0 + 1.5 * 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s1 = oracle::random_matrix(2, 16, rng);
    const Matrix s2 = oracle::random_matrix(2, 16, rng);
    EXPECT_LE((model.smooth_gradient(s1) - model.smooth_gradient(s2)).norm(),
              model.lipschitz_bound() * (s1 - s2).norm());
  }
}

TEST(SssModel, ProjectionSolvesTheJointProblem) {
  // Three measured pixels; the projection must satisfy the variational inequality
  // <z - P(s), s - P(s)> <= 0 for every feasible z.
  const ImageShape shape{4, 1, 3};
  const SamplingMask mask = SamplingMask::full(3);
  std::mt19937_64 rng(9);
  const Matrix y = oracle::random_matrix(4, 3, rng);
  const SubspaceModel sub = manual_model(4, 3, 0.2, 10);
  const SssModel model(y, mask, shape, sub, SssParams{});
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = oracle::random_matrix(3, 3, rng, 2.0);
    const Matrix projected = model.project(s);
    for (Index n = 0; n < 3; ++n) {
      EXPECT_LE((projected.col(n) - model.centers().col(n)).norm(), model.radius() * (1.0 + 1e-12));
    }
    for (int k = 0; k < 200; ++k) {
      Matrix z(3, 3);
      for (Index n = 0; n < 3; ++n) {
        Vector dir = oracle::random_matrix(3, 1, rng);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        z.col(n) = model.centers().col(n) + unit(rng) * model.radius() * dir / dir.norm();
      }
      EXPECT_LE(((z - projected).array() * (s - projected).array()).sum(), 1e-12);
    }
  }
}

TEST(SssReconstruct, ZeroRadiusFullMaskGivesProjectedData) {
  const ImageShape shape{5, 3, 4};
  std::mt19937_64 rng(11);
  const Matrix y = oracle::random_matrix(5, 12, rng);
  SubspaceModel sub = manual_model(5, 2, 0.0, 12);
  const SssReconstruction rec =
      sss_reconstruct(y, SamplingMask::full(12), shape, sub, SssParams{1e-12}, FistaConfig{});
  const Matrix h = sub.signal_basis();
  EXPECT_LT((rec.image.data() - h * (h.transpose() * y)).norm(), 1e-12);
}

TEST(SssReconstruct, FeasibleAndLowRankOnPhantom) {
  PhantomConfig config;
  config.height = 20;
  config.width = 20;
  config.bands = 30;
  config.components = 3;
  config.snr_db = 25.0;
  config.seed = 5;
  const Phantom phantom = make_phantom(config);
  const SamplingMask mask = make_random_mask(400, 80, 6);
  const Matrix y = restrict(phantom.noisy, mask);
  const SubspaceModel sub = estimate_subspace(y);
  const SssReconstruction rec = sss_reconstruct(y, mask, phantom.truth.shape(), sub, SssParams{}, FistaConfig{});

  const Matrix centers = sub.signal_basis().transpose() * y;
  const auto& idx = mask.indices();
  for (Index n = 0; n < mask.ns(); ++n) {
    const double gap = (centers.col(n) - rec.coefficients.col(idx[static_cast<std::size_t>(n)])).squaredNorm();
    EXPECT_LE(gap / static_cast<double>(sub.dim), sub.sigma2_hat + 1e-9);
  }
  const Vector s = Eigen::JacobiSVD<Matrix>(rec.image.data()).singularValues();
  EXPECT_LE((s.array() > 1e-10 * s(0)).count(), sub.dim);
}

TEST(SssErrors, InvalidModels) {
  const ImageShape shape{3, 2, 2};
  const Matrix y = Matrix::Ones(3, 4);
  SubspaceModel empty = manual_model(3, 1, 0.1, 1);
  empty.dim = 0;
  empty.weights.resize(0);
  EXPECT_THROW(SssModel(y, SamplingMask::full(4), shape, empty, SssParams{}), InvalidArgument);
  SubspaceModel bad = manual_model(3, 2, 0.1, 1);
  bad.weights(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(SssModel(y, SamplingMask::full(4), shape, bad, SssParams{}), InvalidArgument);
  EXPECT_THROW(SssModel(y, SamplingMask::full(4), shape, manual_model(3, 2, 0.1, 1), SssParams{0.0}),
               InvalidArgument);
}

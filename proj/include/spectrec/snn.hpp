#pragma once

#include "spectrec/core.hpp"
#include "spectrec/fista.hpp"
#include "spectrec/reconstruction.hpp"

#include <functional>
#include <string>
#include <vector>

namespace spectrec {

/// Weights of the smoothed nuclear-norm reconstruction
///   min_X 1/2 ||Y_I - X_I||_F^2 + lambda/2 ||X D||_F^2 + mu ||X||_*.
struct SnnParams {
  double lambda = 0.0;
  double mu = 0.0;

  void validate() const;
};

/// Smooth part f(X) = 1/2 ||Y_I - X_I||^2 + lambda/2 ||X D||^2 of the S2N objective.
class SnnModel {
 public:
  SnnModel(Matrix measurements, SamplingMask mask, ImageShape shape, double lambda);

  double smooth_objective(const Matrix& x) const;
  // scatter(X_I - Y_I) - lambda X Delta
  Matrix smooth_gradient(const Matrix& x) const;
  double lipschitz_bound() const { return 1.0 + 8.0 * lambda_; }

  // Measured columns copied from Y_I, the rest set to the mean measured spectrum.
  Matrix initial_guess() const;
  // (1 / (Ns Nb)) ||Y_I - X_I||_F^2
  double data_residual(const Matrix& x) const;

  const Matrix& measurements() const { return measurements_; }
  const SamplingMask& mask() const { return mask_; }
  ImageShape shape() const { return shape_; }
  double lambda() const { return lambda_; }

 private:
  Matrix measurements_;
  SamplingMask mask_;
  ImageShape shape_;
  GradientOperator op_;
  double lambda_;
};

double nuclear_norm(const Matrix& m);

/// Singular value soft-thresholding: U diag(max(s - threshold, 0)) V^T.
Matrix nuclear_prox(const Matrix& m, double threshold);

Reconstruction snn_reconstruct(const Matrix& measurements, const SamplingMask& mask,
                               ImageShape shape, SnnParams params, const FistaConfig& config);
// Same, starting FISTA from `x0` (Nb x Np) instead of the mean-spectrum fill.
Reconstruction snn_reconstruct(const Matrix& measurements, const SamplingMask& mask,
                               ImageShape shape, SnnParams params, const FistaConfig& config,
                               const Matrix& x0);

struct SearchEvaluation {
  double value = 0.0;
  // (1 / (Ns Nb)) ||Y_I - X_I||^2 - sigma2_hat
  double signed_residual = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
};

struct TuningConfig {
  double grid_min = 1e-6;
  double grid_max = 1e4;
  int points_per_decade = 7;
  int bisection_steps = 20;
  FistaConfig solve{.max_iters = 2000, .tol = 1e-6, .monitor_every = 0};
  // Called after every inner solve with the search name ("lambda", "mu", "c").
  std::function<void(const std::string&, const SearchEvaluation&)> on_evaluation;

  void validate() const;
  std::vector<double> grid() const;
};

struct SearchTrace {
  std::string name;
  std::vector<SearchEvaluation> evaluations;
  double found = 0.0;
  bool bracketed = false;
};

struct TuningState {
  double lambda_circ = 0.0;
  double mu_circ = 0.0;
  double c_circ = 0.0;
  double lambda_star = 0.0;
  double mu_star = 0.0;
  double sigma2_hat = 0.0;
  // Data residual of the reconstruction at (lambda_star, mu_star).
  double final_residual = 0.0;
  // Set when a search found no sign change and fell back to the grid argmin.
  bool warning = false;
  std::vector<SearchTrace> searches;
};

struct TuningResult {
  SnnParams params;
  TuningState state;
};

/// Three successive 1-D searches on J(lambda, mu) = (residual - sigma2_hat)^2:
/// lambda on J(., 0), mu on J(0, .), then a common scale c on J(c lambda, c mu).
/// Each search brackets the sign change of the signed residual by dichotomy over
/// a log-spaced grid and refines it by bisection in log scale.
TuningResult snn_tune(const Matrix& measurements, const SamplingMask& mask, ImageShape shape,
                      double sigma2_hat, const TuningConfig& config);

}  // namespace spectrec

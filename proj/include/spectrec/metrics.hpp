#pragma once

#include "spectrec/core.hpp"

#include <optional>
#include <vector>

namespace spectrec {

// ||estimate - truth||_F^2 / ||truth||_F^2
double nmse(const Matrix& truth, const Matrix& estimate);

// Angle in [0, pi] between two nonzero spectra.
double spectral_angle(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

struct SpectrumMatch {
  Index truth_column = 0;
  Index estimate_column = 0;
  double angle = 0.0;
};

/// Pairs the columns of two endmember matrices greedily, smallest angle first.
/// The result is ordered by truth column.
std::vector<SpectrumMatch> match_spectra(const Matrix& m_true, const Matrix& m_est);

// Mean spectral angle over the greedy matching.
double asad(const Matrix& m_true, const Matrix& m_est);

struct InversionOptions {
  int max_iters = 500;
  // Stop once ||A_k - A_k-1||_F / ||A_k-1||_F drops below this.
  double tol = 1e-10;
  bool sum_to_one = false;
  bool record_objective = false;
};

struct AbundanceInversion {
  Matrix abundances;
  int iterations = 0;
  // 1/2 ||X - M A||_F^2 before the first and after every iteration.
  std::vector<double> objective_trace;
};

/// Nonnegative least squares min_{A >= 0} ||X - M A||_F^2, one independent
/// problem per pixel, by projected gradient with step 1 / ||M^T M||_2.
AbundanceInversion invert_abundances(const SpectrumImage& image, const Matrix& endmembers,
                                     const InversionOptions& options = {});

struct EvalReport {
  double nmse_image = 0.0;
  std::optional<double> asad;
  std::optional<double> nmse_abundance;
  // Per truth component, the angle to its matched estimate.
  std::vector<double> sad;
};

}  // namespace spectrec

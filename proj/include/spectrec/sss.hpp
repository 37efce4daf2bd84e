#pragma once

#include "spectrec/core.hpp"
#include "spectrec/fista.hpp"
#include "spectrec/reconstruction.hpp"

#include <span>
#include <vector>

namespace spectrec {

/// Stein-corrected sample eigenvalues,
///   d_b / (1 + (1/ns) sum_{j != b} (d_b + d_j) / (d_b - d_j)).
///
/// Input must be non-increasing and nonnegative. Eigenvalues equal within
/// 1e-12 * max(d_b, 1) form one block: the pairwise term is skipped inside a
/// block and other blocks contribute once per member. The output may be
/// non-monotone or negative.
Vector stein_correct(std::span<const double> raw_eigs, Index ns);

// The denominators of stein_correct, one per eigenvalue.
Vector stein_denominators(std::span<const double> raw_eigs, Index ns);

struct PooledBlock {
  double value = 0.0;
  // Weight in the least-squares fit.
  double weight = 1.0;
  // Number of original entries pooled into the block.
  Index count = 1;
};

/// Weighted pool-adjacent-violators fit under a non-increasing constraint,
/// followed by clamping negative block values to zero.
std::vector<PooledBlock> isotonic_decreasing(std::vector<PooledBlock> blocks);
std::vector<PooledBlock> isotonic_decreasing(std::span<const double> values);

// Expands blocks back to one value per original entry.
Vector expand_blocks(const std::vector<PooledBlock>& blocks);

struct SubspaceModel {
  // Orthonormal Nb x Nb basis, columns sorted by decreasing eigenvalue.
  Matrix basis;
  Vector raw_eigs;
  Vector corrected_eigs;
  std::vector<PooledBlock> blocks;
  double sigma2_hat = 0.0;
  Index dim = 0;
  // w_b = sigma2_hat / (d_b - sigma2_hat) for b < dim.
  Vector weights;

  Matrix signal_basis() const { return basis.leftCols(dim); }
};

/// Uncentered PCA of the measured pixels with corrected eigenvalues.
///
/// The sample eigenvalues are corrected with Stein's estimator, isotonized by
/// pooling numerators and Stein denominators (a weighted non-increasing fit),
/// and the trailing blocks that sit inside the noise bulk, (1 + sqrt(Nb/Ns))^2
/// times the mean of everything below, are pooled into a single noise floor.
/// sigma2_hat is that floor and dim the number of eigenvalues above it.
SubspaceModel estimate_subspace(const Matrix& measurements);

struct SssParams {
  double lambda = 1.0;

  void validate() const;
};

// Euclidean projection onto the closed ball B(center, radius).
Vector project_onto_ball(const Vector& point, const Vector& center, double radius);

/// Smooth part and constraint set of the subspace-constrained problem in the
/// R x Np coefficient matrix S:
///   f(S) = 1/(2R) ||S D||^2 + lambda/2 sum_b w_b ||S_b||^2,
///   ||S_I(n) - H_R^T Y_I(n)|| <= sqrt(R) sigma_hat for every measured pixel.
class SssModel {
 public:
  SssModel(const Matrix& measurements, SamplingMask mask, ImageShape shape,
           const SubspaceModel& subspace, SssParams params);

  double smooth_objective(const Matrix& s) const;
  // -(1/R) S Delta + lambda W S
  Matrix smooth_gradient(const Matrix& s) const;
  double lipschitz_bound() const;
  // Column-wise ball projection of the measured pixels.
  Matrix project(const Matrix& s) const;
  Matrix initial_guess() const;

  const Matrix& centers() const { return centers_; }
  double radius() const { return radius_; }
  Index dim() const { return dim_; }
  const SamplingMask& mask() const { return mask_; }

 private:
  SamplingMask mask_;
  ImageShape shape_;
  GradientOperator op_;
  Index dim_;
  Vector weights_;
  double lambda_;
  Matrix centers_;
  double radius_;
};

struct SssReconstruction {
  SpectrumImage image;
  Matrix coefficients;
  SolveReport report;
};

SssReconstruction sss_reconstruct(const Matrix& measurements, const SamplingMask& mask,
                                  ImageShape shape, const SubspaceModel& subspace,
                                  SssParams params, const FistaConfig& config);

}  // namespace spectrec

#include "spectrec/sss.hpp"

#include "spectrec/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spectrec {

namespace {

void require_non_increasing(std::span<const double> eigs) {
  for (std::size_t b = 0; b < eigs.size(); ++b) {
    if (!(eigs[b] >= 0.0) || !std::isfinite(eigs[b])) {
      throw InvalidArgument("eigenvalues must be finite and nonnegative");
    }
    if (b > 0 && eigs[b] > eigs[b - 1]) {
      throw InvalidArgument("eigenvalues must be sorted non-increasing");
    }
  }
}

bool tied(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, 1.0); }

}  // namespace

Vector stein_denominators(std::span<const double> raw_eigs, Index ns) {
  require_non_increasing(raw_eigs);
  if (ns < 1) throw InvalidArgument("Stein correction needs ns >= 1");
  const auto nb = raw_eigs.size();
  Vector denominators(static_cast<Index>(nb));
  for (std::size_t b = 0; b < nb; ++b) {
    double sum = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      if (j == b || tied(raw_eigs[b], raw_eigs[j])) continue;
      sum += (raw_eigs[b] + raw_eigs[j]) / (raw_eigs[b] - raw_eigs[j]);
    }
    denominators(static_cast<Index>(b)) = 1.0 + sum / static_cast<double>(ns);
  }
  return denominators;
}

Vector stein_correct(std::span<const double> raw_eigs, Index ns) {
  const Vector denominators = stein_denominators(raw_eigs, ns);
  Vector corrected(denominators.size());
  for (Index b = 0; b < corrected.size(); ++b) {
    corrected(b) = raw_eigs[static_cast<std::size_t>(b)] / denominators(b);
  }
  return corrected;
}

std::vector<PooledBlock> isotonic_decreasing(std::vector<PooledBlock> blocks) {
  std::vector<PooledBlock> pooled;
  pooled.reserve(blocks.size());
  for (const PooledBlock& block : blocks) {
    if (!std::isfinite(block.value) || !(block.weight > 0.0) || block.count < 1) {
      throw InvalidArgument("isotonic regression needs finite values and positive weights");
    }
    pooled.push_back(block);
    while (pooled.size() > 1 && pooled[pooled.size() - 2].value < pooled.back().value) {
      const PooledBlock last = pooled.back();
      pooled.pop_back();
      PooledBlock& prev = pooled.back();
      const double weight = prev.weight + last.weight;
      prev.value = (prev.value * prev.weight + last.value * last.weight) / weight;
      prev.weight = weight;
      prev.count += last.count;
    }
  }
  for (PooledBlock& block : pooled) block.value = std::max(block.value, 0.0);
  return pooled;
}

std::vector<PooledBlock> isotonic_decreasing(std::span<const double> values) {
  std::vector<PooledBlock> blocks;
  blocks.reserve(values.size());
  for (double v : values) blocks.push_back({v, 1.0, 1});
  return isotonic_decreasing(std::move(blocks));
}

Vector expand_blocks(const std::vector<PooledBlock>& blocks) {
  Index total = 0;
  for (const auto& block : blocks) total += block.count;
  Vector values(total);
  Index pos = 0;
  for (const auto& block : blocks) {
    values.segment(pos, block.count).setConstant(block.value);
    pos += block.count;
  }
  return values;
}

namespace {

// Stein's isotonization: pool numerators and denominators so that every
// block has a positive denominator and the ratios are non-increasing.
std::vector<PooledBlock> stein_isotonic(std::span<const double> raw_eigs, Index ns) {
  const Vector denominators = stein_denominators(raw_eigs, ns);
  struct Pair {
    double numerator;
    double denominator;
    Index count;
  };
  std::vector<Pair> pairs;
  for (std::size_t b = 0; b < raw_eigs.size(); ++b) {
    pairs.push_back({raw_eigs[b], denominators(static_cast<Index>(b)), 1});
    while (pairs.size() > 1 && pairs.back().denominator <= 0.0) {
      const Pair last = pairs.back();
      pairs.pop_back();
      pairs.back().numerator += last.numerator;
      pairs.back().denominator += last.denominator;
      pairs.back().count += last.count;
    }
  }
  // The denominators sum to the eigenvalue count, so only a lone head can be left.
  if (pairs.front().denominator <= 0.0) throw NumericalError("Stein isotonization failed");

  std::vector<PooledBlock> blocks;
  blocks.reserve(pairs.size());
  for (const Pair& p : pairs) {
    blocks.push_back({p.numerator / p.denominator, p.denominator, p.count});
  }
  return isotonic_decreasing(std::move(blocks));
}

// Pools the trailing blocks that are indistinguishable from noise.
std::vector<PooledBlock> pool_noise_floor(std::vector<PooledBlock> blocks, double bulk_edge) {
  auto pooled_tail = [&blocks](std::size_t from) {
    PooledBlock tail{0.0, 0.0, 0};
    for (std::size_t j = from; j < blocks.size(); ++j) {
      tail.value += blocks[j].value * blocks[j].weight;
      tail.weight += blocks[j].weight;
      tail.count += blocks[j].count;
    }
    tail.value /= tail.weight;
    return tail;
  };
  std::size_t signal = 0;
  while (signal + 1 < blocks.size() &&
         blocks[signal].value > bulk_edge * pooled_tail(signal + 1).value) {
    ++signal;
  }
  const PooledBlock floor = pooled_tail(signal);
  blocks.resize(signal);
  blocks.push_back(floor);
  return blocks;
}

}  // namespace

SubspaceModel estimate_subspace(const Matrix& measurements) {
  const Index nb = measurements.rows();
  const Index ns = measurements.cols();
  if (nb < 2 || ns < 2) throw InvalidArgument("subspace estimation needs Nb >= 2 and Ns >= 2");
  if (!measurements.allFinite()) throw NumericalError("non-finite measurements");
  if (measurements.squaredNorm() == 0.0) throw DataError("degenerate covariance");

  Matrix covariance = Matrix::Zero(nb, nb);
  covariance.selfadjointView<Eigen::Lower>().rankUpdate(measurements, 1.0 / static_cast<double>(ns));
  Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance.selfadjointView<Eigen::Lower>());
  if (solver.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");

  SubspaceModel model;
  model.basis = solver.eigenvectors().rowwise().reverse();
  model.raw_eigs = solver.eigenvalues().reverse().cwiseMax(0.0);

  const std::span<const double> raw(model.raw_eigs.data(), static_cast<std::size_t>(nb));
  const double bulk_edge = std::pow(1.0 + std::sqrt(static_cast<double>(nb) / static_cast<double>(ns)), 2);
  model.blocks = pool_noise_floor(stein_isotonic(raw, ns), bulk_edge);
  model.corrected_eigs = expand_blocks(model.blocks);
  model.sigma2_hat = model.blocks.back().value;
  if (!(model.sigma2_hat > 0.0)) throw DataError("degenerate covariance: zero noise floor");

  model.dim = nb - model.blocks.back().count;
  if (model.dim == 0) throw DataError("no signal subspace detected");

  model.weights.resize(model.dim);
  for (Index b = 0; b < model.dim; ++b) {
    model.weights(b) = model.sigma2_hat / (model.corrected_eigs(b) - model.sigma2_hat);
  }
  return model;
}

void SssParams::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("3S lambda must be finite and > 0");
  }
}

Vector project_onto_ball(const Vector& point, const Vector& center, double radius) {
  const Vector offset = point - center;
  const double distance = offset.norm();
  if (distance <= radius) return point;
  return center + (radius / distance) * offset;
}

SssModel::SssModel(const Matrix& measurements, SamplingMask mask, ImageShape shape,
                   const SubspaceModel& subspace, SssParams params)
    : mask_(std::move(mask)),
      shape_(shape),
      op_(shape.height, shape.width),
      dim_(subspace.dim),
      weights_(subspace.weights),
      lambda_(params.lambda) {
  params.validate();
  if (dim_ < 1) throw InvalidArgument("3S needs a signal subspace of dimension >= 1");
  if (subspace.basis.rows() != shape.bands || subspace.basis.cols() < dim_ ||
      weights_.size() != dim_) {
    throw InvalidArgument("subspace model does not match the image bands");
  }
  if (!weights_.allFinite() || (weights_.array() < 0.0).any()) {
    throw InvalidArgument("3S weights must be finite and nonnegative");
  }
  if (!(subspace.sigma2_hat >= 0.0) || !std::isfinite(subspace.sigma2_hat)) {
    throw InvalidArgument("3S needs a finite noise variance");
  }
  if (mask_.np() != shape.pixels()) {
    throw InvalidArgument("incompatible mask: mask covers " + std::to_string(mask_.np()) +
                          " pixels, image has " + std::to_string(shape.pixels()));
  }
  if (measurements.rows() != shape.bands || measurements.cols() != mask_.ns()) {
    throw InvalidArgument("measurements must be bands x Ns");
  }
  if (!measurements.allFinite()) throw NumericalError("non-finite measurements");
  centers_ = subspace.signal_basis().transpose() * measurements;
  radius_ = std::sqrt(static_cast<double>(dim_) * subspace.sigma2_hat);
}

double SssModel::smooth_objective(const Matrix& s) const {
  const double spatial = op_.smoothness_energy(s) / (2.0 * static_cast<double>(dim_));
  const double spectral = 0.5 * lambda_ * (weights_.asDiagonal() * s.rowwise().squaredNorm()).sum();
  return spatial + spectral;
}

Matrix SssModel::smooth_gradient(const Matrix& s) const {
  Matrix grad = op_.laplacian(s) * (-1.0 / static_cast<double>(dim_));
  grad.noalias() += lambda_ * (weights_.asDiagonal() * s);
  return grad;
}

double SssModel::lipschitz_bound() const { return 8.0 + lambda_ * weights_.maxCoeff(); }

Matrix SssModel::project(const Matrix& s) const {
  Matrix out = s;
  const auto& idx = mask_.indices();
#pragma omp parallel for schedule(static)
  for (Index n = 0; n < mask_.ns(); ++n) {
    const Index p = idx[static_cast<std::size_t>(n)];
    out.col(p) = project_onto_ball(s.col(p), centers_.col(n), radius_);
  }
  return out;
}

Matrix SssModel::initial_guess() const {
  const Vector mean = centers_.rowwise().mean();
  Matrix s = mean.replicate(1, shape_.pixels());
  const auto& idx = mask_.indices();
  for (Index n = 0; n < mask_.ns(); ++n) s.col(idx[static_cast<std::size_t>(n)]) = centers_.col(n);
  return s;
}

SssReconstruction sss_reconstruct(const Matrix& measurements, const SamplingMask& mask,
                                  ImageShape shape, const SubspaceModel& subspace,
                                  SssParams params, const FistaConfig& config) {
  const SssModel model(measurements, mask, shape, subspace, params);

  FistaProblem problem;
  problem.lipschitz_bound = model.lipschitz_bound();
  problem.gradient = [&model](const Matrix& s) { return model.smooth_gradient(s); };
  problem.prox = [&model](const Matrix& z, double) { return model.project(z); };
  problem.objective = [&model](const Matrix& s) { return model.smooth_objective(s); };

  FistaResult solved = fista_solve(problem, model.initial_guess(), config);
  Matrix image = subspace.signal_basis() * solved.solution;
  return {SpectrumImage(shape, std::move(image)), std::move(solved.solution),
          std::move(solved.report)};
}

}  // namespace spectrec

#include "spectrec/core.hpp"

#include "spectrec/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace spectrec {

SpectrumImage::SpectrumImage(Index height, Index width, Matrix data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height_ < 1 || width_ < 1 || data_.rows() < 1) {
    throw InvalidArgument("spectrum-image needs bands, height and width >= 1");
  }
  if (data_.cols() != height_ * width_) {
    throw InvalidArgument("spectrum-image has " + std::to_string(data_.cols()) +
                          " pixel columns, expected " +
                          std::to_string(height_ * width_));
  }
}

SpectrumImage::SpectrumImage(ImageShape shape, Matrix data)
    : SpectrumImage(shape.height, shape.width, std::move(data)) {
  if (data_.rows() != shape.bands) {
    throw InvalidArgument("spectrum-image band count does not match its shape");
  }
}

SamplingMask::SamplingMask(std::vector<Index> indices, Index np)
    : indices_(std::move(indices)), np_(np) {
  if (np_ < 1) throw InvalidArgument("mask needs np >= 1");
  if (indices_.empty()) throw InvalidArgument("mask needs at least one index");
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    const Index idx = indices_[i];
    if (idx < 0 || idx >= np_) {
      throw InvalidArgument("mask index " + std::to_string(idx) +
                            " out of range [0, " + std::to_string(np_) + ")");
    }
    if (i > 0 && idx <= indices_[i - 1]) {
      throw InvalidArgument(idx == indices_[i - 1]
                                ? "duplicate mask index " + std::to_string(idx)
                                : "mask indices must be strictly increasing");
    }
  }
}

SamplingMask SamplingMask::full(Index np) {
  if (np < 1) throw InvalidArgument("mask needs np >= 1");
  std::vector<Index> all(static_cast<std::size_t>(np));
  std::iota(all.begin(), all.end(), Index{0});
  return SamplingMask(std::move(all), np);
}

std::vector<bool> SamplingMask::membership() const {
  std::vector<bool> flags(static_cast<std::size_t>(np_), false);
  for (Index idx : indices_) flags[static_cast<std::size_t>(idx)] = true;
  return flags;
}

GradientOperator::GradientOperator(Index height, Index width)
    : height_(height), width_(width) {
  if (height_ < 1 || width_ < 1) {
    throw InvalidArgument("gradient operator needs height, width >= 1");
  }
}

void GradientOperator::check_rows(const Matrix& rows, Index expected_cols) const {
  if (rows.cols() != expected_cols) {
    throw InvalidArgument("operand has " + std::to_string(rows.cols()) +
                          " columns, expected " + std::to_string(expected_cols));
  }
}

Matrix GradientOperator::gradient(const Matrix& rows) const {
  const Index np = pixels();
  check_rows(rows, np);
  Matrix out = Matrix::Zero(rows.rows(), 2 * np);
#pragma omp parallel for schedule(static)
  for (Index y = 0; y < height_; ++y) {
    for (Index x = 0; x < width_; ++x) {
      const Index p = y * width_ + x;
      if (x + 1 < width_) out.col(p) = rows.col(p + 1) - rows.col(p);
      if (y + 1 < height_) out.col(np + p) = rows.col(p + width_) - rows.col(p);
    }
  }
  return out;
}

Matrix GradientOperator::adjoint(const Matrix& grad) const {
  const Index np = pixels();
  check_rows(grad, 2 * np);
  Matrix out = Matrix::Zero(grad.rows(), np);
#pragma omp parallel for schedule(static)
  for (Index y = 0; y < height_; ++y) {
    for (Index x = 0; x < width_; ++x) {
      const Index p = y * width_ + x;
      auto col = out.col(p);
      if (x + 1 < width_) col -= grad.col(p);
      if (x > 0) col += grad.col(p - 1);
      if (y + 1 < height_) col -= grad.col(np + p);
      if (y > 0) col += grad.col(np + p - width_);
    }
  }
  return out;
}

Matrix GradientOperator::laplacian(const Matrix& rows) const {
  check_rows(rows, pixels());
  Matrix out(rows.rows(), rows.cols());
#pragma omp parallel for schedule(static)
  for (Index y = 0; y < height_; ++y) {
    for (Index x = 0; x < width_; ++x) {
      const Index p = y * width_ + x;
      auto col = out.col(p);
      col.setZero();
      int neighbours = 0;
      if (x > 0) { col += rows.col(p - 1); ++neighbours; }
      if (x + 1 < width_) { col += rows.col(p + 1); ++neighbours; }
      if (y > 0) { col += rows.col(p - width_); ++neighbours; }
      if (y + 1 < height_) { col += rows.col(p + width_); ++neighbours; }
      col -= static_cast<double>(neighbours) * rows.col(p);
    }
  }
  return out;
}

double GradientOperator::smoothness_energy(const Matrix& rows) const {
  check_rows(rows, pixels());
  double energy = 0.0;
  for (Index y = 0; y < height_; ++y) {
    for (Index x = 0; x < width_; ++x) {
      const Index p = y * width_ + x;
      if (x + 1 < width_) energy += (rows.col(p + 1) - rows.col(p)).squaredNorm();
      if (y + 1 < height_) energy += (rows.col(p + width_) - rows.col(p)).squaredNorm();
    }
  }
  return energy;
}

Matrix restrict_columns(const Matrix& data, const SamplingMask& mask) {
  if (data.cols() != mask.np()) {
    throw InvalidArgument("incompatible mask: mask covers " + std::to_string(mask.np()) +
                          " pixels, data has " + std::to_string(data.cols()));
  }
  Matrix out(data.rows(), mask.ns());
  for (Index n = 0; n < mask.ns(); ++n) {
    out.col(n) = data.col(mask.indices()[static_cast<std::size_t>(n)]);
  }
  return out;
}

Matrix restrict(const SpectrumImage& image, const SamplingMask& mask) {
  return restrict_columns(image.data(), mask);
}

Matrix scatter(const Matrix& columns, const SamplingMask& mask) {
  if (columns.cols() != mask.ns()) {
    throw InvalidArgument("scatter: " + std::to_string(columns.cols()) +
                          " columns for a mask of " + std::to_string(mask.ns()));
  }
  Matrix out = Matrix::Zero(columns.rows(), mask.np());
  for (Index n = 0; n < mask.ns(); ++n) {
    out.col(mask.indices()[static_cast<std::size_t>(n)]) = columns.col(n);
  }
  return out;
}

SamplingMask make_random_mask(Index np, Index ns, std::uint64_t seed) {
  if (np < 1 || ns < 1 || ns > np) {
    throw InvalidArgument("random mask needs 1 <= ns <= np (ns=" + std::to_string(ns) +
                          ", np=" + std::to_string(np) + ")");
  }
  std::vector<Index> all(static_cast<std::size_t>(np));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(ns));
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), ns, rng);
  std::sort(picked.begin(), picked.end());
  return SamplingMask(std::move(picked), np);
}

}  // namespace spectrec

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace spectrec {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ImageShape {
  Index bands = 0;
  Index height = 0;
  Index width = 0;

  Index pixels() const { return height * width; }
  bool operator==(const ImageShape&) const = default;
};

/// A spectrum-image: one column of `bands` intensities per pixel.
///
/// Pixel p sits at spatial coordinate (y, x) = (p / width, p % width).
/// The constructor checks the shape only; use all_finite() to screen data.
class SpectrumImage {
 public:
  SpectrumImage() = default;
  SpectrumImage(Index height, Index width, Matrix data);
  SpectrumImage(ImageShape shape, Matrix data);

  Index bands() const { return data_.rows(); }
  Index height() const { return height_; }
  Index width() const { return width_; }
  Index pixels() const { return data_.cols(); }
  ImageShape shape() const { return {bands(), height_, width_}; }

  const Matrix& data() const { return data_; }
  Matrix& data() { return data_; }

  Index pixel_index(Index y, Index x) const { return y * width_ + x; }
  bool all_finite() const { return data_.allFinite(); }

 private:
  Index height_ = 0;
  Index width_ = 0;
  Matrix data_;
};

/// Strictly increasing set of acquired pixel indices out of `np` pixels.
class SamplingMask {
 public:
  SamplingMask(std::vector<Index> indices, Index np);

  static SamplingMask full(Index np);

  const std::vector<Index>& indices() const { return indices_; }
  Index np() const { return np_; }
  Index ns() const { return static_cast<Index>(indices_.size()); }
  double ratio() const { return static_cast<double>(ns()) / static_cast<double>(np_); }

  // Per-pixel membership flags.
  std::vector<bool> membership() const;

 private:
  std::vector<Index> indices_;
  Index np_;
};

/// Forward-difference spatial gradient with replicate (Neumann) boundaries.
///
/// Rows of the operand are independent images of height x width pixels.
/// gradient() maps k x Np to k x 2Np: columns [0, Np) hold horizontal
/// differences, columns [Np, 2Np) vertical ones. A difference that would
/// cross the image border is zero.
class GradientOperator {
 public:
  GradientOperator(Index height, Index width);

  Index height() const { return height_; }
  Index width() const { return width_; }
  Index pixels() const { return height_ * width_; }

  Matrix gradient(const Matrix& rows) const;
  Matrix adjoint(const Matrix& grad) const;
  // Applies Delta = -D D^T (5-point stencil); spectral norm <= 8.
  Matrix laplacian(const Matrix& rows) const;
  // ||rows D||_F^2 without materialising the gradient.
  double smoothness_energy(const Matrix& rows) const;

 private:
  void check_rows(const Matrix& rows, Index expected_cols) const;

  Index height_;
  Index width_;
};

Matrix restrict_columns(const Matrix& data, const SamplingMask& mask);
Matrix restrict(const SpectrumImage& image, const SamplingMask& mask);

// Writes `columns` (k x Ns) into a zero k x Np matrix at the mask positions.
Matrix scatter(const Matrix& columns, const SamplingMask& mask);

// Uniform sampling without replacement; the result is sorted.
SamplingMask make_random_mask(Index np, Index ns, std::uint64_t seed);

}  // namespace spectrec

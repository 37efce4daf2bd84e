#include "spectrec/metrics.hpp"

#include "spectrec/error.hpp"

#include <algorithm>
#include <cmath>

namespace spectrec {

double nmse(const Matrix& truth, const Matrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
    throw InvalidArgument("nmse needs matrices of the same shape");
  }
  const double reference = truth.squaredNorm();
  if (!(reference > 0.0)) throw InvalidArgument("nmse of a zero-norm truth");
  return (estimate - truth).squaredNorm() / reference;
}

double spectral_angle(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) throw InvalidArgument("spectral angle needs equal lengths");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw InvalidArgument("spectral angle of a zero spectrum");
  return std::acos(std::clamp(a.dot(b) / (na * nb), -1.0, 1.0));
}

std::vector<SpectrumMatch> match_spectra(const Matrix& m_true, const Matrix& m_est) {
  if (m_true.rows() != m_est.rows() || m_true.cols() != m_est.cols() || m_true.cols() == 0) {
    throw InvalidArgument("endmember matrices must have matching, nonzero shapes");
  }
  const Index nc = m_true.cols();
  std::vector<SpectrumMatch> candidates;
  candidates.reserve(static_cast<std::size_t>(nc * nc));
  for (Index i = 0; i < nc; ++i) {
    for (Index j = 0; j < nc; ++j) {
      candidates.push_back({i, j, spectral_angle(m_true.col(i), m_est.col(j))});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.angle < b.angle; });

  std::vector<bool> used_true(static_cast<std::size_t>(nc), false);
  std::vector<bool> used_est(static_cast<std::size_t>(nc), false);
  std::vector<SpectrumMatch> matches;
  for (const auto& c : candidates) {
    const auto i = static_cast<std::size_t>(c.truth_column);
    const auto j = static_cast<std::size_t>(c.estimate_column);
    if (used_true[i] || used_est[j]) continue;
    used_true[i] = used_est[j] = true;
    matches.push_back(c);
  }
  std::sort(matches.begin(), matches.end(),
            [](const auto& a, const auto& b) { return a.truth_column < b.truth_column; });
  return matches;
}

double asad(const Matrix& m_true, const Matrix& m_est) {
  double total = 0.0;
  const auto matches = match_spectra(m_true, m_est);
  for (const auto& m : matches) total += m.angle;
  return total / static_cast<double>(matches.size());
}

AbundanceInversion invert_abundances(const SpectrumImage& image, const Matrix& endmembers,
                                     const InversionOptions& options) {
  const Index nc = endmembers.cols();
  if (endmembers.rows() != image.bands()) {
    throw InvalidArgument("endmembers must have one row per band");
  }
  if (nc < 1 || nc > endmembers.rows()) throw InvalidArgument("need 1 <= Nc <= Nb endmembers");
  if (options.max_iters < 1 || !(options.tol >= 0.0)) {
    throw InvalidArgument("invalid abundance inversion options");
  }
  if (!endmembers.allFinite() || !image.all_finite()) {
    throw NumericalError("non-finite input to abundance inversion");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(endmembers);
  if (qr.rank() < nc) throw InvalidArgument("rank-deficient endmember matrix");

  const Matrix gram = endmembers.transpose() * endmembers;
  const Matrix correlation = endmembers.transpose() * image.data();
  const double lipschitz = Eigen::SelfAdjointEigenSolver<Matrix>(gram).eigenvalues().maxCoeff();
  const double step = 1.0 / lipschitz;

  auto objective = [&](const Matrix& a) {
    return 0.5 * (image.data() - endmembers * a).squaredNorm();
  };

  AbundanceInversion result;
  Matrix a = Matrix::Zero(nc, image.pixels());
  if (options.record_objective) result.objective_trace.push_back(objective(a));
  for (int k = 1; k <= options.max_iters; ++k) {
    Matrix next = (a - step * (gram * a - correlation)).cwiseMax(0.0);
    const double change = (next - a).norm();
    const double scale = a.norm();
    a.swap(next);
    result.iterations = k;
    if (options.record_objective) result.objective_trace.push_back(objective(a));
    if (scale > 0.0 && change / scale < options.tol) break;
    if (change == 0.0) break;
  }

  if (options.sum_to_one) {
    for (Index p = 0; p < a.cols(); ++p) {
      const double total = a.col(p).sum();
      if (total > 0.0) a.col(p) /= total;
    }
  }
  result.abundances = std::move(a);
  return result;
}

}  // namespace spectrec

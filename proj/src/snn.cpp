#include "spectrec/snn.hpp"

#include "spectrec/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace spectrec {

void SnnParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("S2N lambda must be finite and >= 0");
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw InvalidArgument("S2N mu must be finite and >= 0");
  }
}

SnnModel::SnnModel(Matrix measurements, SamplingMask mask, ImageShape shape, double lambda)
    : measurements_(std::move(measurements)),
      mask_(std::move(mask)),
      shape_(shape),
      op_(shape.height, shape.width),
      lambda_(lambda) {
  if (mask_.np() != shape_.pixels()) {
    throw InvalidArgument("incompatible mask: mask covers " + std::to_string(mask_.np()) +
                          " pixels, image has " + std::to_string(shape_.pixels()));
  }
  if (measurements_.cols() != mask_.ns() || measurements_.rows() != shape_.bands) {
    throw InvalidArgument("measurements must be bands x Ns");
  }
  if (!measurements_.allFinite()) throw NumericalError("non-finite measurements");
}

double SnnModel::smooth_objective(const Matrix& x) const {
  const double fit = (measurements_ - restrict_columns(x, mask_)).squaredNorm();
  return 0.5 * fit + 0.5 * lambda_ * op_.smoothness_energy(x);
}

Matrix SnnModel::smooth_gradient(const Matrix& x) const {
  Matrix grad = lambda_ == 0.0 ? Matrix::Zero(x.rows(), x.cols()) : Matrix(-lambda_ * op_.laplacian(x));
  const auto& idx = mask_.indices();
  for (Index n = 0; n < mask_.ns(); ++n) {
    const Index p = idx[static_cast<std::size_t>(n)];
    grad.col(p) += x.col(p) - measurements_.col(n);
  }
  return grad;
}

Matrix SnnModel::initial_guess() const {
  const Vector mean = measurements_.rowwise().mean();
  Matrix x = mean.replicate(1, shape_.pixels());
  const auto& idx = mask_.indices();
  for (Index n = 0; n < mask_.ns(); ++n) x.col(idx[static_cast<std::size_t>(n)]) = measurements_.col(n);
  return x;
}

double SnnModel::data_residual(const Matrix& x) const {
  const double count = static_cast<double>(mask_.ns()) * static_cast<double>(shape_.bands);
  return (measurements_ - restrict_columns(x, mask_)).squaredNorm() / count;
}

namespace {

// Eigen-decomposition of the smaller Gram matrix; its eigenvectors are the
// singular vectors on that side and the square roots of its eigenvalues the
// singular values.
Eigen::SelfAdjointEigenSolver<Matrix> gram_eigen(const Matrix& m, bool wide) {
  const Index k = wide ? m.rows() : m.cols();
  Matrix gram = Matrix::Zero(k, k);
  if (wide) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m);
  } else {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram.selfadjointView<Eigen::Lower>());
  if (solver.info() != Eigen::Success) throw NumericalError("singular value decomposition failed");
  return solver;
}

}  // namespace

double nuclear_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (!m.allFinite()) throw NumericalError("nuclear norm of non-finite matrix");
  const auto solver = gram_eigen(m, m.rows() <= m.cols());
  return solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

Matrix nuclear_prox(const Matrix& m, double threshold) {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw InvalidArgument("nuclear prox threshold must be finite and >= 0");
  }
  if (!m.allFinite()) throw NumericalError("nuclear prox of non-finite matrix");
  if (threshold == 0.0 || m.size() == 0) return m;

  const bool wide = m.rows() <= m.cols();
  const auto solver = gram_eigen(m, wide);
  const Vector& eigs = solver.eigenvalues();  // ascending
  const Index k = eigs.size();

  // Keep the singular directions above the threshold, scaled by (s - t) / s.
  Index first = k;
  while (first > 0 && std::sqrt(std::max(eigs(first - 1), 0.0)) > threshold) --first;
  const Index kept = k - first;
  if (kept == 0) return Matrix::Zero(m.rows(), m.cols());

  const auto basis = solver.eigenvectors().rightCols(kept);
  Vector scale(kept);
  for (Index i = 0; i < kept; ++i) {
    const double s = std::sqrt(eigs(first + i));
    scale(i) = (s - threshold) / s;
  }
  const bool dense = 2 * kept > k;
  if (wide) {
    if (dense) {
      const Matrix shrink = basis * scale.asDiagonal() * basis.transpose();
      return shrink * m;
    }
    const Matrix coefficients = scale.asDiagonal() * (basis.transpose() * m);
    return basis * coefficients;
  }
  if (dense) {
    const Matrix shrink = basis * scale.asDiagonal() * basis.transpose();
    return m * shrink;
  }
  const Matrix coefficients = (m * basis) * scale.asDiagonal();
  return coefficients * basis.transpose();
}

Reconstruction snn_reconstruct(const Matrix& measurements, const SamplingMask& mask,
                               ImageShape shape, SnnParams params, const FistaConfig& config) {
  SnnModel model(measurements, mask, shape, params.lambda);
  return snn_reconstruct(measurements, mask, shape, params, config, model.initial_guess());
}

Reconstruction snn_reconstruct(const Matrix& measurements, const SamplingMask& mask,
                               ImageShape shape, SnnParams params, const FistaConfig& config,
                               const Matrix& x0) {
  params.validate();
  const SnnModel model(measurements, mask, shape, params.lambda);
  if (x0.rows() != shape.bands || x0.cols() != shape.pixels()) {
    throw InvalidArgument("S2N starting point must be bands x pixels");
  }

  FistaProblem problem;
  problem.lipschitz_bound = model.lipschitz_bound();
  problem.gradient = [&model](const Matrix& x) { return model.smooth_gradient(x); };
  const double mu = params.mu;
  problem.prox = [mu](const Matrix& z, double step) { return nuclear_prox(z, mu * step); };
  problem.objective = [&model, mu](const Matrix& x) {
    return model.smooth_objective(x) + (mu > 0.0 ? mu * nuclear_norm(x) : 0.0);
  };

  FistaResult solved = fista_solve(problem, x0, config);
  return {SpectrumImage(shape, std::move(solved.solution)), std::move(solved.report)};
}

void TuningConfig::validate() const {
  if (!(grid_min > 0.0) || !(grid_max > grid_min)) {
    throw InvalidArgument("tuning grid needs 0 < grid_min < grid_max");
  }
  if (points_per_decade < 1) throw InvalidArgument("points_per_decade must be >= 1");
  if (bisection_steps < 0) throw InvalidArgument("bisection_steps must be >= 0");
  solve.validate();
}

std::vector<double> TuningConfig::grid() const {
  const double lo = std::log10(grid_min);
  const double hi = std::log10(grid_max);
  const int intervals = std::max(1, static_cast<int>(std::lround((hi - lo) * points_per_decade)));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) {
    values.push_back(std::pow(10.0, lo + (hi - lo) * i / intervals));
  }
  return values;
}

namespace {

// One dichotomy search over a scalar parameter t, mapped to (lambda, mu).
class ScalarSearch {
 public:
  ScalarSearch(const SnnModel& model, double sigma2_hat, const TuningConfig& config,
               std::string name, double lambda_scale, double mu_scale)
      : model_(model),
        sigma2_hat_(sigma2_hat),
        config_(config),
        lambda_scale_(lambda_scale),
        mu_scale_(mu_scale) {
    trace_.name = std::move(name);
  }

  SearchTrace run() {
    const std::vector<double> grid = config_.grid();
    // Walk up the grid until the signed residual changes sign.
    const double r_first = evaluate(grid[0]);
    double r_lo = r_first;
    std::size_t hi = 0;
    for (std::size_t i = 1; i < grid.size() && r_lo != 0.0; ++i) {
      const double r = evaluate(grid[i]);
      if (r == 0.0 || std::signbit(r) != std::signbit(r_first)) {
        hi = i;
        if (r == 0.0) r_lo = 0.0;
        break;
      }
      r_lo = r;
      drop_outside(grid[i], grid[i]);
    }
    if (r_lo == 0.0) {
      trace_.bracketed = true;
      trace_.found = best();
      return trace_;
    }
    if (hi == 0) {
      // No sign change over the range: fall back to the grid argmin of J.
      trace_.bracketed = false;
      trace_.found = best();
      return trace_;
    }
    trace_.bracketed = true;
    const std::size_t lo = hi - 1;

    double a = std::log(grid[lo]);
    double b = std::log(grid[hi]);
    for (int step = 0; step < config_.bisection_steps; ++step) {
      const double m = 0.5 * (a + b);
      const double r_m = evaluate(std::exp(m));
      if (r_m == 0.0) break;
      if (std::signbit(r_m) == std::signbit(r_lo)) {
        a = m;
        r_lo = r_m;
      } else {
        b = m;
      }
      drop_outside(std::exp(a), std::exp(b));
    }
    trace_.found = best();
    return trace_;
  }

 private:
  double evaluate(double t) {
    const SnnParams params{lambda_scale_ * t, mu_scale_ * t};
    const Matrix* start = nearest(t);
    Reconstruction rec =
        start ? snn_reconstruct(model_.measurements(), model_.mask(), model_.shape(), params,
                                config_.solve, *start)
              : snn_reconstruct(model_.measurements(), model_.mask(), model_.shape(), params,
                                config_.solve);
    const double residual = model_.data_residual(rec.image.data()) - sigma2_hat_;
    trace_.evaluations.push_back({t, residual, rec.report.iterations, rec.report.wall_seconds});
    if (config_.on_evaluation) config_.on_evaluation(trace_.name, trace_.evaluations.back());
    solutions_[t] = std::move(rec.image.data());
    return residual;
  }

  const Matrix* nearest(double t) const {
    const Matrix* best_match = nullptr;
    double best_distance = 0.0;
    for (const auto& [value, solution] : solutions_) {
      const double d = std::abs(std::log(value) - std::log(t));
      if (!best_match || d < best_distance) {
        best_match = &solution;
        best_distance = d;
      }
    }
    return best_match;
  }

  // Keep only warm starts inside the current bracket.
  void drop_outside(double lo, double hi) {
    for (auto it = solutions_.begin(); it != solutions_.end();) {
      if (it->first < lo * (1.0 - 1e-12) || it->first > hi * (1.0 + 1e-12)) {
        it = solutions_.erase(it);
      } else {
        ++it;
      }
    }
  }

  double best() const {
    const SearchEvaluation* winner = nullptr;
    for (const auto& e : trace_.evaluations) {
      if (!winner || std::abs(e.signed_residual) < std::abs(winner->signed_residual)) winner = &e;
    }
    return winner->value;
  }

  const SnnModel& model_;
  double sigma2_hat_;
  const TuningConfig& config_;
  double lambda_scale_;
  double mu_scale_;
  SearchTrace trace_;
  std::map<double, Matrix> solutions_;
};

}  // namespace

TuningResult snn_tune(const Matrix& measurements, const SamplingMask& mask, ImageShape shape,
                      double sigma2_hat, const TuningConfig& config) {
  config.validate();
  if (!(sigma2_hat > 0.0) || !std::isfinite(sigma2_hat)) {
    throw InvalidArgument("snn_tune needs a positive noise variance estimate");
  }
  const SnnModel model(measurements, mask, shape, 0.0);

  TuningResult result;
  TuningState& state = result.state;
  state.sigma2_hat = sigma2_hat;

  SearchTrace lambda_trace = ScalarSearch(model, sigma2_hat, config, "lambda", 1.0, 0.0).run();
  state.lambda_circ = lambda_trace.found;
  SearchTrace mu_trace = ScalarSearch(model, sigma2_hat, config, "mu", 0.0, 1.0).run();
  state.mu_circ = mu_trace.found;

  ScalarSearch scale_search(model, sigma2_hat, config, "c", state.lambda_circ, state.mu_circ);
  SearchTrace c_trace = scale_search.run();
  state.c_circ = c_trace.found;

  state.lambda_star = state.c_circ * state.lambda_circ;
  state.mu_star = state.c_circ * state.mu_circ;
  for (const auto& e : c_trace.evaluations) {
    if (e.value == state.c_circ) state.final_residual = e.signed_residual + sigma2_hat;
  }
  state.warning = !lambda_trace.bracketed || !mu_trace.bracketed || !c_trace.bracketed;
  state.searches = {std::move(lambda_trace), std::move(mu_trace), std::move(c_trace)};

  result.params = {state.lambda_star, state.mu_star};
  return result;
}

}  // namespace spectrec

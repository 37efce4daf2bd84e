#include "spectrec/fista.hpp"

#include "spectrec/error.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace spectrec {

void FistaConfig::validate() const {
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(tol >= 0.0)) throw InvalidArgument("tol must be >= 0");
  if (monitor_every < 0) throw InvalidArgument("monitor_every must be >= 0");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::max_iters: return "max_iters";
  }
  return "unknown";
}

double fista_next_theta(double theta) {
  return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
}

namespace {

void require_finite(const Matrix& m, const Matrix& like, int iteration, const char* what) {
  if (m.rows() != like.rows() || m.cols() != like.cols()) {
    throw InvalidArgument(std::string(what) + " changed the matrix shape at iteration " +
                          std::to_string(iteration));
  }
  if (!m.allFinite()) {
    throw NumericalError(std::string("non-finite ") + what + " at iteration " +
                         std::to_string(iteration));
  }
}

}  // namespace

FistaResult fista_solve(const FistaProblem& problem, Matrix x0, const FistaConfig& config) {
  config.validate();
  if (!problem.gradient || !problem.prox) {
    throw InvalidArgument("FISTA problem needs gradient and prox callbacks");
  }
  if (!(problem.lipschitz_bound > 0.0) || !std::isfinite(problem.lipschitz_bound)) {
    throw InvalidArgument("lipschitz_bound must be positive and finite");
  }
  if (!x0.allFinite()) throw NumericalError("non-finite starting point");

  const auto start = std::chrono::steady_clock::now();
  const double step = 1.0 / problem.lipschitz_bound;
  const bool monitor = problem.objective && config.monitor_every > 0;

  FistaResult result;
  SolveReport& report = result.report;
  if (monitor) report.objective_trace.push_back(problem.objective(x0));

  Matrix x_prev = std::move(x0);
  Matrix y = x_prev;
  Matrix x;
  double theta = 1.0;

  for (int i = 1; i <= config.max_iters; ++i) {
    Matrix grad = problem.gradient(y);
    require_finite(grad, y, i, "gradient");
    x = problem.prox(y - step * grad, step);
    require_finite(x, y, i, "prox output");

    const double change = (x - x_prev).norm();
    const double scale = std::max(x_prev.norm(), std::numeric_limits<double>::epsilon());
    report.final_relative_change = change / scale;
    report.iterations = i;

    const bool converged = report.final_relative_change < config.tol;
    const bool last = converged || i == config.max_iters;
    if (monitor && (i % config.monitor_every == 0 || last)) {
      report.objective_trace.push_back(problem.objective(x));
    }
    if (converged) {
      report.stop_reason = StopReason::tolerance;
      break;
    }
    if (last) {
      report.stop_reason = StopReason::max_iters;
      break;
    }

    const double theta_next = fista_next_theta(theta);
    y = x + ((theta - 1.0) / theta_next) * (x - x_prev);
    theta = theta_next;
    x_prev.swap(x);
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.solution = std::move(x);
  return result;
}

}  // namespace spectrec

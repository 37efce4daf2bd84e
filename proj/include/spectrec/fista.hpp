#pragma once

#include "spectrec/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace spectrec {

struct FistaConfig {
  int max_iters = 2000;
  // Relative change ||x_i - x_{i-1}||_F / max(||x_{i-1}||_F, eps).
  double tol = 1e-6;
  // Objective sampling period for the trace; 0 disables monitoring.
  int monitor_every = 1;

  void validate() const;
};

enum class StopReason { tolerance, max_iters };

std::string to_string(StopReason reason);

struct SolveReport {
  int iterations = 0;
  // objective_trace[0] is the objective at x0, then one sample every
  // monitor_every iterations (and always the final iterate).
  std::vector<double> objective_trace;
  StopReason stop_reason = StopReason::max_iters;
  double final_relative_change = 0.0;
  double wall_seconds = 0.0;
};

/// Composite problem min f(x) + g(x) for FISTA.
struct FistaProblem {
  std::function<Matrix(const Matrix&)> gradient;
  // prox(z, step) returns prox_{step * g}(z); FISTA passes step = 1/L.
  std::function<Matrix(const Matrix&, double)> prox;
  // Must exceed the Lipschitz constant of the gradient of f.
  double lipschitz_bound = 0.0;
  std::function<double(const Matrix&)> objective;
};

struct FistaResult {
  Matrix solution;
  SolveReport report;
};

/// FISTA with constant step size 1/L.
///
///   x_i       = prox_{g/L}(y_i - grad f(y_i) / L)
///   theta_i+1 = (1 + sqrt(1 + 4 theta_i^2)) / 2
///   y_i+1     = x_i + (theta_i - 1) / theta_i+1 * (x_i - x_i-1)
///
/// with y_1 = x_0 and theta_1 = 1. Throws NumericalError when a callback
/// produces non-finite values.
FistaResult fista_solve(const FistaProblem& problem, Matrix x0, const FistaConfig& config);

// theta_{i+1} from theta_i.
double fista_next_theta(double theta);

}  // namespace spectrec

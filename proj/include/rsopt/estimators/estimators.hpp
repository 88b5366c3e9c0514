#pragma once

#include <cstdint>
#include <limits>

#include "rsopt/core/covariance.hpp"
#include "rsopt/core/rng.hpp"
#include "rsopt/core/types.hpp"

namespace rsopt {

inline constexpr double kNoTemperature =
    std::numeric_limits<double>::infinity();

// Parameters shared by the smoothing estimators: radius mu, temperature
// lambda (infinity = plain smoothing, no exponential tilting), sampling
// covariance, and sample count.
struct SmoothingConfig {
  double mu;
  double lambda;
  CovarianceModel cov;
  int n_samples;
};

struct GradientEstimate {
  Vector g;
  std::int64_t n_evals = 0;
  Vector sample_values;  // f(x + mu eps_k) where applicable
  // f at the base point when the estimator evaluated it (forward forms);
  // NaN otherwise. Lets callers trace f(x) without paying a second call.
  double base_value = std::numeric_limits<double>::quiet_NaN();
};

// Evaluates f at each column of points on the worker pool, in slot order.
// A non-finite value raises NonFiniteError for the lowest offending column.
Vector eval_points(const Objective& f, const Matrix& points);

// K perturbations, column k drawn from rng.substream(k); scheduling-free.
Matrix draw_perturbations(const CovarianceModel& cov, int n_samples,
                          const RngStream& rng);

// Forward finite differences along all coordinate axes; n+1 evaluations.
GradientEstimate fd_forward(const Objective& f, const Vector& x, double mu);

// Single-coordinate forward difference along axis j; 2 evaluations.
GradientEstimate coordinate_probe(const Objective& f, const Vector& x,
                                  double mu, Index j);

// coordinate_probe at a uniformly drawn axis.
GradientEstimate random_coordinate(const Objective& f, const Vector& x,
                                   double mu, RngStream rng);

// Central difference along a fixed sign vector delta (entries +-1).
GradientEstimate sign_probe(const Objective& f, const Vector& x, double mu,
                            const Vector& delta);

// sign_probe at a uniform random sign vector; 2 evaluations.
GradientEstimate spsa(const Objective& f, const Vector& x, double mu,
                      RngStream rng);

// Smoothed-gradient estimate, forward form: average over K samples of
// ((f(x+mu e) - f(x)) / mu) Sigma^{-1} e. The single f(x) evaluation is
// shared across samples, so n_evals = K+1.
GradientEstimate rs_forward(const Objective& f, const Vector& x,
                            const SmoothingConfig& cfg, RngStream rng);

// Central form: ((f(x+mu e) - f(x-mu e)) / (2 mu)) Sigma^{-1} e; 2K evals.
GradientEstimate rs_central(const Objective& f, const Vector& x,
                            const SmoothingConfig& cfg, RngStream rng);

// Gradient of the soft-min surrogate: with f_k = f(x + mu e_k) and
// rho = min_k f_k, g = (-lambda/mu) sum_k w_k Sigma^{-1} e_k where
// w_k = exp(-(f_k-rho)/lambda) / sum_j exp(-(f_j-rho)/lambda).
// The rho shift is unconditional; the largest weight is always exactly 1
// before normalization, so the weights cannot all underflow.
// lambda = infinity delegates to rs_forward. Requires K >= 2.
GradientEstimate lse_gradient(const Objective& f, const Vector& x,
                              const SmoothingConfig& cfg, RngStream rng);

// Same arithmetic on an externally supplied sample set.
GradientEstimate lse_gradient_from_samples(const CovarianceModel& cov,
                                           double mu, double lambda,
                                           const Matrix& eps,
                                           const Vector& values);

// Monte Carlo surrogate values on one shared sample set.
struct SurrogateValues {
  double rs;   // mean_k f_k
  double lse;  // rho - lambda log(mean_k exp(-(f_k-rho)/lambda))
  std::int64_t n_evals;
};

double surrogate_rs_from_values(const Vector& values);
double surrogate_lse_from_values(const Vector& values, double lambda);

SurrogateValues surrogate_both(const Objective& f, const Vector& x,
                               const SmoothingConfig& cfg, RngStream rng);
double surrogate_rs(const Objective& f, const Vector& x,
                    const SmoothingConfig& cfg, RngStream rng);
double surrogate_lse(const Objective& f, const Vector& x,
                     const SmoothingConfig& cfg, RngStream rng);

}  // namespace rsopt

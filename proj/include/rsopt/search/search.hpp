#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "rsopt/core/covariance.hpp"
#include "rsopt/core/rng.hpp"
#include "rsopt/core/trace.hpp"
#include "rsopt/core/types.hpp"
#include "rsopt/estimators/estimators.hpp"

namespace rsopt {

// Iteration and evaluation caps; negative means unbounded. At least one of
// the two must be bounded. target_value stops a run once best <= target.
struct SearchBudget {
  std::int64_t max_iters = -1;
  std::int64_t max_evals = -1;
  std::optional<double> target_value;

  static SearchBudget iters(std::int64_t n) { return {n, -1, {}}; }
  static SearchBudget evals(std::int64_t n) { return {-1, n, {}}; }
};

// Log cooling: alpha_k = alpha0 / (k+1), lambda_k = lambda0 / log(k+2),
// gamma_k = sqrt(2 alpha_k lambda_k). lambda0 = 0 turns the noise term off.
struct AnnealingSchedule {
  double alpha0 = 0.1;
  double lambda0 = 1.0;

  double alpha(std::int64_t k) const;
  double temperature(std::int64_t k) const;
  double noise_scale(std::int64_t k) const;
};

struct SearchResult {
  Vector best_point;
  double best_value = 0.0;
  RunTrace trace;
};

// Stream is taken by value: an estimator owns the draws it makes. Searches
// hand each call a fresh iteration substream and never reuse it afterward.
using GradientEstimator =
    std::function<GradientEstimate(const Objective&, const Vector&, RngStream)>;

// Reserved substream lanes inside one iteration stream. Estimator sample
// lanes occupy small indices, so search-level draws live far above them.
inline constexpr std::uint64_t kNoiseLane = std::uint64_t(1) << 63;
inline constexpr std::uint64_t kAcceptLane = (std::uint64_t(1) << 63) + 1;

// Accept rule for one proposed move with value change df = f(x') - f(x).
// Downhill and flat moves are taken without consuming randomness; strictly
// uphill moves draw one uniform and pass with probability exp(-df / temp).
bool metropolis_accept(double df, double temperature, RngStream& rng);

// Independent uniform draws over box; keeps a candidate only when it
// strictly improves the incumbent.
SearchResult pure_random_search(const Objective& f, const Box& box,
                                const SearchBudget& budget, RngStream rng);

// Gaussian proposal x' = x + d, d ~ N(0, cov); strict-improvement accept.
SearchResult greedy_local_search(const Objective& f, const Vector& x0,
                                 const CovarianceModel& cov,
                                 const SearchBudget& budget, RngStream rng);

// x <- x - step * g with g from the supplied estimator; fixed step size.
SearchResult approx_gradient_descent(const Objective& f, const Vector& x0,
                                     const GradientEstimator& estimator,
                                     double step, const SearchBudget& budget,
                                     RngStream rng);

// x <- x - alpha_k g + gamma_k eps, eps ~ N(0, I), on the log cooling
// schedule. Returns the best point seen, not the last iterate.
SearchResult sgld(const Objective& f, const Vector& x0,
                  const GradientEstimator& estimator,
                  const AnnealingSchedule& schedule, const SearchBudget& budget,
                  RngStream rng);

// Gaussian-proposal Metropolis chain at fixed temperature.
SearchResult metropolis_local_search(const Objective& f, const Vector& x0,
                                     const CovarianceModel& cov,
                                     double temperature,
                                     const SearchBudget& budget, RngStream rng);

}  // namespace rsopt

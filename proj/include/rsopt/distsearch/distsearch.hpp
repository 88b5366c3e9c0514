#pragma once

#include <limits>

#include "rsopt/core/covariance.hpp"
#include "rsopt/core/rng.hpp"
#include "rsopt/core/trace.hpp"
#include "rsopt/core/types.hpp"
#include "rsopt/search/search.hpp"

namespace rsopt {

// Rule turning K sampled objective values into K recombination weights.
// ExponentialAverage and the rank-based schemes produce nonnegative weights
// summing to one; RawCentered keeps the raw value offsets unnormalized.
class WeightScheme {
 public:
  enum class Kind { ExponentialAverage, Ordering, Elitist, RawCentered };

  // w_k proportional to exp(-(f_k - min)/lambda); lambda > 0 finite.
  static WeightScheme exponential_average(double lambda);
  // Fixed nonnegative non-increasing weights summing to 1, assigned by rank.
  static WeightScheme ordering(Vector weights);
  // 1/n_elite on the n_elite best values, 0 elsewhere.
  static WeightScheme elitist(int n_elite);
  // w_k = f_k - f(incumbent); may be negative, not normalized.
  static WeightScheme raw_centered();

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  const Vector& ordering_weights() const { return weights_; }
  int n_elite() const { return n_elite_; }

 private:
  WeightScheme() = default;

  Kind kind_ = Kind::ExponentialAverage;
  double lambda_ = 1.0;
  Vector weights_;
  int n_elite_ = 1;
};

// The standard CMA recombination profile w_k proportional to
// max(0, log(K/2 + 1) - log k) for 1-based rank k, normalized to sum 1.
Vector cma_log_weights(int n_samples);

// Weights aligned with the order of `values`. Rank-based schemes sort by
// (value, index), so ties always favor the lower index. RawCentered needs
// the incumbent's value as `baseline`; the others ignore it.
Vector compute_weights(
    const Vector& values, const WeightScheme& scheme,
    double baseline = std::numeric_limits<double>::quiet_NaN());

// Gaussian search distribution; the covariance is re-factorized on every
// update, so a held SearchDistribution is always SPD.
struct SearchDistribution {
  Vector mean;
  CovarianceModel cov;
};

struct DistributionResult {
  SearchDistribution dist;
  RunTrace trace;
};

// Keeps the best of {x} union {x + d_k}, K Gaussian probes per iteration;
// ties stay with the incumbent. K = 1 reproduces greedy_local_search
// draw for draw.
SearchResult predictive_sampling(const Objective& f, const Vector& x0,
                                 const CovarianceModel& cov, int n_samples,
                                 const SearchBudget& budget, RngStream rng);

// One exponentially weighted sample average: sum_k w_k x_k over the columns
// of `points`, with ExponentialAverage(lambda) weights on `values`. This is
// the literal update; the natural-gradient form x - (1/lambda) Sigma g with
// g = lse_gradient(mu = 1) must agree with it on shared samples.
Vector mppi_update_from_samples(const Matrix& points, const Vector& values,
                                double lambda);

// Iterated weighted sample average around the current mean; fixed covariance.
// Returns the best mean seen, not the last.
SearchResult mppi(const Objective& f, const Vector& x0,
                  const CovarianceModel& cov, int n_samples, double lambda,
                  const SearchBudget& budget, RngStream rng);

// One distribution update from externally supplied samples (columns of
// `points`) and their values. The covariance contraction uses the old mean:
//   Sigma <- (1 - a_cov S) Sigma + a_cov sum_k w_k (x_k - x)(x_k - x)^T,
//   x     <- (1 - a_mean S) x + a_mean sum_k w_k x_k,   S = sum_k w_k,
// applied per structural block of dist.cov (Full is one block; scalar and
// diagonal models are promoted to one dense block). A non-SPD result throws
// CovarianceUpdateError carrying the weight vector.
SearchDistribution cma_update_from_samples(
    const SearchDistribution& dist, const Matrix& points, const Vector& values,
    const WeightScheme& scheme, double step_mean, double step_cov,
    double baseline = std::numeric_limits<double>::quiet_NaN());

// Samples K points from dist, evaluates f, applies cma_update_from_samples.
// RawCentered also evaluates f at the current mean for its baseline.
SearchDistribution cma_step(const Objective& f, const SearchDistribution& dist,
                            int n_samples, const WeightScheme& scheme,
                            double step_mean, double step_cov, RngStream rng);

// Iterated cma_step; the trace records f(mean) each iteration. With
// ExponentialAverage weights this is MPPI with covariance adaptation.
DistributionResult cma(const Objective& f, const SearchDistribution& dist0,
                       int n_samples, const WeightScheme& scheme,
                       double step_mean, double step_cov,
                       const SearchBudget& budget, RngStream rng);

// cma restricted to a BlockDiagonal covariance; per-block updates keep the
// matrix exactly block-diagonal. A single block spanning all coordinates
// reproduces full cma bit for bit.
DistributionResult cma_block_diagonal(const Objective& f,
                                      const SearchDistribution& dist0,
                                      int n_samples, const WeightScheme& scheme,
                                      double step_mean, double step_cov,
                                      const SearchBudget& budget,
                                      RngStream rng);

// One cross-entropy update: elite mean first, then the elite scatter around
// the new mean replaces the covariance outright. When n_elite <= dim the
// scatter is singular by construction and a jitter of 1e-9 trace/dim is
// added to the diagonal; *jitter_out (if given) receives the delta applied,
// 0 when none was.
SearchDistribution cem_update_from_samples(const SearchDistribution& dist,
                                           const Matrix& points,
                                           const Vector& values, int n_elite,
                                           double* jitter_out = nullptr);

// Iterated cross-entropy method; jitter applications are noted in the trace.
DistributionResult cem(const Objective& f, const SearchDistribution& dist0,
                       int n_samples, int n_elite, const SearchBudget& budget,
                       RngStream rng);

}  // namespace rsopt

#include "rsopt/distsearch/distsearch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rsopt/core/errors.hpp"
#include "rsopt/estimators/estimators.hpp"

namespace rsopt {
namespace {

void check_budget(const SearchBudget& budget) {
  if (budget.max_iters < 0 && budget.max_evals < 0) {
    throw ConfigError("search budget needs max_iters or max_evals");
  }
}

double eval_counted(const Objective& f, const Vector& x, std::int64_t& evals) {
  ++evals;
  const double v = f(x);
  if (!std::isfinite(v)) {
    throw NonFiniteError(x, v, "objective returned a non-finite value");
  }
  return v;
}

// Same bookkeeping as the single-chain searches: one record per iteration on
// top of the initial evaluation, best tracked over recorded iterates only.
struct Loop {
  RunTrace trace;
  Vector best_point;
  double best_value;
  std::int64_t evals = 0;

  Loop(const char* id, const Vector& x0, double f0)
      : trace(id, 0), best_point(x0), best_value(f0) {
    trace.add(0, 1, f0);
    evals = 1;
  }

  void offer(const Vector& x, double fx) {
    if (fx < best_value) {
      best_value = fx;
      best_point = x;
    }
  }

  bool done(const SearchBudget& b, std::int64_t iters_run) const {
    if (b.max_iters >= 0 && iters_run >= b.max_iters) return true;
    if (b.max_evals >= 0 && evals >= b.max_evals) return true;
    return b.target_value && best_value <= *b.target_value;
  }
};

// Ranks ascending by value; stable, so equal values keep index order.
std::vector<Index> ranked_indices(const Vector& values) {
  std::vector<Index> idx(std::size_t(values.size()));
  std::iota(idx.begin(), idx.end(), Index(0));
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Index a, Index b) { return values(a) < values(b); });
  return idx;
}

Matrix points_around(const Vector& mean, const Matrix& eps) {
  Matrix pts(eps.rows(), eps.cols());
  for (Index k = 0; k < eps.cols(); ++k) pts.col(k) = mean + eps.col(k);
  return pts;
}

// Structural blocks of the covariance: Full and BlockDiagonal expose their
// own blocks; scalar and diagonal models are promoted to one dense block.
std::vector<Matrix> covariance_blocks(const CovarianceModel& cov) {
  std::vector<Matrix> blocks;
  if (cov.block_sizes().empty()) {
    blocks.push_back(cov.dense());
  } else {
    for (std::size_t b = 0; b < cov.block_sizes().size(); ++b) {
      blocks.push_back(cov.block_dense(b));
    }
  }
  return blocks;
}

// Rebuilds the model from updated blocks, keeping BlockDiagonal inputs
// block-diagonal and everything else a single full matrix. Factorization
// failure surfaces as CovarianceUpdateError carrying the weights in force.
CovarianceModel rebuild_covariance(const CovarianceModel& before,
                                   std::vector<Matrix> blocks,
                                   const Vector& weights) {
  try {
    if (before.kind() == CovKind::BlockDiagonal) {
      return CovarianceModel::block_diagonal(std::move(blocks));
    }
    return CovarianceModel::full(blocks.front());
  } catch (const NotSpdError& e) {
    throw CovarianceUpdateError(
        e.order(), weights,
        "covariance update is not positive definite: " + std::string(e.what()));
  }
}

void check_step(double step, const char* which) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ConfigError(std::string(which) + " must be positive and finite");
  }
}

void check_samples(const SearchDistribution& dist, const Matrix& points,
                   const Vector& values) {
  if (points.rows() != dist.mean.size() || dist.cov.dim() != dist.mean.size()) {
    throw ConfigError("sample dimension does not match the distribution");
  }
  if (points.cols() < 1 || values.size() != points.cols()) {
    throw ConfigError("one objective value per sample column required");
  }
}

}  // namespace

WeightScheme WeightScheme::exponential_average(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("exponential average temperature must be positive");
  }
  WeightScheme s;
  s.kind_ = Kind::ExponentialAverage;
  s.lambda_ = lambda;
  return s;
}

WeightScheme WeightScheme::ordering(Vector weights) {
  if (weights.size() < 1) {
    throw ConfigError("ordering weights must be non-empty");
  }
  double sum = 0.0;
  for (Index i = 0; i < weights.size(); ++i) {
    const bool decreasing = i == 0 || weights(i) <= weights(i - 1);
    if (!std::isfinite(weights(i)) || weights(i) < 0.0 || !decreasing) {
      throw ConfigError("ordering weights must be nonnegative non-increasing");
    }
    sum += weights(i);
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("ordering weights must sum to one");
  }
  WeightScheme s;
  s.kind_ = Kind::Ordering;
  s.weights_ = std::move(weights);
  return s;
}

WeightScheme WeightScheme::elitist(int n_elite) {
  if (n_elite < 1) {
    throw ConfigError("elite count must be at least one");
  }
  WeightScheme s;
  s.kind_ = Kind::Elitist;
  s.n_elite_ = n_elite;
  return s;
}

WeightScheme WeightScheme::raw_centered() {
  WeightScheme s;
  s.kind_ = Kind::RawCentered;
  return s;
}

Vector cma_log_weights(int n_samples) {
  if (n_samples < 1) {
    throw ConfigError("weight profile needs at least one sample");
  }
  Vector w(n_samples);
  const double top = std::log(double(n_samples) / 2.0 + 1.0);
  for (int k = 0; k < n_samples; ++k) {
    w(k) = std::max(0.0, top - std::log(double(k + 1)));
  }
  return w / w.sum();
}

Vector compute_weights(const Vector& values, const WeightScheme& scheme,
                       double baseline) {
  const Index n = values.size();
  if (n < 1) {
    throw ConfigError("weight computation needs at least one value");
  }
  if (!values.allFinite()) {
    throw ConfigError("weight computation needs finite values");
  }
  switch (scheme.kind()) {
    case WeightScheme::Kind::ExponentialAverage: {
      // Shift by the minimum before exponentiating; the best sample then has
      // unnormalized weight exactly 1, so the sum can never underflow.
      const double rho = values.minCoeff();
      Vector w = ((rho - values.array()) / scheme.lambda()).exp();
      return w / w.sum();
    }
    case WeightScheme::Kind::Ordering: {
      const Vector& by_rank = scheme.ordering_weights();
      if (by_rank.size() != n) {
        throw ConfigError("ordering weights length must match sample count");
      }
      const std::vector<Index> idx = ranked_indices(values);
      Vector w(n);
      for (Index r = 0; r < n; ++r) w(idx[std::size_t(r)]) = by_rank(r);
      return w;
    }
    case WeightScheme::Kind::Elitist: {
      const int n_elite = scheme.n_elite();
      if (n_elite > n) {
        throw ConfigError("elite count exceeds sample count");
      }
      const std::vector<Index> idx = ranked_indices(values);
      Vector w = Vector::Zero(n);
      for (int r = 0; r < n_elite; ++r) {
        w(idx[std::size_t(r)]) = 1.0 / double(n_elite);
      }
      return w;
    }
    case WeightScheme::Kind::RawCentered: {
      if (!std::isfinite(baseline)) {
        throw ConfigError("raw-centered weights need the incumbent value");
      }
      return values.array() - baseline;
    }
  }
  throw ConfigError("unknown weight scheme");
}

SearchResult predictive_sampling(const Objective& f, const Vector& x0,
                                 const CovarianceModel& cov, int n_samples,
                                 const SearchBudget& budget, RngStream rng) {
  check_budget(budget);
  if (x0.size() != f.dim() || cov.dim() != f.dim()) {
    throw ConfigError("start point and covariance must match the objective");
  }
  if (n_samples < 1) {
    throw ConfigError("predictive sampling needs at least one sample");
  }
  Vector x = x0;
  std::int64_t setup = 0;
  const double f0 = eval_counted(f, x, setup);
  Loop loop("predictive_sampling", x, f0);
  double fx = f0;
  for (std::int64_t t = 1; !loop.done(budget, t - 1); ++t) {
    RngStream it = rng.substream(std::uint64_t(t));
    const Matrix pts = points_around(x, draw_perturbations(cov, n_samples, it));
    const Vector vals = eval_points(f, pts);
    loop.evals += n_samples;
    // argmin over {x} and the candidates; ties stay with the incumbent.
    Index best_k = -1;
    double best_v = fx;
    for (Index k = 0; k < vals.size(); ++k) {
      if (vals(k) < best_v) {
        best_v = vals(k);
        best_k = k;
      }
    }
    if (best_k >= 0) {
      x = pts.col(best_k);
      fx = best_v;
    }
    loop.trace.add(t, loop.evals, fx);
    loop.offer(x, fx);
  }
  return {std::move(loop.best_point), loop.best_value, std::move(loop.trace)};
}

Vector mppi_update_from_samples(const Matrix& points, const Vector& values,
                                double lambda) {
  if (points.cols() < 1 || values.size() != points.cols()) {
    throw ConfigError("one objective value per sample column required");
  }
  const Vector w =
      compute_weights(values, WeightScheme::exponential_average(lambda));
  return points * w;
}

SearchResult mppi(const Objective& f, const Vector& x0,
                  const CovarianceModel& cov, int n_samples, double lambda,
                  const SearchBudget& budget, RngStream rng) {
  check_budget(budget);
  if (x0.size() != f.dim() || cov.dim() != f.dim()) {
    throw ConfigError("start point and covariance must match the objective");
  }
  if (n_samples < 2) {
    throw ConfigError("mppi needs at least two samples");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("mppi temperature must be positive and finite");
  }
  Vector x = x0;
  std::int64_t setup = 0;
  const double f0 = eval_counted(f, x, setup);
  Loop loop("mppi", x, f0);
  for (std::int64_t t = 1; !loop.done(budget, t - 1); ++t) {
    RngStream it = rng.substream(std::uint64_t(t));
    const Matrix pts = points_around(x, draw_perturbations(cov, n_samples, it));
    const Vector vals = eval_points(f, pts);
    loop.evals += n_samples;
    x = mppi_update_from_samples(pts, vals, lambda);
    const double fx = eval_counted(f, x, loop.evals);
    loop.trace.add(t, loop.evals, fx);
    loop.offer(x, fx);
  }
  return {std::move(loop.best_point), loop.best_value, std::move(loop.trace)};
}

SearchDistribution cma_update_from_samples(const SearchDistribution& dist,
                                           const Matrix& points,
                                           const Vector& values,
                                           const WeightScheme& scheme,
                                           double step_mean, double step_cov,
                                           double baseline) {
  check_samples(dist, points, values);
  check_step(step_mean, "mean step size");
  check_step(step_cov, "covariance step size");
  const Vector w = compute_weights(values, scheme, baseline);
  const double total = w.sum();

  // Covariance first, contracted around the old mean.
  std::vector<Matrix> blocks = covariance_blocks(dist.cov);
  Index offset = 0;
  for (Matrix& block : blocks) {
    const Index m = block.rows();
    block *= 1.0 - step_cov * total;
    for (Index k = 0; k < points.cols(); ++k) {
      const Vector d = points.col(k).segment(offset, m) -
                       dist.mean.segment(offset, m);
      block.noalias() += (step_cov * w(k)) * d * d.transpose();
    }
    offset += m;
  }
  Vector mean =
      (1.0 - step_mean * total) * dist.mean + step_mean * (points * w);
  return {std::move(mean),
          rebuild_covariance(dist.cov, std::move(blocks), w)};
}

SearchDistribution cma_step(const Objective& f, const SearchDistribution& dist,
                            int n_samples, const WeightScheme& scheme,
                            double step_mean, double step_cov, RngStream rng) {
  if (dist.mean.size() != f.dim()) {
    throw ConfigError("distribution dimension does not match objective");
  }
  if (n_samples < 1) {
    throw ConfigError("cma needs at least one sample");
  }
  double baseline = std::numeric_limits<double>::quiet_NaN();
  if (scheme.kind() == WeightScheme::Kind::RawCentered) {
    std::int64_t evals = 0;
    baseline = eval_counted(f, dist.mean, evals);
  }
  const Matrix pts =
      points_around(dist.mean, draw_perturbations(dist.cov, n_samples, rng));
  const Vector vals = eval_points(f, pts);
  return cma_update_from_samples(dist, pts, vals, scheme, step_mean, step_cov,
                                 baseline);
}

namespace {

DistributionResult cma_loop(const char* id, const Objective& f,
                            const SearchDistribution& dist0, int n_samples,
                            const WeightScheme& scheme, double step_mean,
                            double step_cov, const SearchBudget& budget,
                            RngStream rng) {
  check_budget(budget);
  if (dist0.mean.size() != f.dim() || dist0.cov.dim() != f.dim()) {
    throw ConfigError("distribution dimension does not match objective");
  }
  if (n_samples < 1) {
    throw ConfigError("cma needs at least one sample");
  }
  SearchDistribution dist = dist0;
  std::int64_t setup = 0;
  double fx = eval_counted(f, dist.mean, setup);
  Loop loop(id, dist.mean, fx);
  for (std::int64_t t = 1; !loop.done(budget, t - 1); ++t) {
    RngStream it = rng.substream(std::uint64_t(t));
    const Matrix pts =
        points_around(dist.mean, draw_perturbations(dist.cov, n_samples, it));
    const Vector vals = eval_points(f, pts);
    loop.evals += n_samples;
    // The trace evaluation of the previous iteration is f at the current
    // mean, which is exactly the RawCentered baseline; no extra call.
    dist = cma_update_from_samples(dist, pts, vals, scheme, step_mean,
                                   step_cov, fx);
    fx = eval_counted(f, dist.mean, loop.evals);
    loop.trace.add(t, loop.evals, fx);
    loop.offer(dist.mean, fx);
  }
  return {std::move(dist), std::move(loop.trace)};
}

}  // namespace

DistributionResult cma(const Objective& f, const SearchDistribution& dist0,
                       int n_samples, const WeightScheme& scheme,
                       double step_mean, double step_cov,
                       const SearchBudget& budget, RngStream rng) {
  return cma_loop("cma", f, dist0, n_samples, scheme, step_mean, step_cov,
                  budget, rng);
}

DistributionResult cma_block_diagonal(const Objective& f,
                                      const SearchDistribution& dist0,
                                      int n_samples, const WeightScheme& scheme,
                                      double step_mean, double step_cov,
                                      const SearchBudget& budget,
                                      RngStream rng) {
  if (dist0.cov.kind() != CovKind::BlockDiagonal) {
    throw ConfigError("block-diagonal cma needs a BlockDiagonal covariance");
  }
  return cma_loop("cma_block_diagonal", f, dist0, n_samples, scheme, step_mean,
                  step_cov, budget, rng);
}

SearchDistribution cem_update_from_samples(const SearchDistribution& dist,
                                           const Matrix& points,
                                           const Vector& values, int n_elite,
                                           double* jitter_out) {
  check_samples(dist, points, values);
  const Vector w = compute_weights(values, WeightScheme::elitist(n_elite));
  Vector mean = points * w;

  // Elite scatter around the new mean replaces the covariance outright.
  std::vector<Matrix> blocks = covariance_blocks(dist.cov);
  Index offset = 0;
  double trace_sum = 0.0;
  for (Matrix& block : blocks) {
    const Index m = block.rows();
    block.setZero();
    for (Index k = 0; k < points.cols(); ++k) {
      if (w(k) == 0.0) continue;
      const Vector d = points.col(k).segment(offset, m) - mean.segment(offset, m);
      block.noalias() += w(k) * d * d.transpose();
    }
    trace_sum += block.trace();
    offset += m;
  }
  // With n_elite <= dim the centered scatter cannot have full rank.
  double delta = 0.0;
  if (n_elite <= dist.mean.size()) {
    delta = 1e-9 * trace_sum / double(dist.mean.size());
    for (Matrix& block : blocks) {
      block.diagonal().array() += delta;
    }
  }
  if (jitter_out != nullptr) *jitter_out = delta;
  return {std::move(mean),
          rebuild_covariance(dist.cov, std::move(blocks), w)};
}

DistributionResult cem(const Objective& f, const SearchDistribution& dist0,
                       int n_samples, int n_elite, const SearchBudget& budget,
                       RngStream rng) {
  check_budget(budget);
  if (dist0.mean.size() != f.dim() || dist0.cov.dim() != f.dim()) {
    throw ConfigError("distribution dimension does not match objective");
  }
  if (n_elite < 1 || n_elite > n_samples) {
    throw ConfigError("elite count must be between one and the sample count");
  }
  SearchDistribution dist = dist0;
  std::int64_t setup = 0;
  double fx = eval_counted(f, dist.mean, setup);
  Loop loop("cem", dist.mean, fx);
  for (std::int64_t t = 1; !loop.done(budget, t - 1); ++t) {
    RngStream it = rng.substream(std::uint64_t(t));
    const Matrix pts =
        points_around(dist.mean, draw_perturbations(dist.cov, n_samples, it));
    const Vector vals = eval_points(f, pts);
    loop.evals += n_samples;
    double delta = 0.0;
    dist = cem_update_from_samples(dist, pts, vals, n_elite, &delta);
    if (delta != 0.0) {
      loop.trace.note("jitter " + format_double(delta));
    }
    fx = eval_counted(f, dist.mean, loop.evals);
    loop.trace.add(t, loop.evals, fx);
    loop.offer(dist.mean, fx);
  }
  return {std::move(dist), std::move(loop.trace)};
}

}  // namespace rsopt

#include "rsopt/search/search.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "rsopt/core/errors.hpp"

namespace rsopt {
namespace {

constexpr double kDivergenceRadius = 1e8;

void check_budget(const SearchBudget& budget) {
  if (budget.max_iters < 0 && budget.max_evals < 0) {
    throw ConfigError("search budget needs max_iters or max_evals");
  }
}

void check_start(const Objective& f, const Vector& x0) {
  if (x0.size() != f.dim()) {
    throw ConfigError("start point dimension does not match objective");
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

// Shared incumbent/trace bookkeeping. Searches push one record per iteration
// plus the initial evaluation at iteration 0; best is derived by the trace.
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

  SearchResult result() && {
    return {std::move(best_point), best_value, std::move(trace)};
  }
};

void check_diverged(const Vector& x, double step) {
  const double norm = x.norm();
  if (!x.allFinite() || norm > kDivergenceRadius) {
    throw DivergedError(step, norm,
                        "iterate diverged at step size " + format_double(step));
  }
}

}  // namespace

double AnnealingSchedule::alpha(std::int64_t k) const {
  return alpha0 / double(k + 1);
}

double AnnealingSchedule::temperature(std::int64_t k) const {
  return lambda0 / std::log(double(k + 2));
}

double AnnealingSchedule::noise_scale(std::int64_t k) const {
  return std::sqrt(2.0 * alpha(k) * temperature(k));
}

bool metropolis_accept(double df, double temperature, RngStream& rng) {
  if (df <= 0.0) return true;
  return rng.uniform01() < std::exp(-df / temperature);
}

SearchResult pure_random_search(const Objective& f, const Box& box,
                                const SearchBudget& budget, RngStream rng) {
  check_budget(budget);
  const Index n = f.dim();
  if (box.lo.size() != n || box.hi.size() != n) {
    throw ConfigError("sampling box dimension does not match objective");
  }
  for (Index i = 0; i < n; ++i) {
    if (!(box.lo(i) < box.hi(i)) || !std::isfinite(box.lo(i)) ||
        !std::isfinite(box.hi(i))) {
      throw ConfigError("sampling box is empty or unbounded");
    }
  }
  const Vector span = box.hi - box.lo;
  const auto draw = [&](RngStream& s) {
    Vector x(n);
    for (Index i = 0; i < n; ++i) x(i) = box.lo(i) + span(i) * s.uniform01();
    return x;
  };

  RngStream init = rng.substream(0);
  Vector x = draw(init);
  std::int64_t evals = 0;
  const double f0 = eval_counted(f, x, evals);
  Loop loop("pure_random_search", x, f0);
  double fx = f0;
  for (std::int64_t t = 1; !loop.done(budget, t - 1); ++t) {
    RngStream it = rng.substream(std::uint64_t(t));
    const Vector cand = draw(it);
    const double fc = eval_counted(f, cand, loop.evals);
    if (fc < fx) {
      x = cand;
      fx = fc;
    }
    loop.trace.add(t, loop.evals, fx);
    loop.offer(x, fx);
  }
  return std::move(loop).result();
}

SearchResult greedy_local_search(const Objective& f, const Vector& x0,
                                 const CovarianceModel& cov,
                                 const SearchBudget& budget, RngStream rng) {
  check_budget(budget);
  check_start(f, x0);
  if (cov.dim() != f.dim()) {
    throw ConfigError("covariance dimension does not match objective");
  }
  Vector x = x0;
  std::int64_t evals = 0;
  const double f0 = eval_counted(f, x, evals);
  Loop loop("greedy_local_search", x, f0);
  double fx = f0;
  for (std::int64_t t = 1; !loop.done(budget, t - 1); ++t) {
    RngStream it = rng.substream(std::uint64_t(t));
    RngStream lane = it.substream(0);
    const Vector cand = x + cov.sample(lane);
    const double fc = eval_counted(f, cand, loop.evals);
    if (fc < fx) {
      x = cand;
      fx = fc;
    }
    loop.trace.add(t, loop.evals, fx);
    loop.offer(x, fx);
  }
  return std::move(loop).result();
}

SearchResult approx_gradient_descent(const Objective& f, const Vector& x0,
                                     const GradientEstimator& estimator,
                                     double step, const SearchBudget& budget,
                                     RngStream rng) {
  check_budget(budget);
  check_start(f, x0);
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ConfigError("step size must be positive and finite");
  }
  Vector x = x0;
  std::int64_t evals = 0;
  const double f0 = eval_counted(f, x, evals);
  Loop loop("approx_gradient_descent", x, f0);
  for (std::int64_t t = 1; !loop.done(budget, t - 1); ++t) {
    RngStream it = rng.substream(std::uint64_t(t));
    const GradientEstimate est = estimator(f, x, it);
    loop.evals += est.n_evals;
    x -= step * est.g;
    check_diverged(x, step);
    const double fx = eval_counted(f, x, loop.evals);
    loop.trace.add(t, loop.evals, fx);
    loop.offer(x, fx);
  }
  return std::move(loop).result();
}

SearchResult sgld(const Objective& f, const Vector& x0,
                  const GradientEstimator& estimator,
                  const AnnealingSchedule& schedule, const SearchBudget& budget,
                  RngStream rng) {
  check_budget(budget);
  check_start(f, x0);
  if (!(schedule.alpha0 > 0.0) || schedule.lambda0 < 0.0) {
    throw ConfigError("annealing schedule needs alpha0 > 0 and lambda0 >= 0");
  }
  Vector x = x0;
  std::int64_t evals = 0;
  const double f0 = eval_counted(f, x, evals);
  Loop loop("sgld", x, f0);
  for (std::int64_t t = 1; !loop.done(budget, t - 1); ++t) {
    const std::int64_t k = t - 1;
    const double alpha = schedule.alpha(k);
    const double gamma = schedule.noise_scale(k);
    RngStream it = rng.substream(std::uint64_t(t));
    const GradientEstimate est = estimator(f, x, it);
    loop.evals += est.n_evals;
    x -= alpha * est.g;
    if (gamma > 0.0) {
      RngStream noise = it.substream(kNoiseLane);
      for (Index i = 0; i < x.size(); ++i) x(i) += gamma * noise.normal();
    }
    check_diverged(x, alpha);
    const double fx = eval_counted(f, x, loop.evals);
    loop.trace.add(t, loop.evals, fx);
    loop.trace.note("temperature " + format_double(schedule.temperature(k)));
    loop.offer(x, fx);
  }
  return std::move(loop).result();
}

SearchResult metropolis_local_search(const Objective& f, const Vector& x0,
                                     const CovarianceModel& cov,
                                     double temperature,
                                     const SearchBudget& budget,
                                     RngStream rng) {
  check_budget(budget);
  check_start(f, x0);
  if (cov.dim() != f.dim()) {
    throw ConfigError("covariance dimension does not match objective");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be positive and finite");
  }
  Vector x = x0;
  std::int64_t evals = 0;
  const double f0 = eval_counted(f, x, evals);
  Loop loop("metropolis_local_search", x, f0);
  double fx = f0;
  for (std::int64_t t = 1; !loop.done(budget, t - 1); ++t) {
    RngStream it = rng.substream(std::uint64_t(t));
    RngStream lane = it.substream(0);
    const Vector cand = x + cov.sample(lane);
    const double fc = eval_counted(f, cand, loop.evals);
    RngStream accept = it.substream(kAcceptLane);
    if (metropolis_accept(fc - fx, temperature, accept)) {
      x = cand;
      fx = fc;
    }
    loop.trace.add(t, loop.evals, fx);
    loop.offer(x, fx);
  }
  return std::move(loop).result();
}

}  // namespace rsopt

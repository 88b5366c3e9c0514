#include "rsopt/population/population.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <utility>

#include "rsopt/core/errors.hpp"
#include "rsopt/core/parallel.hpp"
#include "rsopt/estimators/estimators.hpp"

namespace rsopt {
namespace {

void check_budget(const SearchBudget& budget) {
  if (budget.max_iters < 0 && budget.max_evals < 0) {
    throw ConfigError("search budget needs max_iters or max_evals");
  }
}

// Even share of a global cap; unbounded stays unbounded and every part
// keeps at least one unit.
std::int64_t share(std::int64_t total, int parts) {
  if (total < 0) return -1;
  return std::max<std::int64_t>(1, total / parts);
}

}  // namespace

Population::Population(const Objective& f, const std::vector<Vector>& points) {
  if (points.empty()) {
    throw ConfigError("population needs at least one member");
  }
  const Index n = f.dim();
  Matrix cols(n, Index(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != n) {
      throw ConfigError("population member dimension does not match objective");
    }
    cols.col(Index(i)) = points[i];
  }
  const Vector values = eval_points(f, cols);

  std::vector<int> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values(a) < values(b); });
  points_.reserve(points.size());
  values_.reserve(points.size());
  for (int i : order) {
    points_.push_back(points[std::size_t(i)]);
    values_.push_back(values(i));
  }
}

SearchResult random_restarts(const Objective& f, const InitSampler& init,
                             const CovarianceModel& cov, int n_restarts,
                             const SearchBudget& budget, RngStream rng) {
  check_budget(budget);
  if (n_restarts < 1) {
    throw ConfigError("n_restarts must be at least 1");
  }
  if (!init) {
    throw ConfigError("random_restarts needs an init sampler");
  }
  const SearchBudget local{share(budget.max_iters, n_restarts),
                           share(budget.max_evals, n_restarts),
                           budget.target_value};

  std::vector<SearchResult> runs(static_cast<std::size_t>(n_restarts));
  parallel_for(n_restarts, [&](std::int64_t r) {
    RngStream stream = rng.substream(std::uint64_t(r));
    const Vector x0 = init(stream.substream(0));
    runs[std::size_t(r)] = greedy_local_search(f, x0, cov, local, stream);
  });

  RunTrace trace("random_restarts", 0);
  std::int64_t offset = 0;
  std::size_t winner = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const TraceRecord& rec : runs[r].trace.records()) {
      trace.add(rec.iteration, rec.n_evals + offset, rec.current);
    }
    offset = trace.n_evals();
    if (runs[r].best_value < runs[winner].best_value) winner = r;
  }
  return {std::move(runs[winner].best_point), runs[winner].best_value,
          std::move(trace)};
}

PopulationResult es_n_plus_lambda(const Objective& f, const Population& pop0,
                                  int n_offspring, const CovarianceModel& cov,
                                  const SearchBudget& budget, RngStream rng) {
  check_budget(budget);
  if (n_offspring < 1) {
    throw ConfigError("offspring count must be at least 1");
  }
  if (cov.dim() != f.dim() || pop0.dim() != f.dim()) {
    throw ConfigError("population or covariance dimension does not match "
                      "objective");
  }
  const int n_parents = pop0.size();
  std::vector<Vector> points = pop0.points_;
  std::vector<double> values = pop0.values_;

  RunTrace trace("es_n_plus_lambda", 0);
  std::int64_t evals = n_parents;
  trace.add(0, evals, values.front());

  const auto done = [&](std::int64_t iters_run) {
    if (budget.max_iters >= 0 && iters_run >= budget.max_iters) return true;
    if (budget.max_evals >= 0 && evals >= budget.max_evals) return true;
    return budget.target_value.has_value() &&
           values.front() <= *budget.target_value;
  };

  for (std::int64_t t = 1; !done(t - 1); ++t) {
    RngStream it = rng.substream(std::uint64_t(t));
    Matrix children(f.dim(), n_offspring);
    for (int k = 0; k < n_offspring; ++k) {
      RngStream lane = it.substream(std::uint64_t(k));
      int parent = 0;
      if (n_parents > 1) {
        parent = static_cast<int>(lane.bounded(std::uint64_t(n_parents)));
      }
      children.col(k) = points[std::size_t(parent)] + cov.sample(lane);
    }
    const Vector child_values = eval_points(f, children);
    evals += n_offspring;

    // Survivors: best n_parents of the union, parents first on ties. The
    // union is scanned in insertion order, so the stable sort realizes the
    // (value, insertion index) rule exactly.
    const int total = n_parents + n_offspring;
    std::vector<int> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    const auto value_of = [&](int i) {
      return i < n_parents ? values[std::size_t(i)]
                           : child_values(i - n_parents);
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return value_of(a) < value_of(b);
    });
    std::vector<Vector> next_points;
    std::vector<double> next_values;
    next_points.reserve(std::size_t(n_parents));
    next_values.reserve(std::size_t(n_parents));
    for (int rank = 0; rank < n_parents; ++rank) {
      const int i = order[std::size_t(rank)];
      if (i < n_parents) {
        next_points.push_back(std::move(points[std::size_t(i)]));
      } else {
        next_points.push_back(children.col(i - n_parents));
      }
      next_values.push_back(value_of(i));
    }
    points = std::move(next_points);
    values = std::move(next_values);
    trace.add(t, evals, values.front());
  }
  return {Population(std::move(points), std::move(values)), std::move(trace)};
}

}  // namespace rsopt

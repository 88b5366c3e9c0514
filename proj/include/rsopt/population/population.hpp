#pragma once

#include <functional>
#include <vector>

#include "rsopt/core/covariance.hpp"
#include "rsopt/core/rng.hpp"
#include "rsopt/core/trace.hpp"
#include "rsopt/core/types.hpp"
#include "rsopt/search/search.hpp"

namespace rsopt {

struct PopulationResult;

// Evaluated members kept sorted ascending by value; equal values keep the
// order in which members were supplied. Cached values equal f(point) exactly.
class Population {
 public:
  Population(const Objective& f, const std::vector<Vector>& points);

  int size() const { return static_cast<int>(points_.size()); }
  Index dim() const { return points_.front().size(); }
  const Vector& point(int i) const { return points_[std::size_t(i)]; }
  double value(int i) const { return values_[std::size_t(i)]; }
  const Vector& best_point() const { return points_.front(); }
  double best_value() const { return values_.front(); }

 private:
  // Adopts members already evaluated and sorted; selection uses this to
  // carry cached values across generations without re-evaluating.
  Population(std::vector<Vector> points, std::vector<double> values)
      : points_(std::move(points)), values_(std::move(values)) {}

  std::vector<Vector> points_;
  std::vector<double> values_;

  friend PopulationResult es_n_plus_lambda(const Objective&, const Population&,
                                           int, const CovarianceModel&,
                                           const SearchBudget&, RngStream);
};

struct PopulationResult {
  Population pop;
  RunTrace trace;
};

// Draws one start point; the stream is owned by the callee.
using InitSampler = std::function<Vector(RngStream)>;

// Independent greedy local searches from sampled starts. Restart r runs on
// rng.substream(r) (start drawn from its lane 0) and gets an even share of
// the global budget, so results are comparable across n_restarts settings.
// Restarts may run concurrently; the returned trace concatenates the
// per-restart records in restart order with cumulative n_evals, and the
// best point is the first restart attaining the smallest value.
SearchResult random_restarts(const Objective& f, const InitSampler& init,
                             const CovarianceModel& cov, int n_restarts,
                             const SearchBudget& budget, RngStream rng);

// Per generation, each of the n_offspring children picks a parent uniformly
// (no draw when there is a single parent), mutates it with cov, and the
// best pop0.size() of parents plus children survive. Ties prefer parents
// over children and earlier children over later ones, so a single-parent
// population replays greedy_local_search (one child) or predictive_sampling
// (many children) draw for draw. Elitist: the best value never worsens.
PopulationResult es_n_plus_lambda(const Objective& f, const Population& pop0,
                                  int n_offspring, const CovarianceModel& cov,
                                  const SearchBudget& budget, RngStream rng);

}  // namespace rsopt

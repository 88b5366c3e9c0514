#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rsopt/core/covariance.hpp"
#include "rsopt/core/rng.hpp"
#include "rsopt/core/trace.hpp"
#include "rsopt/core/types.hpp"
#include "rsopt/estimators/estimators.hpp"
#include "rsopt/search/search.hpp"

// Benchmark harness: analytic test functions, surrogate-landscape probes,
// the seeded experiment runner, and its CSV/JSON/SVG output. Everything here
// is deterministic given the config, so re-running a config reproduces every
// output byte except the timestamp stamped into metadata.json.

namespace rsopt {

inline constexpr char kVersion[] = "1.0.0";

// Benchmark function with its known global minimum attached. min_value is
// f(minimizer) exactly as evaluated, so tests can compare bitwise.
struct AnalyticFunction {
  std::string id;
  Objective f;
  Vector minimizer;
  double min_value = 0.0;
};

// f(x) = 1 - exp(-(x-2)^2/(2 0.1^2)) - 0.8 exp(-(x+2)^2/2): a narrow global
// well of depth 1 at x = 2 next to a wide local well of depth 0.8 at x = -2.
// The stored minimizer is the narrow well's center; the wide bump's slope
// moves the true minimizer by under 2e-5, with a value gap under 1e-8.
// Note f(2) itself is -0.8 exp(-8), about -2.7e-4, not zero: the wide tail
// at distance 4 is small but not negligible at the 1e-6 scale.
AnalyticFunction double_well_1d();

// sphere (min 0 at the origin), rosenbrock (min 0 at the all-ones point,
// dim >= 2), rastrigin (min 0 at the origin), double_well_1d (dim 1 only).
// Unknown ids raise ConfigError listing the valid ids.
AnalyticFunction analytic_function(const std::string& id, Index dim);
std::vector<std::string> analytic_ids();

// n evenly spaced scalar points spanning [lo, hi] inclusive; n >= 2.
std::vector<Vector> grid_1d(double lo, double hi, int n);

// Landscape probe rows. Grid point i draws its n_mc perturbations from
// rng.substream(i) and feeds the same sample set to every surrogate column,
// so the exp-shift inequalities between columns hold exactly per row, not
// just in expectation. cfg.n_samples is ignored in favor of n_mc.
struct SurrogateProbeRow {
  Vector x;
  double value;         // f(x)
  double smoothed;      // plain Gaussian smoothing
  double smoothed_lse;  // soft-min tilted smoothing, <= smoothed
};
std::vector<SurrogateProbeRow> surrogate_probe(const Objective& f,
                                               const std::vector<Vector>& grid,
                                               const SmoothingConfig& cfg,
                                               int n_mc, RngStream rng);

// Soft-max counterpart of the soft-min surrogate, computed max-shifted:
// rho + lambda log mean_k exp((f_k - rho)/lambda) with rho = max_k f_k.
double risk_averse_from_values(const Vector& values, double lambda);

// Same smoothing radius, three risk attitudes on one shared sample set.
struct RiskProbeRow {
  Vector x;
  double neutral;       // plain smoothed value
  double risk_seeking;  // soft-min: favors low values, <= neutral
  double risk_averse;   // soft-max: favors high values, >= neutral
};
std::vector<RiskProbeRow> risk_probe(const Objective& f,
                                     const std::vector<Vector>& grid,
                                     const SmoothingConfig& cfg, int n_mc,
                                     RngStream rng);

// CSV renderings; numbers use the shortest exact decimal form. The x columns
// are named x for scalar grids and x0..x{d-1} otherwise.
std::string surrogate_probe_csv(const std::vector<SurrogateProbeRow>& rows);
std::string risk_probe_csv(const std::vector<RiskProbeRow>& rows);

// Minimal polyline chart; all series share x and must match its length.
// Deterministic: equal inputs render equal bytes.
std::string svg_line_chart(
    const std::string& title, const std::vector<double>& x,
    const std::vector<std::pair<std::string, std::vector<double>>>& series);

// Probe configuration. JSON schema (unknown keys rejected):
//   {function, dim, grid: {lo, hi, n}, mu, lambda, n_mc, seed, out}
// Loading resolves every default, so load -> to_json -> load is a fixed
// point. Probes perturb with identity covariance scaled only by mu.
struct ProbeConfig {
  std::string function = "double_well_1d";
  Index dim = 1;
  double grid_lo = -6.0;
  double grid_hi = 6.0;
  int grid_n = 241;
  double mu = 1.0;
  double lambda = 1.0;
  int n_mc = 100000;
  std::uint64_t seed = 0;
  std::string out = "probe";
};
ProbeConfig load_probe(const nlohmann::json& j);
nlohmann::json to_json(const ProbeConfig& cfg);

// An objective with a start point and the box that start-sampling methods
// draw from. Analytic problems use their customary boxes; swing-up problems
// use [-limit, limit] per control entry with a zero-control start.
struct BenchmarkProblem {
  std::string id;
  Objective f;
  Vector x0;
  Box box;
};

// Problems: sphere, rosenbrock, rastrigin, double_well_1d (params dim, x0),
// pendulum_swingup, cartpole_swingup, double_cartpole_swingup (params
// horizon, limit). Missing params take defaults; unknown ids raise
// ConfigError listing the valid ids.
BenchmarkProblem benchmark_problem(const std::string& id,
                                   const nlohmann::json& params);
std::vector<std::string> problem_ids();

// Algorithms runnable by the experiment runner, in registry order:
// pure_random, greedy, metropolis, smoothed_gd, sgld, predictive, mppi,
// mppi_cma, cem, random_restarts, es.
std::vector<std::string> algorithm_ids();

// Experiment configuration. JSON schema (unknown keys rejected at every
// level):
//   {algorithm, problem, params, problem_params, n_seeds, base_seed,
//    budget: {iters, max_evals, target}, out}
// params and problem_params are validated against the chosen algorithm and
// problem and padded with defaults, so load -> to_json -> load is a fixed
// point on the resolved form.
struct ExperimentConfig {
  std::string algorithm;
  std::string problem;
  nlohmann::json params;
  nlohmann::json problem_params;
  int n_seeds = 6;
  std::uint64_t base_seed = 0;
  SearchBudget budget = SearchBudget::iters(100);
  std::string out = "results";
};
ExperimentConfig load_experiment(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

// Linear-interpolation quantile on an ascending vector: with pos = p (n-1)
// split into whole part i and fraction t, returns v[i] + t (v[i+1] - v[i]).
// The summary writer and any recomputation must share this definition.
double quantile_sorted(const std::vector<double>& sorted, double p);

// Per-iteration aggregate over seeds; quartiles use quantile_sorted.
struct SummaryRow {
  std::int64_t iteration;
  double n_evals;  // median across seeds
  double current_median;
  double current_q25;
  double current_q75;
  double best_median;
  double best_q25;
  double best_q75;
};
std::vector<SummaryRow> summarize(const std::vector<RunTrace>& traces);
std::string summary_csv(const std::vector<SummaryRow>& rows);

struct ExperimentResult {
  ExperimentConfig config;          // resolved
  std::vector<RunTrace> traces;     // index k holds seed k
  std::vector<SummaryRow> summary;  // rows up to the shortest trace
};

// Runs seed k on RngStream(base_seed, k) for k in [0, n_seeds); seeds run
// concurrently when the worker pool allows and the result is independent of
// the thread count. Writing files is write_experiment's job.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes trace_seed_<k>.csv per seed, summary.csv, metadata.json (resolved
// config, library version, seed list, timestamp) and, when with_svg is set,
// summary.svg with the median and quartile curves. All writes happen on the
// calling thread. Only the timestamp varies between identical runs.
void write_experiment(const ExperimentResult& result,
                      const std::string& out_dir, bool with_svg = false);

}  // namespace rsopt

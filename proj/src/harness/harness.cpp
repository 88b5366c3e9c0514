#include "rsopt/harness/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

#include "rsopt/core/errors.hpp"
#include "rsopt/core/parallel.hpp"
#include "rsopt/distsearch/distsearch.hpp"
#include "rsopt/population/population.hpp"
#include "rsopt/trajopt/trajopt.hpp"

namespace rsopt {

namespace {

// Start-point draws for population methods live on their own lane, above
// the iteration substreams and the reserved search lanes in search.hpp.
constexpr std::uint64_t kInitLane = (std::uint64_t(1) << 63) + 2;

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const std::string& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

double double_well_value(double x) {
  const double narrow = (x - 2.0) * (x - 2.0) / (2.0 * 0.1 * 0.1);
  const double wide = (x + 2.0) * (x + 2.0) / 2.0;
  return 1.0 - std::exp(-narrow) - 0.8 * std::exp(-wide);
}

AnalyticFunction make_analytic(std::string id, Objective f, Vector minimizer) {
  const double value = f(minimizer);
  return {std::move(id), std::move(f), std::move(minimizer), value};
}

void check_probe_inputs(const Objective& f, const std::vector<Vector>& grid,
                        const SmoothingConfig& cfg, int n_mc) {
  if (grid.empty()) throw ConfigError("probe grid is empty");
  if (n_mc < 1) throw ConfigError("probe n_mc must be at least 1");
  if (!(cfg.mu > 0.0) || !std::isfinite(cfg.mu)) {
    throw ConfigError("probe smoothing radius must be positive and finite");
  }
  if (cfg.cov.dim() != f.dim()) {
    throw ConfigError("probe covariance dimension does not match the function");
  }
  for (const Vector& x : grid) {
    if (x.size() != f.dim()) {
      throw ConfigError("probe grid point dimension does not match");
    }
  }
}

}  // namespace

AnalyticFunction double_well_1d() {
  Objective f(1, [](const Vector& x) { return double_well_value(x(0)); });
  return make_analytic("double_well_1d", std::move(f), Vector::Constant(1, 2.0));
}

AnalyticFunction analytic_function(const std::string& id, Index dim) {
  if (dim < 1) throw ConfigError("function dimension must be at least 1");
  if (id == "sphere") {
    Objective f(dim, [](const Vector& x) { return x.squaredNorm(); });
    return make_analytic(id, std::move(f), Vector::Zero(dim));
  }
  if (id == "rosenbrock") {
    if (dim < 2) throw ConfigError("rosenbrock needs dimension at least 2");
    Objective f(dim, [](const Vector& x) {
      double total = 0.0;
      for (Index i = 0; i + 1 < x.size(); ++i) {
        const double gap = x(i + 1) - x(i) * x(i);
        total += 100.0 * gap * gap + (1.0 - x(i)) * (1.0 - x(i));
      }
      return total;
    });
    return make_analytic(id, std::move(f), Vector::Ones(dim));
  }
  if (id == "rastrigin") {
    Objective f(dim, [](const Vector& x) {
      double total = 10.0 * static_cast<double>(x.size());
      for (Index i = 0; i < x.size(); ++i) {
        total += x(i) * x(i) -
                 10.0 * std::cos(2.0 * std::numbers::pi * x(i));
      }
      return total;
    });
    return make_analytic(id, std::move(f), Vector::Zero(dim));
  }
  if (id == "double_well_1d") {
    if (dim != 1) throw ConfigError("double_well_1d is one-dimensional");
    return double_well_1d();
  }
  throw ConfigError("unknown function id: " + id +
                    "; valid: " + join_ids(analytic_ids()));
}

std::vector<std::string> analytic_ids() {
  return {"sphere", "rosenbrock", "rastrigin", "double_well_1d"};
}

std::vector<Vector> grid_1d(double lo, double hi, int n) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("grid bounds must be finite with lo < hi");
  }
  if (n < 2) throw ConfigError("grid needs at least 2 points");
  std::vector<Vector> grid;
  grid.reserve(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    grid.push_back(Vector::Constant(1, lo + (hi - lo) * t));
  }
  return grid;
}

std::vector<SurrogateProbeRow> surrogate_probe(const Objective& f,
                                               const std::vector<Vector>& grid,
                                               const SmoothingConfig& cfg,
                                               int n_mc, RngStream rng) {
  check_probe_inputs(f, grid, cfg, n_mc);
  SmoothingConfig mc = cfg;
  mc.n_samples = n_mc;
  std::vector<SurrogateProbeRow> rows(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector& x = grid[i];
    const SurrogateValues s = surrogate_both(f, x, mc, rng.substream(i));
    rows[i] = {x, f(x), s.rs, s.lse};
  }
  return rows;
}

double risk_averse_from_values(const Vector& values, double lambda) {
  if (values.size() == 0) throw std::logic_error("no values to aggregate");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("risk transforms need a finite positive temperature");
  }
  const double shift = values.maxCoeff();
  const double mean = ((values.array() - shift) / lambda).exp().mean();
  return shift + lambda * std::log(mean);
}

std::vector<RiskProbeRow> risk_probe(const Objective& f,
                                     const std::vector<Vector>& grid,
                                     const SmoothingConfig& cfg, int n_mc,
                                     RngStream rng) {
  check_probe_inputs(f, grid, cfg, n_mc);
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) {
    throw ConfigError("risk probes need a finite positive temperature");
  }
  std::vector<RiskProbeRow> rows(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector& x = grid[i];
    // Same sample construction as the surrogate evaluators, so the neutral
    // and seeking columns replay surrogate_both on the same substream.
    const Matrix eps = draw_perturbations(cfg.cov, n_mc, rng.substream(i));
    const Vector values = eval_points(f, x.replicate(1, n_mc) + cfg.mu * eps);
    rows[i] = {x, surrogate_rs_from_values(values),
               surrogate_lse_from_values(values, cfg.lambda),
               risk_averse_from_values(values, cfg.lambda)};
  }
  return rows;
}

namespace {

std::string x_header(Index dim) {
  if (dim == 1) return "x";
  std::string out;
  for (Index i = 0; i < dim; ++i) {
    if (i > 0) out += ',';
    out += 'x';
    out += std::to_string(i);
  }
  return out;
}

void append_row_x(std::string& out, const Vector& x) {
  for (Index i = 0; i < x.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(x(i));
  }
}

}  // namespace

std::string surrogate_probe_csv(const std::vector<SurrogateProbeRow>& rows) {
  if (rows.empty()) throw std::logic_error("no probe rows to render");
  std::string out = x_header(rows.front().x.size()) + ",f,f_mu,f_mu_lambda\n";
  for (const SurrogateProbeRow& row : rows) {
    append_row_x(out, row.x);
    out += ',';
    out += format_double(row.value);
    out += ',';
    out += format_double(row.smoothed);
    out += ',';
    out += format_double(row.smoothed_lse);
    out += '\n';
  }
  return out;
}

std::string risk_probe_csv(const std::vector<RiskProbeRow>& rows) {
  if (rows.empty()) throw std::logic_error("no probe rows to render");
  std::string out =
      x_header(rows.front().x.size()) + ",neutral,risk_seeking,risk_averse\n";
  for (const RiskProbeRow& row : rows) {
    append_row_x(out, row.x);
    out += ',';
    out += format_double(row.neutral);
    out += ',';
    out += format_double(row.risk_seeking);
    out += ',';
    out += format_double(row.risk_averse);
    out += '\n';
  }
  return out;
}

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                "#9467bd", "#8c564b", "#e377c2"};

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string svg_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string svg_line_chart(
    const std::string& title, const std::vector<double>& x,
    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  if (x.size() < 2) throw ConfigError("chart needs at least two points");
  if (series.empty()) throw ConfigError("chart needs at least one series");
  double x_lo = x.front(), x_hi = x.front();
  for (double v : x) {
    if (!std::isfinite(v)) throw ConfigError("chart x values must be finite");
    x_lo = std::min(x_lo, v);
    x_hi = std::max(x_hi, v);
  }
  if (!(x_lo < x_hi)) throw ConfigError("chart x values must not be constant");
  double y_lo = series.front().second.front();
  double y_hi = y_lo;
  for (const auto& [name, ys] : series) {
    if (ys.size() != x.size()) {
      throw ConfigError("chart series " + name + " does not match x");
    }
    for (double v : ys) {
      if (!std::isfinite(v)) {
        throw ConfigError("chart series " + name + " has non-finite values");
      }
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  if (y_lo == y_hi) {
    y_lo -= 1.0;
    y_hi += 1.0;
  }

  const double width = 640.0, height = 400.0;
  const double left = 62.0, right = 18.0, top = 34.0, bottom = 42.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const auto px = [&](double v) {
    return left + (v - x_lo) / (x_hi - x_lo) * plot_w;
  };
  const auto py = [&](double v) {
    return top + (y_hi - v) / (y_hi - y_lo) * plot_h;
  };

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 400\" "
      "width=\"640\" height=\"400\">\n"
      "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"monospace\" font-size=\"13\">" +
         xml_escape(title) + "</text>\n";
  // Axes along the plot's left and bottom edges, min/max tick labels only.
  svg += "<line x1=\"" + svg_coord(left) + "\" y1=\"" + svg_coord(top) +
         "\" x2=\"" + svg_coord(left) + "\" y2=\"" + svg_coord(top + plot_h) +
         "\" stroke=\"#333\"/>\n";
  svg += "<line x1=\"" + svg_coord(left) + "\" y1=\"" + svg_coord(top + plot_h) +
         "\" x2=\"" + svg_coord(left + plot_w) + "\" y2=\"" +
         svg_coord(top + plot_h) + "\" stroke=\"#333\"/>\n";
  svg += "<text x=\"" + svg_coord(left) + "\" y=\"" + svg_coord(height - 12.0) +
         "\" font-family=\"monospace\" font-size=\"11\">" +
         xml_escape(format_double(x_lo)) + "</text>\n";
  svg += "<text x=\"" + svg_coord(left + plot_w) + "\" y=\"" +
         svg_coord(height - 12.0) +
         "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" +
         xml_escape(format_double(x_hi)) + "</text>\n";
  svg += "<text x=\"" + svg_coord(left - 6.0) + "\" y=\"" +
         svg_coord(top + plot_h) +
         "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" +
         xml_escape(format_double(y_lo)) + "</text>\n";
  svg += "<text x=\"" + svg_coord(left - 6.0) + "\" y=\"" +
         svg_coord(top + 10.0) +
         "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" +
         xml_escape(format_double(y_hi)) + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
    std::string points;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i > 0) points += ' ';
      points += svg_coord(px(x[i])) + "," + svg_coord(py(series[s].second[i]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    svg += "<text x=\"" + svg_coord(left + 8.0) + "\" y=\"" +
           svg_coord(top + 14.0 + 16.0 * static_cast<double>(s)) +
           "\" font-family=\"monospace\" font-size=\"11\" fill=\"" + color +
           "\">" + xml_escape(series[s].first) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

namespace {

void check_object_keys(const nlohmann::json& j,
                       const std::set<std::string>& known,
                       const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ConfigError("unknown " + what + " key: " + item.key());
    }
  }
}

}  // namespace

ProbeConfig load_probe(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "function", "dim", "grid", "mu", "lambda", "n_mc", "seed", "out"};
  check_object_keys(j, known, "probe config");
  ProbeConfig cfg;
  try {
    cfg.function = j.value("function", cfg.function);
    cfg.dim = j.value("dim", cfg.dim);
    if (j.contains("grid")) {
      const nlohmann::json& g = j.at("grid");
      check_object_keys(g, {"lo", "hi", "n"}, "probe grid");
      cfg.grid_lo = g.value("lo", cfg.grid_lo);
      cfg.grid_hi = g.value("hi", cfg.grid_hi);
      cfg.grid_n = g.value("n", cfg.grid_n);
    }
    cfg.mu = j.value("mu", cfg.mu);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.n_mc = j.value("n_mc", cfg.n_mc);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out = j.value("out", cfg.out);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed probe config: ") + e.what());
  }
  analytic_function(cfg.function, cfg.dim);
  if (!(cfg.grid_lo < cfg.grid_hi) || cfg.grid_n < 2) {
    throw ConfigError("probe grid must have lo < hi and at least 2 points");
  }
  if (!(cfg.mu > 0.0) || !std::isfinite(cfg.mu)) {
    throw ConfigError("probe mu must be positive and finite");
  }
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) {
    throw ConfigError("probe lambda must be positive and finite");
  }
  if (cfg.n_mc < 1) throw ConfigError("probe n_mc must be at least 1");
  if (cfg.out.empty()) throw ConfigError("probe out must not be empty");
  return cfg;
}

nlohmann::json to_json(const ProbeConfig& cfg) {
  nlohmann::json j;
  j["function"] = cfg.function;
  j["dim"] = cfg.dim;
  j["grid"] = {{"lo", cfg.grid_lo}, {"hi", cfg.grid_hi}, {"n", cfg.grid_n}};
  j["mu"] = cfg.mu;
  j["lambda"] = cfg.lambda;
  j["n_mc"] = cfg.n_mc;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out;
  return j;
}

namespace {

struct ParamSpec {
  nlohmann::json defaults;
  std::set<std::string> optional;
};

const std::vector<std::pair<std::string, ParamSpec>>& algorithm_registry() {
  static const std::vector<std::pair<std::string, ParamSpec>> registry = {
      {"pure_random", {nlohmann::json::object(), {}}},
      {"greedy", {{{"sigma", 0.1}}, {}}},
      {"metropolis", {{{"sigma", 0.1}, {"temperature", 0.1}}, {}}},
      {"smoothed_gd",
       {{{"mu", 0.1}, {"n_samples", 16}, {"step", 0.05}}, {"temperature"}}},
      {"sgld",
       {{{"mu", 0.025}, {"n_samples", 4}, {"alpha0", 0.15}, {"lambda0", 0.5}},
        {}}},
      {"predictive", {{{"sigma", 0.1}, {"n_samples", 2048}}, {}}},
      {"mppi", {{{"sigma", 0.1}, {"n_samples", 2048}, {"lambda", 0.1}}, {}}},
      {"mppi_cma",
       {{{"sigma", 0.1},
         {"n_samples", 2048},
         {"lambda", 0.1},
         {"step_mean", 1.0},
         {"step_cov", 0.3}},
        {}}},
      {"cem", {{{"sigma", 0.1}, {"n_samples", 2048}}, {"n_elite"}}},
      {"random_restarts", {{{"sigma", 0.1}, {"n_restarts", 8}}, {}}},
      {"es", {{{"sigma", 0.1}, {"n_parents", 8}, {"n_offspring", 16}}, {}}},
  };
  return registry;
}

const std::vector<std::pair<std::string, ParamSpec>>& problem_registry() {
  static const std::vector<std::pair<std::string, ParamSpec>> registry = {
      {"sphere", {{{"dim", 10}, {"x0", 2.0}}, {}}},
      {"rosenbrock", {{{"dim", 10}, {"x0", 0.0}}, {}}},
      {"rastrigin", {{{"dim", 10}, {"x0", 2.5}}, {}}},
      {"double_well_1d", {{{"dim", 1}, {"x0", -4.0}}, {}}},
      {"pendulum_swingup", {{{"horizon", 100}, {"limit", 2.5}}, {}}},
      {"cartpole_swingup", {{{"horizon", 100}, {"limit", 10.0}}, {}}},
      {"double_cartpole_swingup", {{{"horizon", 100}, {"limit", 15.0}}, {}}},
  };
  return registry;
}

const ParamSpec& find_spec(
    const std::vector<std::pair<std::string, ParamSpec>>& registry,
    const std::string& id, const std::vector<std::string>& valid,
    const std::string& what) {
  for (const auto& [name, spec] : registry) {
    if (name == id) return spec;
  }
  throw ConfigError("unknown " + what + " id: " + id +
                    "; valid: " + join_ids(valid));
}

nlohmann::json resolve_params(const nlohmann::json& given,
                              const ParamSpec& spec, const std::string& what) {
  if (!given.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& item : given.items()) {
    if (!spec.defaults.contains(item.key()) &&
        !spec.optional.count(item.key())) {
      throw ConfigError("unknown " + what + " key: " + item.key());
    }
  }
  nlohmann::json out = spec.defaults;
  for (const auto& item : given.items()) out[item.key()] = item.value();
  return out;
}

double require_positive(const nlohmann::json& params, const char* key) {
  const double v = params.at(key).get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(key) + " must be positive and finite");
  }
  return v;
}

std::int64_t require_int_at_least(const nlohmann::json& params,
                                  const char* key, std::int64_t lo) {
  if (!params.at(key).is_number_integer()) {
    throw ConfigError(std::string(key) + " must be an integer");
  }
  const std::int64_t v = params.at(key).get<std::int64_t>();
  if (v < lo) {
    throw ConfigError(std::string(key) + " must be at least " +
                      std::to_string(lo));
  }
  return v;
}

void validate_algorithm_params(const std::string& id, nlohmann::json& params) {
  if (id == "pure_random") return;
  if (id == "greedy") {
    require_positive(params, "sigma");
    return;
  }
  if (id == "metropolis") {
    require_positive(params, "sigma");
    require_positive(params, "temperature");
    return;
  }
  if (id == "smoothed_gd") {
    require_positive(params, "mu");
    require_positive(params, "step");
    require_int_at_least(params, "n_samples", 1);
    if (params.contains("temperature")) require_positive(params, "temperature");
    return;
  }
  if (id == "sgld") {
    require_positive(params, "mu");
    require_positive(params, "alpha0");
    require_int_at_least(params, "n_samples", 1);
    const double lambda0 = params.at("lambda0").get<double>();
    if (lambda0 < 0.0 || !std::isfinite(lambda0)) {
      throw ConfigError("lambda0 must be nonnegative and finite");
    }
    return;
  }
  if (id == "predictive") {
    require_positive(params, "sigma");
    require_int_at_least(params, "n_samples", 1);
    return;
  }
  if (id == "mppi" || id == "mppi_cma") {
    require_positive(params, "sigma");
    require_positive(params, "lambda");
    require_int_at_least(params, "n_samples", 1);
    if (id == "mppi_cma") {
      for (const char* key : {"step_mean", "step_cov"}) {
        const double step = require_positive(params, key);
        if (step > 1.0) {
          throw ConfigError(std::string(key) + " must be at most 1");
        }
      }
    }
    return;
  }
  if (id == "cem") {
    require_positive(params, "sigma");
    const std::int64_t k = require_int_at_least(params, "n_samples", 1);
    if (!params.contains("n_elite")) {
      params["n_elite"] = std::max<std::int64_t>(1, k / 10);
    }
    const std::int64_t elite = require_int_at_least(params, "n_elite", 1);
    if (elite > k) throw ConfigError("n_elite must not exceed n_samples");
    return;
  }
  if (id == "random_restarts") {
    require_positive(params, "sigma");
    require_int_at_least(params, "n_restarts", 1);
    return;
  }
  if (id == "es") {
    require_positive(params, "sigma");
    require_int_at_least(params, "n_parents", 1);
    require_int_at_least(params, "n_offspring", 1);
    return;
  }
  throw std::logic_error("unvalidated algorithm id: " + id);
}

Box analytic_box(const std::string& id, Index dim) {
  double lo = -5.0, hi = 5.0;
  if (id == "rosenbrock") hi = 10.0;
  if (id == "rastrigin") {
    lo = -5.12;
    hi = 5.12;
  }
  if (id == "double_well_1d") {
    lo = -6.0;
    hi = 6.0;
  }
  return {Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
}

bool is_swingup(const std::string& id) {
  return id == "pendulum_swingup" || id == "cartpole_swingup" ||
         id == "double_cartpole_swingup";
}

}  // namespace

BenchmarkProblem benchmark_problem(const std::string& id,
                                   const nlohmann::json& params) {
  const ParamSpec& spec =
      find_spec(problem_registry(), id, problem_ids(), "problem");
  nlohmann::json resolved;
  try {
    resolved = resolve_params(params, spec, "problem_params");
    if (is_swingup(id)) {
      const int horizon =
          static_cast<int>(require_int_at_least(resolved, "horizon", 1));
      const double limit = require_positive(resolved, "limit");
      TrajectoryProblem tp;
      if (id == "pendulum_swingup") tp = pendulum_swingup(horizon, limit);
      if (id == "cartpole_swingup") tp = cartpole_swingup(horizon, limit);
      if (id == "double_cartpole_swingup") {
        tp = double_cartpole_swingup(horizon, limit);
      }
      Objective f = as_objective(tp);
      const Index dim = f.dim();
      return {id, std::move(f), Vector::Zero(dim),
              {Vector::Constant(dim, -limit), Vector::Constant(dim, limit)}};
    }
    const Index dim =
        static_cast<Index>(require_int_at_least(resolved, "dim", 1));
    const double x0 = resolved.at("x0").get<double>();
    if (!std::isfinite(x0)) throw ConfigError("x0 must be finite");
    AnalyticFunction af = analytic_function(id, dim);
    return {id, std::move(af.f), Vector::Constant(dim, x0),
            analytic_box(id, dim)};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed problem_params: ") + e.what());
  }
}

std::vector<std::string> problem_ids() {
  std::vector<std::string> ids;
  for (const auto& [name, spec] : problem_registry()) ids.push_back(name);
  return ids;
}

std::vector<std::string> algorithm_ids() {
  std::vector<std::string> ids;
  for (const auto& [name, spec] : algorithm_registry()) ids.push_back(name);
  return ids;
}

ExperimentConfig load_experiment(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "algorithm", "problem",   "params", "problem_params",
      "n_seeds",   "base_seed", "budget", "out"};
  check_object_keys(j, known, "experiment config");
  for (const char* required : {"algorithm", "problem"}) {
    if (!j.contains(required)) {
      throw ConfigError(std::string("experiment config is missing key: ") +
                        required);
    }
  }
  ExperimentConfig cfg;
  try {
    cfg.algorithm = j.at("algorithm").get<std::string>();
    cfg.problem = j.at("problem").get<std::string>();
    const ParamSpec& alg_spec = find_spec(algorithm_registry(), cfg.algorithm,
                                          algorithm_ids(), "algorithm");
    cfg.params = resolve_params(j.value("params", nlohmann::json::object()),
                                alg_spec, "params");
    validate_algorithm_params(cfg.algorithm, cfg.params);
    cfg.problem_params = j.value("problem_params", nlohmann::json::object());
    // Building the problem validates and resolves its parameters.
    const ParamSpec& prob_spec =
        find_spec(problem_registry(), cfg.problem, problem_ids(), "problem");
    benchmark_problem(cfg.problem, cfg.problem_params);
    cfg.problem_params =
        resolve_params(cfg.problem_params, prob_spec, "problem_params");

    if (j.contains("n_seeds")) {
      if (!j.at("n_seeds").is_number_integer() ||
          j.at("n_seeds").get<std::int64_t>() < 1) {
        throw ConfigError("n_seeds must be a positive integer");
      }
      cfg.n_seeds = j.at("n_seeds").get<int>();
    }
    cfg.base_seed = j.value("base_seed", cfg.base_seed);

    cfg.budget = SearchBudget::iters(100);
    if (j.contains("budget")) {
      const nlohmann::json& b = j.at("budget");
      check_object_keys(b, {"iters", "max_evals", "target"}, "budget");
      cfg.budget = SearchBudget{-1, -1, {}};
      if (b.contains("iters")) {
        cfg.budget.max_iters = b.at("iters").get<std::int64_t>();
        if (cfg.budget.max_iters < 1) {
          throw ConfigError("budget iters must be at least 1");
        }
      }
      if (b.contains("max_evals")) {
        cfg.budget.max_evals = b.at("max_evals").get<std::int64_t>();
        if (cfg.budget.max_evals < 1) {
          throw ConfigError("budget max_evals must be at least 1");
        }
      }
      if (b.contains("target")) {
        const double target = b.at("target").get<double>();
        if (!std::isfinite(target)) {
          throw ConfigError("budget target must be finite");
        }
        cfg.budget.target_value = target;
      }
      if (cfg.budget.max_iters < 0 && cfg.budget.max_evals < 0) {
        cfg.budget.max_iters = 100;
      }
    }
    cfg.out = j.value("out", cfg.out);
    if (cfg.out.empty()) throw ConfigError("out must not be empty");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["algorithm"] = cfg.algorithm;
  j["problem"] = cfg.problem;
  j["params"] = cfg.params;
  j["problem_params"] = cfg.problem_params;
  j["n_seeds"] = cfg.n_seeds;
  j["base_seed"] = cfg.base_seed;
  nlohmann::json b = nlohmann::json::object();
  if (cfg.budget.max_iters >= 0) b["iters"] = cfg.budget.max_iters;
  if (cfg.budget.max_evals >= 0) b["max_evals"] = cfg.budget.max_evals;
  if (cfg.budget.target_value) b["target"] = *cfg.budget.target_value;
  j["budget"] = b;
  j["out"] = cfg.out;
  return j;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::logic_error("quantile of an empty vector");
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw std::logic_error("quantile fraction outside [0, 1]");
  }
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<RunTrace>& traces) {
  if (traces.empty()) throw std::logic_error("no traces to summarize");
  std::size_t rows = traces.front().records().size();
  for (const RunTrace& t : traces) rows = std::min(rows, t.records().size());

  std::vector<SummaryRow> summary;
  summary.reserve(rows);
  const std::size_t n = traces.size();
  std::vector<double> evals(n), current(n), best(n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      const TraceRecord& rec = traces[k].records()[r];
      evals[k] = static_cast<double>(rec.n_evals);
      current[k] = rec.current;
      best[k] = rec.best;
    }
    std::sort(evals.begin(), evals.end());
    std::sort(current.begin(), current.end());
    std::sort(best.begin(), best.end());
    summary.push_back({traces.front().records()[r].iteration,
                       quantile_sorted(evals, 0.5),
                       quantile_sorted(current, 0.5),
                       quantile_sorted(current, 0.25),
                       quantile_sorted(current, 0.75),
                       quantile_sorted(best, 0.5), quantile_sorted(best, 0.25),
                       quantile_sorted(best, 0.75)});
  }
  return summary;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "iteration,n_evals,current_median,current_q25,current_q75,"
      "best_median,best_q25,best_q75\n";
  for (const SummaryRow& r : rows) {
    out += std::to_string(r.iteration);
    for (double v : {r.n_evals, r.current_median, r.current_q25, r.current_q75,
                     r.best_median, r.best_q25, r.best_q75}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

namespace {

RunTrace run_one_seed(const ExperimentConfig& cfg,
                      const BenchmarkProblem& problem, std::uint64_t seed) {
  const RngStream rng(cfg.base_seed, seed);
  const Index dim = problem.f.dim();
  const nlohmann::json& p = cfg.params;
  const auto sigma_cov = [&]() {
    const double sigma = p.at("sigma").get<double>();
    return CovarianceModel::scaled_identity(dim, sigma * sigma);
  };

  RunTrace trace;
  if (cfg.algorithm == "pure_random") {
    trace = pure_random_search(problem.f, problem.box, cfg.budget, rng).trace;
  } else if (cfg.algorithm == "greedy") {
    trace = greedy_local_search(problem.f, problem.x0, sigma_cov(), cfg.budget,
                                rng)
                .trace;
  } else if (cfg.algorithm == "metropolis") {
    trace = metropolis_local_search(problem.f, problem.x0, sigma_cov(),
                                    p.at("temperature").get<double>(),
                                    cfg.budget, rng)
                .trace;
  } else if (cfg.algorithm == "smoothed_gd" || cfg.algorithm == "sgld") {
    const double lambda = cfg.algorithm == "smoothed_gd" && p.contains("temperature")
                              ? p.at("temperature").get<double>()
                              : kNoTemperature;
    const SmoothingConfig sc{p.at("mu").get<double>(), lambda,
                             CovarianceModel::scaled_identity(dim, 1.0),
                             p.at("n_samples").get<int>()};
    const GradientEstimator estimator = [sc](const Objective& f,
                                             const Vector& x, RngStream s) {
      return std::isfinite(sc.lambda) ? lse_gradient(f, x, sc, s)
                                      : rs_central(f, x, sc, s);
    };
    if (cfg.algorithm == "smoothed_gd") {
      trace = approx_gradient_descent(problem.f, problem.x0, estimator,
                                      p.at("step").get<double>(), cfg.budget,
                                      rng)
                  .trace;
    } else {
      const AnnealingSchedule schedule{p.at("alpha0").get<double>(),
                                       p.at("lambda0").get<double>()};
      trace = sgld(problem.f, problem.x0, estimator, schedule, cfg.budget, rng)
                  .trace;
    }
  } else if (cfg.algorithm == "predictive") {
    trace = predictive_sampling(problem.f, problem.x0, sigma_cov(),
                                p.at("n_samples").get<int>(), cfg.budget, rng)
                .trace;
  } else if (cfg.algorithm == "mppi") {
    trace = mppi(problem.f, problem.x0, sigma_cov(),
                 p.at("n_samples").get<int>(), p.at("lambda").get<double>(),
                 cfg.budget, rng)
                .trace;
  } else if (cfg.algorithm == "mppi_cma") {
    const SearchDistribution dist0{problem.x0, sigma_cov()};
    trace = cma(problem.f, dist0, p.at("n_samples").get<int>(),
                WeightScheme::exponential_average(p.at("lambda").get<double>()),
                p.at("step_mean").get<double>(), p.at("step_cov").get<double>(),
                cfg.budget, rng)
                .trace;
  } else if (cfg.algorithm == "cem") {
    const SearchDistribution dist0{problem.x0, sigma_cov()};
    trace = cem(problem.f, dist0, p.at("n_samples").get<int>(),
                p.at("n_elite").get<int>(), cfg.budget, rng)
                .trace;
  } else if (cfg.algorithm == "random_restarts") {
    const Box box = problem.box;
    const InitSampler init = [box](RngStream s) {
      Vector x(box.lo.size());
      for (Index i = 0; i < x.size(); ++i) {
        x(i) = s.uniform(box.lo(i), box.hi(i));
      }
      return x;
    };
    trace = random_restarts(problem.f, init, sigma_cov(),
                            p.at("n_restarts").get<int>(), cfg.budget, rng)
                .trace;
  } else if (cfg.algorithm == "es") {
    const int n_parents = p.at("n_parents").get<int>();
    std::vector<Vector> points;
    points.reserve(std::size_t(n_parents));
    points.push_back(problem.x0);
    RngStream init = rng.substream(kInitLane);
    for (int r = 1; r < n_parents; ++r) {
      RngStream lane = init.substream(std::uint64_t(r));
      Vector x(dim);
      for (Index i = 0; i < dim; ++i) {
        x(i) = lane.uniform(problem.box.lo(i), problem.box.hi(i));
      }
      points.push_back(std::move(x));
    }
    const Population pop0(problem.f, points);
    trace = es_n_plus_lambda(problem.f, pop0, p.at("n_offspring").get<int>(),
                             sigma_cov(), cfg.budget, rng)
                .trace;
  } else {
    throw std::logic_error("unrunnable algorithm id: " + cfg.algorithm);
  }
  trace.set_meta(cfg.algorithm, seed);
  return trace;
}

std::string timestamp_utc() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw ConfigError("cannot write file: " + path.string());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const BenchmarkProblem problem =
      benchmark_problem(cfg.problem, cfg.problem_params);
  ExperimentResult result;
  result.config = cfg;
  result.traces.assign(std::size_t(cfg.n_seeds), RunTrace());
  parallel_for(cfg.n_seeds, [&](std::int64_t k) {
    result.traces[std::size_t(k)] =
        run_one_seed(cfg, problem, std::uint64_t(k));
  });
  result.summary = summarize(result.traces);
  return result;
}

void write_experiment(const ExperimentResult& result,
                      const std::string& out_dir, bool with_svg) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  for (std::size_t k = 0; k < result.traces.size(); ++k) {
    write_text(dir / ("trace_seed_" + std::to_string(k) + ".csv"),
               result.traces[k].to_csv());
  }
  write_text(dir / "summary.csv", summary_csv(result.summary));

  nlohmann::json meta;
  meta["config"] = to_json(result.config);
  meta["version"] = kVersion;
  nlohmann::json seeds = nlohmann::json::array();
  for (std::size_t k = 0; k < result.traces.size(); ++k) seeds.push_back(k);
  meta["seeds"] = seeds;
  meta["timestamp"] = timestamp_utc();
  write_text(dir / "metadata.json", meta.dump(2) + "\n");

  if (with_svg && result.summary.size() >= 2) {
    std::vector<double> x;
    std::vector<double> median, q25, q75;
    for (const SummaryRow& row : result.summary) {
      x.push_back(static_cast<double>(row.iteration));
      median.push_back(row.best_median);
      q25.push_back(row.best_q25);
      q75.push_back(row.best_q75);
    }
    write_text(dir / "summary.svg",
               svg_line_chart(result.config.algorithm + " on " +
                                  result.config.problem,
                              x,
                              {{"best_median", median},
                               {"best_q25", q25},
                               {"best_q75", q75}}));
  }
}

}  // namespace rsopt

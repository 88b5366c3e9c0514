// Benchmark CLI: run seeded experiments from JSON configs, render the
// smoothing-landscape probe tables, and list the registries. Exit codes:
// 0 success, 2 configuration error, 3 numeric failure.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rsopt/core/errors.hpp"
#include "rsopt/core/parallel.hpp"
#include "rsopt/harness/harness.hpp"

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rsopt::ConfigError("cannot read config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw rsopt::ConfigError(std::string("config is not valid JSON: ") +
                             e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw rsopt::ConfigError("cannot write file: " + path.string());
}

int run_command(const std::string& config_path, int seeds,
                const std::string& out_dir, bool svg) {
  rsopt::ExperimentConfig cfg = rsopt::load_experiment(read_json(config_path));
  if (seeds > 0) cfg.n_seeds = seeds;
  if (!out_dir.empty()) cfg.out = out_dir;
  const rsopt::ExperimentResult result = rsopt::run_experiment(cfg);
  rsopt::write_experiment(result, cfg.out, svg);
  if (!result.summary.empty()) {
    std::printf("%s on %s: %d seeds, final best median %s -> %s\n",
                cfg.algorithm.c_str(), cfg.problem.c_str(), cfg.n_seeds,
                rsopt::format_double(result.summary.back().best_median).c_str(),
                cfg.out.c_str());
  }
  return 0;
}

int probe_command(const std::string& kind, const std::string& config_path,
                  const std::string& out_dir, bool svg) {
  rsopt::ProbeConfig cfg = rsopt::load_probe(read_json(config_path));
  if (!out_dir.empty()) cfg.out = out_dir;
  const rsopt::AnalyticFunction fun =
      rsopt::analytic_function(cfg.function, cfg.dim);
  const auto grid = rsopt::grid_1d(cfg.grid_lo, cfg.grid_hi, cfg.grid_n);
  const rsopt::SmoothingConfig smoothing{
      cfg.mu, cfg.lambda,
      rsopt::CovarianceModel::scaled_identity(cfg.dim, 1.0), 2};
  const rsopt::RngStream rng(cfg.seed, 0);

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out);
  std::vector<double> x;
  for (const rsopt::Vector& p : grid) x.push_back(p(0));

  if (kind == "surrogates") {
    const auto rows =
        rsopt::surrogate_probe(fun.f, grid, smoothing, cfg.n_mc, rng);
    write_text(fs::path(cfg.out) / "surrogates.csv",
               rsopt::surrogate_probe_csv(rows));
    if (svg) {
      std::vector<double> f, mu, lse;
      for (const auto& r : rows) {
        f.push_back(r.value);
        mu.push_back(r.smoothed);
        lse.push_back(r.smoothed_lse);
      }
      write_text(fs::path(cfg.out) / "surrogates.svg",
                 rsopt::svg_line_chart(
                     cfg.function + " smoothing surrogates", x,
                     {{"f", f}, {"f_mu", mu}, {"f_mu_lambda", lse}}));
    }
    std::printf("wrote %zu probe rows -> %s\n", rows.size(), cfg.out.c_str());
  } else {
    const auto rows = rsopt::risk_probe(fun.f, grid, smoothing, cfg.n_mc, rng);
    write_text(fs::path(cfg.out) / "risk.csv", rsopt::risk_probe_csv(rows));
    if (svg) {
      std::vector<double> neutral, seeking, averse;
      for (const auto& r : rows) {
        neutral.push_back(r.neutral);
        seeking.push_back(r.risk_seeking);
        averse.push_back(r.risk_averse);
      }
      write_text(fs::path(cfg.out) / "risk.svg",
                 rsopt::svg_line_chart(cfg.function + " risk profiles", x,
                                       {{"neutral", neutral},
                                        {"risk_seeking", seeking},
                                        {"risk_averse", averse}}));
    }
    std::printf("wrote %zu probe rows -> %s\n", rows.size(), cfg.out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-order optimization benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, probe_config_path, out_dir, probe_kind, list_what;
  int seeds = 0;
  int threads = 0;
  bool svg = false;

  CLI::App* run_cmd =
      app.add_subcommand("run", "Run a seeded experiment from a JSON config");
  run_cmd->add_option("config", config_path, "experiment config JSON file")
      ->required();
  run_cmd->add_option("--seeds", seeds, "override the number of seeds");
  run_cmd->add_option("--out", out_dir, "override the output directory");
  run_cmd->add_option("--threads", threads,
                      "worker threads (results do not depend on this)");
  run_cmd->add_flag("--svg", svg, "also emit an SVG of the summary curves");

  CLI::App* probe_cmd =
      app.add_subcommand("probe", "Tabulate smoothing landscapes on a grid");
  probe_cmd
      ->add_option("kind", probe_kind, "surrogates or risk")
      ->required()
      ->check(CLI::IsMember({"surrogates", "risk"}));
  probe_cmd->add_option("config", probe_config_path, "probe config JSON file")
      ->required();
  probe_cmd->add_option("--out", out_dir, "override the output directory");
  probe_cmd->add_option("--threads", threads,
                        "worker threads (results do not depend on this)");
  probe_cmd->add_flag("--svg", svg, "also emit an SVG of the probe curves");

  CLI::App* list_cmd = app.add_subcommand("list", "Print registry ids");
  list_cmd->add_option("what", list_what, "algorithms or problems")
      ->required()
      ->check(CLI::IsMember({"algorithms", "problems"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (threads > 0) rsopt::set_thread_count(threads);
    if (run_cmd->parsed()) {
      if (run_cmd->count("--seeds") && seeds < 1) {
        throw rsopt::ConfigError("--seeds must be at least 1");
      }
      return run_command(config_path, run_cmd->count("--seeds") ? seeds : 0,
                         out_dir, svg);
    }
    if (probe_cmd->parsed()) {
      return probe_command(probe_kind, probe_config_path, out_dir, svg);
    }
    const auto ids = list_what == "algorithms" ? rsopt::algorithm_ids()
                                               : rsopt::problem_ids();
    for (const std::string& id : ids) std::printf("%s\n", id.c_str());
    return 0;
  } catch (const rsopt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const rsopt::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  }
}

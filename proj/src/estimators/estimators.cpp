#include "rsopt/estimators/estimators.hpp"

#include <cmath>
#include <string>

#include "rsopt/core/errors.hpp"
#include "rsopt/core/parallel.hpp"

namespace rsopt {

namespace {

void check_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw ConfigError("smoothing radius mu must be positive and finite");
  }
}

void check_cfg(const SmoothingConfig& cfg, const Vector& x) {
  check_mu(cfg.mu);
  if (cfg.n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (cfg.cov.dim() != x.size()) {
    throw ConfigError("covariance dim does not match point dim");
  }
  if (!(cfg.lambda > 0.0)) {
    throw ConfigError("temperature lambda must be positive (or infinite)");
  }
}

double eval_checked(const Objective& f, const Vector& x) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    throw NonFiniteError(x, v, "objective returned a non-finite value");
  }
  return v;
}

}  // namespace

Vector eval_points(const Objective& f, const Matrix& points) {
  Vector values(points.cols());
  parallel_for(points.cols(),
               [&](std::int64_t k) { values(k) = f(points.col(k)); });
  for (Index k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values(k))) {
      throw NonFiniteError(points.col(k), values(k),
                           "objective returned a non-finite value at sample " +
                               std::to_string(k));
    }
  }
  return values;
}

Matrix draw_perturbations(const CovarianceModel& cov, int n_samples,
                          const RngStream& rng) {
  Matrix eps(cov.dim(), n_samples);
  for (int k = 0; k < n_samples; ++k) {
    RngStream lane = rng.substream(k);
    eps.col(k) = cov.sample(lane);
  }
  return eps;
}

GradientEstimate fd_forward(const Objective& f, const Vector& x, double mu) {
  check_mu(mu);
  const Index n = x.size();
  const double fx = eval_checked(f, x);
  Matrix probes(n, n);
  for (Index j = 0; j < n; ++j) {
    probes.col(j) = x;
    probes(j, j) += mu;
  }
  const Vector values = eval_points(f, probes);
  GradientEstimate est;
  est.g = (values.array() - fx).matrix() / mu;
  est.n_evals = n + 1;
  est.base_value = fx;
  return est;
}

GradientEstimate coordinate_probe(const Objective& f, const Vector& x,
                                  double mu, Index j) {
  check_mu(mu);
  if (j < 0 || j >= x.size()) throw ConfigError("coordinate index out of range");
  const double fx = eval_checked(f, x);
  Vector probe = x;
  probe(j) += mu;
  const double fj = eval_checked(f, probe);
  GradientEstimate est;
  est.g = Vector::Zero(x.size());
  est.g(j) = (fj - fx) / mu;
  est.n_evals = 2;
  est.base_value = fx;
  return est;
}

GradientEstimate random_coordinate(const Objective& f, const Vector& x,
                                   double mu, RngStream rng) {
  const Index j = static_cast<Index>(rng.bounded(x.size()));
  return coordinate_probe(f, x, mu, j);
}

GradientEstimate sign_probe(const Objective& f, const Vector& x, double mu,
                            const Vector& delta) {
  check_mu(mu);
  if (delta.size() != x.size()) throw ConfigError("delta dim mismatch");
  for (Index i = 0; i < delta.size(); ++i) {
    if (delta(i) != 1.0 && delta(i) != -1.0) {
      throw ConfigError("sign probe entries must be +-1");
    }
  }
  const double fp = eval_checked(f, x + mu * delta);
  const double fm = eval_checked(f, x - mu * delta);
  GradientEstimate est;
  est.g = ((fp - fm) / (2.0 * mu)) * delta;
  est.n_evals = 2;
  return est;
}

GradientEstimate spsa(const Objective& f, const Vector& x, double mu,
                      RngStream rng) {
  Vector delta(x.size());
  for (Index i = 0; i < delta.size(); ++i) {
    delta(i) = rng.bounded(2) == 0 ? -1.0 : 1.0;
  }
  return sign_probe(f, x, mu, delta);
}

GradientEstimate rs_forward(const Objective& f, const Vector& x,
                            const SmoothingConfig& cfg, RngStream rng) {
  check_cfg(cfg, x);
  const int k_samples = cfg.n_samples;
  const double fx = eval_checked(f, x);
  const Matrix eps = draw_perturbations(cfg.cov, k_samples, rng);
  const Vector values = eval_points(f, x.replicate(1, k_samples) + cfg.mu * eps);

  Vector g = Vector::Zero(x.size());
  for (int k = 0; k < k_samples; ++k) {
    g += ((values(k) - fx) / cfg.mu) * cfg.cov.inverse_apply(eps.col(k));
  }
  GradientEstimate est;
  est.g = g / double(k_samples);
  est.n_evals = k_samples + 1;
  est.sample_values = values;
  est.base_value = fx;
  return est;
}

GradientEstimate rs_central(const Objective& f, const Vector& x,
                            const SmoothingConfig& cfg, RngStream rng) {
  check_cfg(cfg, x);
  const int k_samples = cfg.n_samples;
  const Matrix eps = draw_perturbations(cfg.cov, k_samples, rng);
  Matrix probes(x.size(), 2 * k_samples);
  probes.leftCols(k_samples) = x.replicate(1, k_samples) + cfg.mu * eps;
  probes.rightCols(k_samples) = x.replicate(1, k_samples) - cfg.mu * eps;
  const Vector values = eval_points(f, probes);

  Vector g = Vector::Zero(x.size());
  for (int k = 0; k < k_samples; ++k) {
    const double diff = values(k) - values(k + k_samples);
    g += (diff / (2.0 * cfg.mu)) * cfg.cov.inverse_apply(eps.col(k));
  }
  GradientEstimate est;
  est.g = g / double(k_samples);
  est.n_evals = 2 * k_samples;
  est.sample_values = values.head(k_samples);
  return est;
}

GradientEstimate lse_gradient_from_samples(const CovarianceModel& cov,
                                           double mu, double lambda,
                                           const Matrix& eps,
                                           const Vector& values) {
  check_mu(mu);
  if (values.size() != eps.cols() || values.size() < 1) {
    throw ConfigError("sample set is empty or inconsistently sized");
  }
  const double rho = values.minCoeff();
  double total = 0.0;
  Vector g = Vector::Zero(eps.rows());
  for (Index k = 0; k < values.size(); ++k) {
    const double w = std::exp(-(values(k) - rho) / lambda);
    total += w;
    g += w * cov.inverse_apply(eps.col(k));
  }
  GradientEstimate est;
  est.g = (-lambda / mu) * g / total;
  est.n_evals = 0;
  est.sample_values = values;
  return est;
}

GradientEstimate lse_gradient(const Objective& f, const Vector& x,
                              const SmoothingConfig& cfg, RngStream rng) {
  check_cfg(cfg, x);
  if (std::isinf(cfg.lambda)) return rs_forward(f, x, cfg, rng);
  if (cfg.n_samples < 2) throw ConfigError("lse_gradient needs K >= 2");
  const Matrix eps = draw_perturbations(cfg.cov, cfg.n_samples, rng);
  const Vector values =
      eval_points(f, x.replicate(1, cfg.n_samples) + cfg.mu * eps);
  GradientEstimate est =
      lse_gradient_from_samples(cfg.cov, cfg.mu, cfg.lambda, eps, values);
  est.n_evals = cfg.n_samples;
  return est;
}

double surrogate_rs_from_values(const Vector& values) {
  return values.mean();
}

double surrogate_lse_from_values(const Vector& values, double lambda) {
  if (std::isinf(lambda)) return surrogate_rs_from_values(values);
  const double rho = values.minCoeff();
  double acc = 0.0;
  for (Index k = 0; k < values.size(); ++k) {
    acc += std::exp(-(values(k) - rho) / lambda);
  }
  return rho - lambda * std::log(acc / double(values.size()));
}

SurrogateValues surrogate_both(const Objective& f, const Vector& x,
                               const SmoothingConfig& cfg, RngStream rng) {
  check_cfg(cfg, x);
  const Matrix eps = draw_perturbations(cfg.cov, cfg.n_samples, rng);
  const Vector values =
      eval_points(f, x.replicate(1, cfg.n_samples) + cfg.mu * eps);
  return {surrogate_rs_from_values(values),
          surrogate_lse_from_values(values, cfg.lambda), cfg.n_samples};
}

double surrogate_rs(const Objective& f, const Vector& x,
                    const SmoothingConfig& cfg, RngStream rng) {
  return surrogate_both(f, x, cfg, rng).rs;
}

double surrogate_lse(const Objective& f, const Vector& x,
                     const SmoothingConfig& cfg, RngStream rng) {
  return surrogate_both(f, x, cfg, rng).lse;
}

}  // namespace rsopt

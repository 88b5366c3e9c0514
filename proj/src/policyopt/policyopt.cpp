#include "rsopt/policyopt/policyopt.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "rsopt/core/errors.hpp"
#include "rsopt/core/parallel.hpp"
#include "rsopt/estimators/estimators.hpp"

namespace rsopt {
namespace {

void check_env(const Env& env) {
  if (!env.dynamics.step || env.dynamics.state_dim < 1 ||
      env.dynamics.control_dim < 1) {
    throw ConfigError("environment has no dynamics model");
  }
  if (!env.reward) throw ConfigError("environment has no reward");
  if (!env.init_state) throw ConfigError("environment has no init sampler");
  if (!(env.discount >= 0.0) || !(env.discount < 1.0)) {
    throw ConfigError("discount must lie in [0, 1)");
  }
  if (env.horizon_cap < 1) throw ConfigError("horizon cap must be >= 1");
}

void check_policy(const Env& env, const LinearPolicy& policy) {
  if (!policy.features) throw ConfigError("policy has no feature map");
  if (policy.theta.rows() != env.dynamics.control_dim) {
    throw ConfigError("policy rows must match the action dimension");
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("step size alpha must be positive and finite");
  }
}

Vector checked_init(const Env& env, RngStream rng) {
  Vector s = env.init_state(rng);
  if (s.size() != env.dynamics.state_dim || !s.allFinite()) {
    throw ConfigError("init sampler produced an invalid state");
  }
  return s;
}

// Shared core of the two smoothed actor updates; lambda = kNoTemperature
// makes every weight exactly 1 and reproduces the uniform average bit for
// bit, so the rs path is the infinite-temperature special case.
Matrix actor_delta(const Env& env, const LinearPolicy& policy,
                   const ActionNoise& noise, double lambda,
                   int n_trajectories, RngStream rng) {
  check_env(env);
  check_policy(env, policy);
  if (noise.cov.dim() != env.dynamics.control_dim) {
    throw ConfigError("noise covariance must match the action dimension");
  }
  if (noise.n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (!(lambda > 0.0)) {
    throw ConfigError("temperature lambda must be positive (or infinite)");
  }
  if (std::isfinite(lambda) && noise.n_samples < 2) {
    throw ConfigError("weighted actor update needs n_samples >= 2");
  }
  if (n_trajectories < 1) throw ConfigError("batch needs >= 1 trajectories");

  const int m = noise.n_samples;
  Matrix delta = Matrix::Zero(policy.theta.rows(), policy.theta.cols());
  for (int j = 0; j < n_trajectories; ++j) {
    RngStream traj = rng.substream(j);
    Vector s = checked_init(env, traj.substream(0));
    double disc = 1.0;
    for (int k = 0; k < env.horizon_cap; ++k) {
      const Vector a = policy.act(s);
      RngStream lane = traj.substream(k + 1);
      const Matrix eps = draw_perturbations(noise.cov, m, lane);
      const double fx = q_rollout(env, policy, s, a);
      Vector values(m);
      parallel_for(m, [&](std::int64_t i) {
        values(i) = q_rollout(env, policy, s, a + eps.col(i));
      });

      const double shift = values.maxCoeff();
      double total_weight = 0.0;
      Vector g = Vector::Zero(a.size());
      for (int i = 0; i < m; ++i) {
        const double w = std::exp((values(i) - shift) / lambda);
        total_weight += w;
        g += (w * (values(i) - fx)) * noise.cov.inverse_apply(eps.col(i));
      }
      g /= total_weight;
      delta.noalias() += disc * (g * policy.features(s).transpose());

      Vector next = env.dynamics.step(s, a);
      if (!next.allFinite()) {
        throw RolloutError(k, "dynamics produced a non-finite state at step " +
                                  std::to_string(k));
      }
      s = std::move(next);
      disc *= env.discount;
    }
  }
  return delta / double(n_trajectories);
}

}  // namespace

double q_rollout(const Env& env, const LinearPolicy& policy, const Vector& s,
                 const Vector& a) {
  check_env(env);
  check_policy(env, policy);
  if (s.size() != env.dynamics.state_dim ||
      a.size() != env.dynamics.control_dim) {
    throw ConfigError("state or action dimension mismatch");
  }
  Vector state = s;
  Vector action = a;
  double total = 0.0;
  double disc = 1.0;
  for (int k = 0; k < env.horizon_cap; ++k) {
    const double r = env.reward(state, action);
    if (!std::isfinite(r)) {
      throw RolloutError(k, "reward is non-finite at step " +
                                std::to_string(k));
    }
    total += disc * r;
    Vector next = env.dynamics.step(state, action);
    if (!next.allFinite()) {
      throw RolloutError(k, "dynamics produced a non-finite state at step " +
                                std::to_string(k));
    }
    state = std::move(next);
    action = policy.act(state);
    disc *= env.discount;
  }
  return total;
}

ValueEstimate value_objective(const Env& env, const LinearPolicy& policy,
                              int n_init, RngStream rng) {
  check_env(env);
  check_policy(env, policy);
  if (n_init < 1) throw ConfigError("n_init must be >= 1");

  std::vector<Vector> inits;
  inits.reserve(std::size_t(n_init));
  for (int i = 0; i < n_init; ++i) {
    inits.push_back(checked_init(env, rng.substream(i)));
  }
  Vector values(n_init);
  parallel_for(n_init, [&](std::int64_t i) {
    values(i) = q_rollout(env, policy, inits[std::size_t(i)],
                          policy.act(inits[std::size_t(i)]));
  });

  ValueEstimate est;
  est.mean = values.mean();
  if (n_init > 1) {
    const double ss = (values.array() - est.mean).square().sum();
    est.std_error = std::sqrt(ss / double(n_init - 1) / double(n_init));
  }
  return est;
}

LinearPolicy rs_actor_update(const Env& env, const LinearPolicy& policy,
                             const ActionNoise& noise, double alpha,
                             int n_trajectories, RngStream rng) {
  check_alpha(alpha);
  const Matrix delta =
      actor_delta(env, policy, noise, kNoTemperature, n_trajectories, rng);
  LinearPolicy out = policy;
  out.theta = policy.theta + alpha * delta;
  return out;
}

LinearPolicy lse_actor_update(const Env& env, const LinearPolicy& policy,
                              const ActionNoise& noise, double alpha,
                              int n_trajectories, RngStream rng) {
  check_alpha(alpha);
  const Matrix delta = actor_delta(env, policy, noise, noise.temperature,
                                   n_trajectories, rng);
  LinearPolicy out = policy;
  out.theta = policy.theta + alpha * delta;
  return out;
}

LinearPolicy reinforce_update(const Env& env, const LinearPolicy& policy,
                              const CovarianceModel& cov, double alpha,
                              int n_trajectories, RngStream rng) {
  check_env(env);
  check_policy(env, policy);
  check_alpha(alpha);
  if (cov.dim() != env.dynamics.control_dim) {
    throw ConfigError("noise covariance must match the action dimension");
  }
  if (n_trajectories < 1) throw ConfigError("batch needs >= 1 trajectories");

  const int horizon = env.horizon_cap;
  const int n_traj = n_trajectories;
  std::vector<std::vector<Vector>> states(static_cast<std::size_t>(n_traj));
  std::vector<std::vector<Vector>> noises(static_cast<std::size_t>(n_traj));
  std::vector<Vector> returns(static_cast<std::size_t>(n_traj));

  parallel_for(n_traj, [&](std::int64_t j) {
    RngStream traj = rng.substream(j);
    Vector s = checked_init(env, traj.substream(0));
    auto& traj_states = states[std::size_t(j)];
    auto& traj_noises = noises[std::size_t(j)];
    traj_states.reserve(std::size_t(horizon));
    traj_noises.reserve(std::size_t(horizon));
    Vector rewards(horizon);
    for (int k = 0; k < horizon; ++k) {
      RngStream lane = traj.substream(k + 1);
      Vector eps = cov.sample(lane);
      const Vector a = policy.act(s) + eps;
      const double r = env.reward(s, a);
      if (!std::isfinite(r)) {
        throw RolloutError(k,
                           "reward is non-finite at step " + std::to_string(k));
      }
      rewards(k) = r;
      traj_states.push_back(s);
      traj_noises.push_back(std::move(eps));
      Vector next = env.dynamics.step(s, a);
      if (!next.allFinite()) {
        throw RolloutError(k, "dynamics produced a non-finite state at step " +
                                  std::to_string(k));
      }
      s = std::move(next);
    }
    Vector togo(horizon);
    double acc = 0.0;
    for (int k = horizon - 1; k >= 0; --k) {
      acc = rewards(k) + env.discount * acc;
      togo(k) = acc;
    }
    returns[std::size_t(j)] = std::move(togo);
  });

  // per-depth batch-mean baseline
  Vector baseline = Vector::Zero(horizon);
  for (int j = 0; j < n_traj; ++j) baseline += returns[std::size_t(j)];
  baseline /= double(n_traj);

  Matrix delta = Matrix::Zero(policy.theta.rows(), policy.theta.cols());
  for (int j = 0; j < n_traj; ++j) {
    double disc = 1.0;
    for (int k = 0; k < horizon; ++k) {
      const double advantage = returns[std::size_t(j)](k) - baseline(k);
      delta.noalias() +=
          (disc * advantage) *
          (cov.inverse_apply(noises[std::size_t(j)][std::size_t(k)]) *
           policy.features(states[std::size_t(j)][std::size_t(k)])
               .transpose());
      disc *= env.discount;
    }
  }
  delta /= double(n_traj);

  LinearPolicy out = policy;
  out.theta = policy.theta + alpha * delta;
  return out;
}

Env pendulum_policy_env() {
  Env env;
  const DynamicsModel base = pendulum(0.05, 0.05);
  env.dynamics = base;
  env.dynamics.step = [inner = base.step](const Vector& s, const Vector& a) {
    return inner(s, a.cwiseMax(-6.0).cwiseMin(6.0));
  };
  env.reward = [](const Vector& s, const Vector& a) {
    const double swing = 1.0 - std::cos(s(0));
    return -(swing * swing + 0.1 * s(1) * s(1) + 0.001 * a.squaredNorm());
  };
  env.discount = 0.95;
  env.horizon_cap = 270;
  env.init_state = [](RngStream rng) {
    Vector s(2);
    s(0) = std::numbers::pi + rng.uniform(-1.0, 1.0);
    s(1) = rng.uniform(-1.0, 1.0);
    return s;
  };
  return env;
}

LinearPolicy pendulum_swingup_policy() {
  LinearPolicy policy;
  policy.theta = Matrix::Zero(1, 4);
  policy.features = [](const Vector& s) {
    Vector phi(4);
    phi << std::cos(s(0)), std::sin(s(0)), s(1), 1.0;
    return phi;
  };
  return policy;
}

PolicyTrainingConfig load_policy_training(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "env",   "algorithm", "gamma", "horizon_cap",    "m",
      "sigma", "lambda",    "alpha", "iters",          "n_trajectories",
      "seeds", "n_value_inits"};
  if (!j.is_object()) {
    throw ConfigError("training document must be a JSON object");
  }
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ConfigError("unknown training key: " + item.key());
    }
  }
  PolicyTrainingConfig cfg;
  cfg.env = j.value("env", cfg.env);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.horizon_cap = j.value("horizon_cap", cfg.horizon_cap);
  cfg.m = j.value("m", cfg.m);
  cfg.sigma = j.value("sigma", cfg.sigma);
  if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.iters = j.value("iters", cfg.iters);
  cfg.n_trajectories = j.value("n_trajectories", cfg.n_trajectories);
  cfg.n_value_inits = j.value("n_value_inits", cfg.n_value_inits);
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) throw ConfigError("seeds must not be empty");
  }
  if (j.contains("algorithm")) {
    cfg.algorithm = j.at("algorithm").get<std::string>();
  } else {
    cfg.algorithm = std::isfinite(cfg.lambda) ? "lse_actor" : "rs_actor";
  }

  if (cfg.env != "pendulum") {
    throw ConfigError("unknown training environment: " + cfg.env);
  }
  if (cfg.algorithm != "rs_actor" && cfg.algorithm != "lse_actor" &&
      cfg.algorithm != "reinforce") {
    throw ConfigError("unknown training algorithm: " + cfg.algorithm);
  }
  if (!(cfg.gamma >= 0.0) || !(cfg.gamma < 1.0)) {
    throw ConfigError("gamma must lie in [0, 1)");
  }
  if (cfg.horizon_cap < 1) throw ConfigError("horizon_cap must be >= 1");
  if (cfg.m < 1) throw ConfigError("m must be >= 1");
  if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) {
    throw ConfigError("sigma must be positive and finite");
  }
  if (!(cfg.lambda > 0.0)) throw ConfigError("lambda must be positive");
  check_alpha(cfg.alpha);
  if (cfg.iters < 1) throw ConfigError("iters must be >= 1");
  if (cfg.n_trajectories < 1) {
    throw ConfigError("n_trajectories must be >= 1");
  }
  if (cfg.n_value_inits < 1) throw ConfigError("n_value_inits must be >= 1");
  return cfg;
}

PolicyTrainingResult train_policy_full(const PolicyTrainingConfig& cfg,
                                       RngStream rng) {
  if (cfg.env != "pendulum") {
    throw ConfigError("unknown training environment: " + cfg.env);
  }
  Env env = pendulum_policy_env();
  env.discount = cfg.gamma;
  env.horizon_cap = cfg.horizon_cap;
  check_env(env);
  LinearPolicy policy = pendulum_swingup_policy();

  const ActionNoise noise{
      CovarianceModel::scaled_identity(env.dynamics.control_dim,
                                       cfg.sigma * cfg.sigma),
      cfg.m, cfg.lambda};
  const CovarianceModel explore = CovarianceModel::scaled_identity(
      env.dynamics.control_dim, cfg.sigma * cfg.sigma);

  // n_evals counts environment rollouts (each at most horizon_cap steps)
  const std::int64_t update_rollouts =
      cfg.algorithm == "reinforce"
          ? std::int64_t(cfg.n_trajectories)
          : std::int64_t(cfg.n_trajectories) *
                (1 + std::int64_t(cfg.horizon_cap) * (1 + cfg.m));

  PolicyTrainingResult result;
  result.policy = policy;
  std::int64_t evals = cfg.n_value_inits;
  const ValueEstimate v0 =
      value_objective(env, policy, cfg.n_value_inits, rng.substream(0));
  result.trace.add(0, evals, -v0.mean);

  for (int t = 1; t <= cfg.iters; ++t) {
    RngStream it = rng.substream(t);
    if (cfg.algorithm == "rs_actor") {
      policy = rs_actor_update(env, policy, noise, cfg.alpha,
                               cfg.n_trajectories, it.substream(0));
    } else if (cfg.algorithm == "lse_actor") {
      policy = lse_actor_update(env, policy, noise, cfg.alpha,
                                cfg.n_trajectories, it.substream(0));
    } else {
      policy = reinforce_update(env, policy, explore, cfg.alpha,
                                cfg.n_trajectories, it.substream(0));
    }
    const ValueEstimate v =
        value_objective(env, policy, cfg.n_value_inits, it.substream(1));
    evals += update_rollouts + cfg.n_value_inits;
    result.trace.add(t, evals, -v.mean);
  }
  result.policy = std::move(policy);
  return result;
}

RunTrace train_policy(const PolicyTrainingConfig& cfg, RngStream rng) {
  return train_policy_full(cfg, rng).trace;
}

}  // namespace rsopt

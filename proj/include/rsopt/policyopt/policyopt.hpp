#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsopt/core/covariance.hpp"
#include "rsopt/core/rng.hpp"
#include "rsopt/core/trace.hpp"
#include "rsopt/core/types.hpp"
#include "rsopt/estimators/estimators.hpp"
#include "rsopt/trajopt/trajopt.hpp"

// Policy optimization maximizes discounted reward; everything else in the
// library minimizes. The sign flip is confined to this module: updates
// ascend, and train_policy records the negated value in its trace so that
// the trace's running best keeps its usual meaning.

namespace rsopt {

// pi(s) = theta * features(s). The feature map is expected to end with a
// constant entry so the policy includes a bias.
struct LinearPolicy {
  Matrix theta;  // action_dim x feature_dim
  std::function<Vector(const Vector&)> features;

  Vector act(const Vector& state) const { return theta * features(state); }
};

// Deterministic environment with reward maximization and a truncation
// horizon. horizon_cap should satisfy discount^horizon_cap * reward scale
// <= 1e-6 so the truncated return stands in for the infinite sum.
struct Env {
  DynamicsModel dynamics;
  std::function<double(const Vector&, const Vector&)> reward;
  double discount = 0.95;
  std::function<Vector(RngStream)> init_state;
  int horizon_cap = 270;
};

// Action-space exploration noise shared by the smoothed actor updates; the
// temperature only matters to lse_actor_update, where kNoTemperature turns
// the weighting uniform and reproduces rs_actor_update exactly.
struct ActionNoise {
  CovarianceModel cov;
  int n_samples = 10;
  double temperature = kNoTemperature;
};

// Truncated discounted return with s_0 = s, a_0 = a, and on-policy actions
// afterwards. Deterministic and pure; a non-finite state or reward raises
// RolloutError naming the step.
double q_rollout(const Env& env, const LinearPolicy& policy, const Vector& s,
                 const Vector& a);

struct ValueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte Carlo average of the on-policy return over n_init sampled initial
// states; init i draws from rng.substream(i).
ValueEstimate value_objective(const Env& env, const LinearPolicy& policy,
                              int n_init, RngStream rng);

// Gradient-ascent step on the smoothed deterministic policy gradient: on
// each of n_trajectories on-policy rollouts, every visited state
// contributes discount^k times the forward-difference action gradient of
// the Q rollout, mapped through the policy Jacobian. Stream discipline:
// trajectory j uses rng.substream(j); its initial state draws from
// substream(0) of that and depth k draws noise from substream(k + 1), so a
// horizon-1 update is bit-identical to rs_forward at mu = 1 composed with
// the feature outer product.
LinearPolicy rs_actor_update(const Env& env, const LinearPolicy& policy,
                             const ActionNoise& noise, double alpha,
                             int n_trajectories, RngStream rng);

// As rs_actor_update, but each state's noise contributions are softmax
// weighted by exp(Q / temperature), favoring high-reward samples. Needs
// n_samples >= 2; temperature -> 0 follows the single best sample and
// kNoTemperature reproduces rs_actor_update bit for bit.
LinearPolicy lse_actor_update(const Env& env, const LinearPolicy& policy,
                              const ActionNoise& noise, double alpha,
                              int n_trajectories, RngStream rng);

// Stochastic policy gradient with Gaussian exploration A_k ~ N(pi(S_k),
// cov) and returns-to-go as the Q estimate, minus a per-depth batch-mean
// baseline. Uses the same stream discipline as rs_actor_update; note a
// single-trajectory batch is its own baseline and yields a zero update.
LinearPolicy reinforce_update(const Env& env, const LinearPolicy& policy,
                              const CovarianceModel& cov, double alpha,
                              int n_trajectories, RngStream rng);

// Pendulum swing-up environment for desk-scale training: torque clamped to
// |u| <= 6 inside the dynamics (dt = 0.05), reward -( (1 - cos theta)^2 +
// 0.1 theta_dot^2 + 0.001 u^2 ) on the commanded torque, discount 0.95,
// horizon cap 270, initial states uniform over theta in (pi - 1, pi + 1)
// and theta_dot in (-1, 1).
Env pendulum_policy_env();

// Zero-initialized linear policy over features (cos theta, sin theta,
// theta_dot, 1) for the pendulum environment.
LinearPolicy pendulum_swingup_policy();

// Training loop configuration; loadable from JSON with exactly these keys.
struct PolicyTrainingConfig {
  std::string env = "pendulum";
  std::string algorithm = "rs_actor";  // rs_actor | lse_actor | reinforce
  double gamma = 0.95;
  int horizon_cap = 270;
  int m = 10;
  double sigma = 0.1;
  double lambda = kNoTemperature;
  double alpha = 0.05;
  int iters = 200;
  int n_trajectories = 1;
  int n_value_inits = 16;
  std::vector<std::uint64_t> seeds = {0};
};

PolicyTrainingConfig load_policy_training(const nlohmann::json& j);

// Runs iters updates from the zero policy and returns the per-iteration
// value trace. Row t records current = -value_objective mean after t
// updates; n_evals counts environment rollouts. Iteration t >= 1 updates
// with root.substream(t).substream(0) and evaluates with
// root.substream(t).substream(1); row 0 evaluates the starting policy with
// root.substream(0).
RunTrace train_policy(const PolicyTrainingConfig& cfg, RngStream rng);

// Same loop returning the trained policy as well.
struct PolicyTrainingResult {
  LinearPolicy policy;
  RunTrace trace;
};
PolicyTrainingResult train_policy_full(const PolicyTrainingConfig& cfg,
                                       RngStream rng);

}  // namespace rsopt

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsopt/core/types.hpp"

namespace rsopt {

// Discrete-time dynamics x' = step(x, u) at a fixed timestep. The catalog
// models use semi-implicit Euler: velocities advance first, positions move
// with the updated velocities.
struct DynamicsModel {
  int state_dim = 0;
  int control_dim = 0;
  double dt = 0.01;
  std::function<Vector(const Vector&, const Vector&)> step;
};

// Torque-driven pendulum, state (theta, theta_dot) with theta = 0 upright,
// so the stable rest state is (pi, 0). m = 1 kg, l = 1 m, g = 9.81.
DynamicsModel pendulum(double damping = 0.05, double dt = 0.01);

// Force-driven cart with one uniform-rod pole, state (x, theta, x_dot,
// theta_dot), theta = 0 upright. Cart 1 kg, pole 0.1 kg, half-length 0.5 m.
DynamicsModel cartpole(double dt = 0.01);

// Adds a second uniform rod (0.1 kg, half-length 0.5 m) hinged at the first
// pole's tip; state (x, theta1, theta2, x_dot, theta1_dot, theta2_dot).
// The second pole's equation is scaled by 1/m2, so m2 = 0 is admissible and
// reduces the cart and first pole exactly to the cartpole model.
DynamicsModel double_cartpole(double m2 = 0.1, double dt = 0.01);

// Single-shooting problem over a horizon of control steps. The decision
// vector stacks controls time-major: entry t*control_dim + i is control i
// at step t. Bounds are enforced through a one-sided quadratic penalty so
// the objective stays smooth.
struct TrajectoryProblem {
  DynamicsModel dynamics;
  std::function<double(const Vector&, const Vector&)> running_cost;
  std::function<double(const Vector&)> terminal_cost;
  int horizon = 0;
  Vector x_init;
  Vector control_lo;
  Vector control_hi;
  double penalty_weight = 0.0;
};

struct Rollout {
  std::vector<Vector> states;     // horizon + 1, states[0] = x_init
  std::vector<Vector> controls;   // horizon
  std::vector<double> stage_costs;  // horizon running entries plus terminal
  double cost = 0.0;
};

// Propagates the dynamics under the flattened control sequence and sums
// running, penalty, and terminal costs. A non-finite state raises
// RolloutError naming the failing step.
Rollout rollout(const TrajectoryProblem& problem, const Vector& controls);

// The rollout cost as a pure objective over R^(horizon * control_dim).
Objective as_objective(const TrajectoryProblem& problem);

Vector flatten_controls(const std::vector<Vector>& controls);
std::vector<Vector> unflatten_controls(const Vector& flat, int control_dim);

// Receding-horizon warm start: drop the first step, repeat the last one.
Vector shift_controls(const Vector& flat, int control_dim);

// Swing-up stage cost w_angle * sum (1 - cos theta_i)^2 + w_velocity *
// |velocities|^2 + w_control * |u|^2; the terminal cost drops the control
// term. The sum runs over the model's pole angles; velocities are the
// second half of the state.
struct SwingUpWeights {
  double angle = 1.0;
  double velocity = 0.1;
  double control = 0.001;
};

// Complete swing-up problems starting at rest, hanging down, with symmetric
// control bounds |u| <= limit.
TrajectoryProblem pendulum_swingup(int horizon, double limit,
                                   SwingUpWeights weights = {},
                                   double penalty_weight = 100.0);
TrajectoryProblem cartpole_swingup(int horizon, double limit,
                                   SwingUpWeights weights = {},
                                   double penalty_weight = 100.0);
TrajectoryProblem double_cartpole_swingup(int horizon, double limit,
                                          SwingUpWeights weights = {},
                                          double penalty_weight = 100.0);

// Builds a swing-up problem from a JSON document with keys model, horizon,
// dt, x_init, bounds {lo, hi}, penalty_weight, cost_weights {angle,
// velocity, control}; unknown keys are rejected.
TrajectoryProblem load_problem(const nlohmann::json& j);

}  // namespace rsopt

#include "rsopt/trajopt/trajopt.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <utility>

#include "rsopt/core/errors.hpp"

namespace rsopt {
namespace {

constexpr double kGravity = 9.81;

void check_timestep(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ConfigError("dynamics timestep must be positive and finite");
  }
}

// Running and terminal swing-up costs over the given angle entries; the
// velocity half is the second half of the state.
void attach_swingup_cost(TrajectoryProblem& problem,
                         std::vector<int> angle_indices,
                         const SwingUpWeights& w) {
  const int n_states = problem.dynamics.state_dim;
  const int n_vel = n_states / 2;
  const auto position_cost = [angle_indices = std::move(angle_indices), w,
                              n_vel, n_states](const Vector& x) {
    double c = 0.0;
    for (int i : angle_indices) {
      const double a = 1.0 - std::cos(x(i));
      c += w.angle * a * a;
    }
    c += w.velocity * x.segment(n_states - n_vel, n_vel).squaredNorm();
    return c;
  };
  problem.running_cost = [position_cost, w](const Vector& x, const Vector& u) {
    return position_cost(x) + w.control * u.squaredNorm();
  };
  problem.terminal_cost = position_cost;
}

TrajectoryProblem swingup_problem(DynamicsModel dynamics, int horizon,
                                  double limit, const SwingUpWeights& w,
                                  double penalty_weight, Vector x_init,
                                  std::vector<int> angle_indices) {
  if (horizon < 1) {
    throw ConfigError("horizon must be at least 1");
  }
  if (!(limit > 0.0) || !std::isfinite(limit)) {
    throw ConfigError("control limit must be positive and finite");
  }
  if (penalty_weight < 0.0) {
    throw ConfigError("penalty weight must be nonnegative");
  }
  TrajectoryProblem problem;
  problem.dynamics = std::move(dynamics);
  problem.horizon = horizon;
  problem.x_init = std::move(x_init);
  problem.control_lo =
      Vector::Constant(problem.dynamics.control_dim, -limit);
  problem.control_hi = Vector::Constant(problem.dynamics.control_dim, limit);
  problem.penalty_weight = penalty_weight;
  attach_swingup_cost(problem, std::move(angle_indices), w);
  return problem;
}

}  // namespace

DynamicsModel pendulum(double damping, double dt) {
  check_timestep(dt);
  if (damping < 0.0) {
    throw ConfigError("damping must be nonnegative");
  }
  DynamicsModel m{2, 1, dt, {}};
  m.step = [damping, dt](const Vector& x, const Vector& u) {
    const double theta = x(0);
    const double omega = x(1);
    const double acc = kGravity * std::sin(theta) + u(0) - damping * omega;
    Vector next(2);
    next(1) = omega + dt * acc;
    next(0) = theta + dt * next(1);
    return next;
  };
  return m;
}

DynamicsModel cartpole(double dt) {
  check_timestep(dt);
  DynamicsModel m{4, 1, dt, {}};
  m.step = [dt](const Vector& x, const Vector& u) {
    const double mc = 1.0, mp = 0.1, l = 0.5;
    const double theta = x(1), xd = x(2), thd = x(3);
    const double s = std::sin(theta), c = std::cos(theta);
    const double force = u(0);
    const double thdd =
        (kGravity * s + c * (-force - mp * l * thd * thd * s) / (mc + mp)) /
        (l * (4.0 / 3.0 - mp * c * c / (mc + mp)));
    const double xdd =
        (force + mp * l * (thd * thd * s - thdd * c)) / (mc + mp);
    Vector next(4);
    next(2) = xd + dt * xdd;
    next(3) = thd + dt * thdd;
    next(0) = x(0) + dt * next(2);
    next(1) = theta + dt * next(3);
    return next;
  };
  return m;
}

DynamicsModel double_cartpole(double m2, double dt) {
  check_timestep(dt);
  if (m2 < 0.0) {
    throw ConfigError("second pole mass must be nonnegative");
  }
  DynamicsModel m{6, 1, dt, {}};
  m.step = [m2, dt](const Vector& x, const Vector& u) {
    const double mc = 1.0, m1 = 0.1, l1 = 0.5, l2 = 0.5;
    const double t1 = x(1), t2 = x(2);
    const double xd = x(3), w1 = x(4), w2 = x(5);
    const double s1 = std::sin(t1), c1 = std::cos(t1);
    const double s2 = std::sin(t2), c2 = std::cos(t2);
    const double sd = std::sin(t1 - t2), cd = std::cos(t1 - t2);

    // Lagrangian mass matrix for cart plus two uniform rods; the third row
    // (second pole) is divided by m2 so the m2 = 0 limit stays regular.
    Matrix mass(3, 3);
    mass << mc + m1 + m2, (m1 + 2.0 * m2) * l1 * c1, m2 * l2 * c2,
        (m1 + 2.0 * m2) * l1 * c1, (4.0 / 3.0 * m1 + 4.0 * m2) * l1 * l1,
        2.0 * m2 * l1 * l2 * cd,
        l2 * c2, 2.0 * l1 * l2 * cd, 4.0 / 3.0 * l2 * l2;
    Vector rhs(3);
    rhs << u(0) + (m1 + 2.0 * m2) * l1 * s1 * w1 * w1 +
               m2 * l2 * s2 * w2 * w2,
        (m1 + 2.0 * m2) * kGravity * l1 * s1 -
            2.0 * m2 * l1 * l2 * sd * w2 * w2,
        2.0 * l1 * l2 * sd * w1 * w1 + kGravity * l2 * s2;
    const Vector acc = mass.partialPivLu().solve(rhs);

    Vector next(6);
    next.segment(3, 3) = x.segment(3, 3) + dt * acc;
    next.segment(0, 3) = x.segment(0, 3) + dt * next.segment(3, 3);
    return next;
  };
  return m;
}

Rollout rollout(const TrajectoryProblem& problem, const Vector& controls) {
  const DynamicsModel& dyn = problem.dynamics;
  if (!dyn.step || dyn.state_dim < 1 || dyn.control_dim < 1) {
    throw ConfigError("trajectory problem has no dynamics model");
  }
  if (problem.horizon < 1) {
    throw ConfigError("horizon must be at least 1");
  }
  if (problem.x_init.size() != dyn.state_dim) {
    throw ConfigError("x_init dimension does not match the dynamics");
  }
  if (controls.size() !=
      Index(problem.horizon) * Index(dyn.control_dim)) {
    throw ConfigError("control vector length must be horizon * control_dim");
  }
  if (problem.control_lo.size() != dyn.control_dim ||
      problem.control_hi.size() != dyn.control_dim ||
      !(problem.control_lo.array() < problem.control_hi.array()).all()) {
    throw ConfigError("control bounds must satisfy lo < hi per dimension");
  }

  Rollout out;
  out.states.reserve(std::size_t(problem.horizon) + 1);
  out.controls.reserve(std::size_t(problem.horizon));
  out.stage_costs.reserve(std::size_t(problem.horizon) + 1);
  out.states.push_back(problem.x_init);

  for (int t = 0; t < problem.horizon; ++t) {
    const Vector u = controls.segment(Index(t) * dyn.control_dim,
                                      dyn.control_dim);
    double stage = problem.running_cost(out.states.back(), u);
    if (problem.penalty_weight > 0.0) {
      const auto over = (u - problem.control_hi).array().max(0.0);
      const auto under = (problem.control_lo - u).array().max(0.0);
      stage += problem.penalty_weight *
               (over.square().sum() + under.square().sum());
    }
    Vector next = dyn.step(out.states.back(), u);
    if (!next.allFinite()) {
      throw RolloutError(t, "dynamics produced a non-finite state at step " +
                                std::to_string(t));
    }
    out.states.push_back(std::move(next));
    out.controls.push_back(u);
    out.stage_costs.push_back(stage);
  }
  out.stage_costs.push_back(problem.terminal_cost(out.states.back()));
  out.cost = 0.0;
  for (double c : out.stage_costs) out.cost += c;
  return out;
}

Objective as_objective(const TrajectoryProblem& problem) {
  const Index n = Index(problem.horizon) * Index(problem.dynamics.control_dim);
  return Objective(n, [problem](const Vector& u) {
    return rollout(problem, u).cost;
  });
}

Vector flatten_controls(const std::vector<Vector>& controls) {
  if (controls.empty()) {
    throw ConfigError("control sequence is empty");
  }
  const Index nu = controls.front().size();
  Vector flat(Index(controls.size()) * nu);
  for (std::size_t t = 0; t < controls.size(); ++t) {
    if (controls[t].size() != nu) {
      throw ConfigError("control sequence entries differ in dimension");
    }
    flat.segment(Index(t) * nu, nu) = controls[t];
  }
  return flat;
}

std::vector<Vector> unflatten_controls(const Vector& flat, int control_dim) {
  if (control_dim < 1 || flat.size() % control_dim != 0) {
    throw ConfigError("flat control vector is not a whole number of steps");
  }
  std::vector<Vector> out;
  out.reserve(std::size_t(flat.size() / control_dim));
  for (Index t = 0; t * control_dim < flat.size(); ++t) {
    out.push_back(flat.segment(t * control_dim, control_dim));
  }
  return out;
}

Vector shift_controls(const Vector& flat, int control_dim) {
  if (control_dim < 1 || flat.size() % control_dim != 0 ||
      flat.size() < control_dim) {
    throw ConfigError("flat control vector is not a whole number of steps");
  }
  Vector out(flat.size());
  out.head(flat.size() - control_dim) = flat.tail(flat.size() - control_dim);
  out.tail(control_dim) = flat.tail(control_dim);
  return out;
}

TrajectoryProblem pendulum_swingup(int horizon, double limit,
                                   SwingUpWeights weights,
                                   double penalty_weight) {
  Vector x0(2);
  x0 << std::numbers::pi, 0.0;
  return swingup_problem(pendulum(), horizon, limit, weights, penalty_weight,
                         std::move(x0), {0});
}

TrajectoryProblem cartpole_swingup(int horizon, double limit,
                                   SwingUpWeights weights,
                                   double penalty_weight) {
  Vector x0(4);
  x0 << 0.0, std::numbers::pi, 0.0, 0.0;
  return swingup_problem(cartpole(), horizon, limit, weights, penalty_weight,
                         std::move(x0), {1});
}

TrajectoryProblem double_cartpole_swingup(int horizon, double limit,
                                          SwingUpWeights weights,
                                          double penalty_weight) {
  Vector x0(6);
  x0 << 0.0, std::numbers::pi, std::numbers::pi, 0.0, 0.0, 0.0;
  return swingup_problem(double_cartpole(), horizon, limit, weights,
                         penalty_weight, std::move(x0), {1, 2});
}

TrajectoryProblem load_problem(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "model",  "horizon",        "dt",          "x_init",
      "bounds", "penalty_weight", "cost_weights"};
  if (!j.is_object()) {
    throw ConfigError("problem document must be a JSON object");
  }
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ConfigError("unknown problem key: " + item.key());
    }
  }
  for (const char* required : {"model", "horizon", "bounds"}) {
    if (!j.contains(required)) {
      throw ConfigError(std::string("problem is missing key: ") + required);
    }
  }

  const std::string model = j.at("model").get<std::string>();
  const int horizon = j.at("horizon").get<int>();
  const double dt = j.value("dt", 0.01);
  const double penalty = j.value("penalty_weight", 100.0);

  SwingUpWeights w;
  if (j.contains("cost_weights")) {
    const nlohmann::json& cw = j.at("cost_weights");
    for (const auto& item : cw.items()) {
      if (item.key() != "angle" && item.key() != "velocity" &&
          item.key() != "control") {
        throw ConfigError("unknown cost_weights key: " + item.key());
      }
    }
    w.angle = cw.value("angle", w.angle);
    w.velocity = cw.value("velocity", w.velocity);
    w.control = cw.value("control", w.control);
  }

  const nlohmann::json& b = j.at("bounds");
  for (const auto& item : b.items()) {
    if (item.key() != "lo" && item.key() != "hi") {
      throw ConfigError("unknown bounds key: " + item.key());
    }
  }
  const double lo = b.at("lo").get<double>();
  const double hi = b.at("hi").get<double>();
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("bounds must be finite with lo < hi");
  }

  TrajectoryProblem problem;
  if (model == "pendulum") {
    problem = swingup_problem(pendulum(0.05, dt), horizon, 1.0, w, penalty,
                              (Vector(2) << std::numbers::pi, 0.0).finished(),
                              {0});
  } else if (model == "cartpole") {
    problem = swingup_problem(
        cartpole(dt), horizon, 1.0, w, penalty,
        (Vector(4) << 0.0, std::numbers::pi, 0.0, 0.0).finished(), {1});
  } else if (model == "double_cartpole") {
    problem = swingup_problem(
        double_cartpole(0.1, dt), horizon, 1.0, w, penalty,
        (Vector(6) << 0.0, std::numbers::pi, std::numbers::pi, 0.0, 0.0, 0.0)
            .finished(),
        {1, 2});
  } else {
    throw ConfigError("unknown dynamics model: " + model);
  }
  problem.control_lo = Vector::Constant(problem.dynamics.control_dim, lo);
  problem.control_hi = Vector::Constant(problem.dynamics.control_dim, hi);

  if (j.contains("x_init")) {
    const auto values = j.at("x_init").get<std::vector<double>>();
    if (Index(values.size()) != problem.dynamics.state_dim) {
      throw ConfigError("x_init length does not match the model state");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      problem.x_init(Index(i)) = values[i];
    }
  }
  return problem;
}

}  // namespace rsopt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "doctest.h"
#include "rsopt/core/covariance.hpp"
#include "rsopt/core/errors.hpp"
#include "rsopt/core/rng.hpp"
#include "rsopt/trajopt/trajopt.hpp"

using namespace rsopt;

namespace {

constexpr double kPi = std::numbers::pi;

// Mechanical energy of the cartpole from COM kinematics; independent of the
// equations of motion inside the model.
double cartpole_energy(const Vector& x) {
  const double mc = 1.0, mp = 0.1, l = 0.5, g = 9.81;
  const double th = x(1), xd = x(2), thd = x(3);
  const double kinetic = 0.5 * (mc + mp) * xd * xd +
                         mp * l * std::cos(th) * xd * thd +
                         (2.0 / 3.0) * mp * l * l * thd * thd;
  return kinetic + mp * g * l * std::cos(th);
}

// Same for the double cartpole: cart plus two uniform rods, rod 2 hinged at
// rod 1's tip, angles measured from upright.
double double_cartpole_energy(const Vector& x, double m2) {
  const double mc = 1.0, m1 = 0.1, l1 = 0.5, l2 = 0.5, g = 9.81;
  const double t1 = x(1), t2 = x(2), xd = x(3), w1 = x(4), w2 = x(5);
  const double c1 = std::cos(t1), s1 = std::sin(t1);
  const double c2 = std::cos(t2), s2 = std::sin(t2);
  const double v1x = xd + l1 * c1 * w1, v1y = -l1 * s1 * w1;
  const double v2x = xd + 2.0 * l1 * c1 * w1 + l2 * c2 * w2;
  const double v2y = -2.0 * l1 * s1 * w1 - l2 * s2 * w2;
  const double kinetic = 0.5 * mc * xd * xd +
                         0.5 * m1 * (v1x * v1x + v1y * v1y) +
                         (1.0 / 6.0) * m1 * l1 * l1 * w1 * w1 +
                         0.5 * m2 * (v2x * v2x + v2y * v2y) +
                         (1.0 / 6.0) * m2 * l2 * l2 * w2 * w2;
  return kinetic + m1 * g * l1 * c1 + m2 * g * (2.0 * l1 * c1 + l2 * c2);
}

double cartpole_drift(double dt, double seconds) {
  const DynamicsModel m = cartpole(dt);
  Vector x(4);
  x << 0.0, 0.5, 0.0, 0.0;
  const Vector u = Vector::Zero(1);
  const double e0 = cartpole_energy(x);
  double worst = 0.0;
  for (int t = 0; t < int(seconds / dt); ++t) {
    x = m.step(x, u);
    worst = std::max(worst, std::abs(cartpole_energy(x) - e0));
  }
  return worst / std::abs(e0);
}

double double_cartpole_drift(double dt, double seconds) {
  const DynamicsModel m = double_cartpole(0.1, dt);
  Vector x(6);
  x << 0.0, 0.4, 0.9, 0.0, 0.0, 0.0;
  const Vector u = Vector::Zero(1);
  const double e0 = double_cartpole_energy(x, 0.1);
  double worst = 0.0;
  for (int t = 0; t < int(seconds / dt); ++t) {
    x = m.step(x, u);
    worst =
        std::max(worst, std::abs(double_cartpole_energy(x, 0.1) - e0));
  }
  return worst / std::abs(e0);
}

}  // namespace

TEST_CASE("catalog models expose dimensions and timestep") {
  const DynamicsModel p = pendulum();
  CHECK(p.state_dim == 2);
  CHECK(p.control_dim == 1);
  CHECK(p.dt == 0.01);

  const DynamicsModel c = cartpole(0.02);
  CHECK(c.state_dim == 4);
  CHECK(c.control_dim == 1);
  CHECK(c.dt == 0.02);

  const DynamicsModel d = double_cartpole();
  CHECK(d.state_dim == 6);
  CHECK(d.control_dim == 1);

  CHECK_THROWS_AS(pendulum(0.05, 0.0), ConfigError);
  CHECK_THROWS_AS(pendulum(-0.1), ConfigError);
  CHECK_THROWS_AS(cartpole(-0.01), ConfigError);
  CHECK_THROWS_AS(double_cartpole(-1.0), ConfigError);
}

TEST_CASE("hanging states are equilibria") {
  const Vector u = Vector::Zero(1);

  Vector x(2);
  x << kPi, 0.0;
  const DynamicsModel p = pendulum();
  Vector y = x;
  for (int t = 0; t < 100; ++t) y = p.step(y, u);
  CHECK((y - x).lpNorm<Eigen::Infinity>() <= 1e-10);

  Vector xc(4);
  xc << 0.0, kPi, 0.0, 0.0;
  const DynamicsModel c = cartpole();
  Vector yc = xc;
  for (int t = 0; t < 100; ++t) yc = c.step(yc, u);
  CHECK((yc - xc).lpNorm<Eigen::Infinity>() <= 1e-10);

  Vector xd(6);
  xd << 0.0, kPi, kPi, 0.0, 0.0, 0.0;
  const DynamicsModel d = double_cartpole();
  Vector yd = xd;
  for (int t = 0; t < 100; ++t) yd = d.step(yd, u);
  CHECK((yd - xd).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("upright pendulum is unstable") {
  const DynamicsModel p = pendulum(0.0);
  Vector x(2);
  x << 0.01, 0.0;
  const Vector u = Vector::Zero(1);
  for (int t = 0; t < 200; ++t) x = p.step(x, u);
  CHECK(std::abs(x(0)) > 0.5);
}

TEST_CASE("pendulum small oscillations have the linearized period") {
  // theta'' = -g * dev for small deviations about hanging, so the period is
  // 2 pi / sqrt(g). Measured from upward zero crossings at amplitude 0.05.
  const DynamicsModel p = pendulum(0.0, 0.01);
  Vector x(2);
  x << kPi + 0.05, 0.0;
  const Vector u = Vector::Zero(1);
  double prev = x(0) - kPi;
  double first = -1.0, last = -1.0;
  int crossings = 0;
  for (int t = 1; t <= 2000; ++t) {
    x = p.step(x, u);
    const double dev = x(0) - kPi;
    if (prev <= 0.0 && dev > 0.0) {
      const double tc = (t - dev / (dev - prev)) * 0.01;
      (first < 0.0 ? first : last) = tc;
      ++crossings;
    }
    prev = dev;
  }
  REQUIRE(crossings >= 5);
  const double period = (last - first) / (crossings - 1);
  const double expected = 2.0 * kPi / std::sqrt(9.81);
  CHECK(std::abs(period / expected - 1.0) <= 5e-3);
}

TEST_CASE("damping removes pendulum energy") {
  const DynamicsModel p = pendulum(0.5, 0.01);
  Vector x(2);
  x << kPi + 1.0, 0.0;
  const Vector u = Vector::Zero(1);
  for (int t = 0; t < 4000; ++t) x = p.step(x, u);
  CHECK(std::abs(x(0) - kPi) < 0.01);
  CHECK(std::abs(x(1)) < 0.01);
}

TEST_CASE("cartpole energy drift is small and first order in the timestep") {
  // Semi-implicit Euler does not conserve this coupled energy exactly; the
  // error shrinks linearly with dt. Over 4 s the pinned drifts are 3.9% at
  // dt = 0.01 and 0.40% at dt = 0.001.
  const double coarse = cartpole_drift(0.01, 4.0);
  const double mid = cartpole_drift(0.005, 4.0);
  const double fine = cartpole_drift(0.001, 4.0);
  CHECK(fine <= 5e-3);
  CHECK(coarse / mid == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("double cartpole energy drift is small and first order") {
  // An independent COM-kinematics energy converges to conservation as dt
  // shrinks, which checks the mass matrix against physics it never sees.
  const double coarse = double_cartpole_drift(1e-3, 2.0);
  const double fine = double_cartpole_drift(1e-4, 2.0);
  CHECK(fine <= 5e-3);
  CHECK(coarse / fine == doctest::Approx(10.0).epsilon(0.15));
}

TEST_CASE("massless second pole reduces to the cartpole") {
  const DynamicsModel d = double_cartpole(0.0, 0.01);
  const DynamicsModel c = cartpole(0.01);
  Vector xd(6), xc(4);
  xd << 0.0, 0.4, 0.9, 0.0, 0.0, 0.0;
  xc << 0.0, 0.4, 0.0, 0.0;
  for (int t = 0; t < 100; ++t) {
    const Vector u = Vector::Constant(1, 2.0 * std::sin(0.05 * t));
    xd = d.step(xd, u);
    xc = c.step(xc, u);
    CHECK(std::abs(xd(0) - xc(0)) <= 1e-12);
    CHECK(std::abs(xd(1) - xc(1)) <= 1e-12);
    CHECK(std::abs(xd(3) - xc(2)) <= 1e-12);
    CHECK(std::abs(xd(4) - xc(3)) <= 1e-12);
  }
  // the free second pole still swings on its own
  CHECK(std::abs(xd(2) - 0.9) > 0.5);
}

TEST_CASE("zero controls from rest cost the hand-computed value") {
  // The pendulum stays at (pi, 0), so every stage pays w_angle * (1 -
  // cos(pi))^2 = 4 and nothing else: 5 running stages plus the terminal
  // stage give 24.
  const TrajectoryProblem p = pendulum_swingup(5, 2.0);
  const Rollout r = rollout(p, Vector::Zero(5));
  CHECK(r.cost == 24.0);
  REQUIRE(r.states.size() == 6);
  REQUIRE(r.controls.size() == 5);
  REQUIRE(r.stage_costs.size() == 6);
  CHECK(r.stage_costs.front() == 4.0);
  CHECK(r.stage_costs.back() == 4.0);
}

TEST_CASE("rollout reports the trajectory and additive stage costs") {
  const TrajectoryProblem p = cartpole_swingup(8, 10.0);
  Vector u(8);
  for (int i = 0; i < 8; ++i) u(i) = 3.0 * std::sin(1.0 + i);
  const Rollout r = rollout(p, u);
  REQUIRE(r.states.size() == 9);
  REQUIRE(r.controls.size() == 8);
  REQUIRE(r.stage_costs.size() == 9);
  CHECK(r.states.front() == p.x_init);
  double total = 0.0;
  for (double c : r.stage_costs) total += c;
  CHECK(r.cost == total);
  for (int t = 0; t < 8; ++t) {
    CHECK(r.controls[t](0) == u(t));
    CHECK(r.states[t + 1] == p.dynamics.step(r.states[t], r.controls[t]));
  }
}

TEST_CASE("penalty applies only outside the control bounds") {
  TrajectoryProblem p = pendulum_swingup(3, 2.0);
  TrajectoryProblem unpenalized = p;
  unpenalized.penalty_weight = 0.0;

  Vector inside(3);
  inside << -2.0, 0.5, 2.0;
  CHECK(rollout(p, inside).cost == rollout(unpenalized, inside).cost);

  Vector outside(3);
  outside << 0.0, 3.5, -2.5;
  const double diff =
      rollout(p, outside).cost - rollout(unpenalized, outside).cost;
  CHECK(diff == doctest::Approx(100.0 * (1.5 * 1.5 + 0.5 * 0.5)));
}

TEST_CASE("objective matches the rollout cost and is pure") {
  const TrajectoryProblem p = double_cartpole_swingup(10, 20.0);
  const Objective f = as_objective(p);
  CHECK(f.dim() == 10);
  RngStream rng(3, 0);
  Vector u(10);
  for (int i = 0; i < 10; ++i) u(i) = rng.uniform(-20.0, 20.0);
  const double a = f(u);
  CHECK(a == rollout(p, u).cost);
  CHECK(f(u) == a);
}

TEST_CASE("control sequences flatten time-major and round-trip") {
  std::vector<Vector> seq;
  for (int t = 0; t < 4; ++t) {
    Vector v(2);
    v << 10.0 * t, 10.0 * t + 1.0;
    seq.push_back(v);
  }
  const Vector flat = flatten_controls(seq);
  REQUIRE(flat.size() == 8);
  for (int t = 0; t < 4; ++t) {
    CHECK(flat(2 * t) == 10.0 * t);
    CHECK(flat(2 * t + 1) == 10.0 * t + 1.0);
  }
  const std::vector<Vector> back = unflatten_controls(flat, 2);
  REQUIRE(back.size() == 4);
  for (int t = 0; t < 4; ++t) CHECK(back[t] == seq[t]);

  CHECK_THROWS_AS(flatten_controls({}), ConfigError);
  CHECK_THROWS_AS(unflatten_controls(flat, 3), ConfigError);
  CHECK_THROWS_AS(unflatten_controls(flat, 0), ConfigError);
}

TEST_CASE("shift drops the first step and repeats the last") {
  Vector flat(6);
  flat << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  const Vector shifted = shift_controls(flat, 2);
  Vector expected(6);
  expected << 3.0, 4.0, 5.0, 6.0, 5.0, 6.0;
  CHECK(shifted == expected);

  const Vector single = shift_controls((Vector(2) << 7.0, 8.0).finished(), 2);
  CHECK(single == (Vector(2) << 7.0, 8.0).finished());
  CHECK_THROWS_AS(shift_controls(flat, 4), ConfigError);
}

TEST_CASE("per-step covariance blocks perturb single steps") {
  // A block-diagonal covariance over the decision vector with one block per
  // step only moves that step's controls.
  const TrajectoryProblem p = pendulum_swingup(6, 2.0);
  const CovarianceModel cov = CovarianceModel::block_diagonal(
      std::vector<Matrix>(6, Matrix::Identity(1, 1)));
  REQUIRE(cov.dim() == 6);
  const Vector base = Vector::Zero(6);
  for (int t = 0; t < 6; ++t) {
    Vector delta = Vector::Zero(6);
    delta(t) = 0.5;
    const Rollout a = rollout(p, base);
    const Rollout b = rollout(p, base + delta);
    for (int s = 0; s <= t; ++s) CHECK(a.states[s] == b.states[s]);
    CHECK(b.states[t + 1] != a.states[t + 1]);
  }
}

TEST_CASE("diverging dynamics raise an error naming the step") {
  TrajectoryProblem p;
  p.dynamics.state_dim = 1;
  p.dynamics.control_dim = 1;
  p.dynamics.step = [](const Vector& x, const Vector&) {
    if (x(0) > 4.5) {
      return Vector::Constant(1, std::numeric_limits<double>::quiet_NaN())
          .eval();
    }
    return (x.array() + 1.0).matrix().eval();
  };
  p.running_cost = [](const Vector&, const Vector&) { return 0.0; };
  p.terminal_cost = [](const Vector&) { return 0.0; };
  p.horizon = 10;
  p.x_init = Vector::Zero(1);
  p.control_lo = Vector::Constant(1, -1.0);
  p.control_hi = Vector::Constant(1, 1.0);

  try {
    rollout(p, Vector::Zero(10));
    FAIL("expected RolloutError");
  } catch (const RolloutError& e) {
    CHECK(e.time_index() == 5);
    CHECK(std::string(e.what()).find("step 5") != std::string::npos);
  }
  CHECK_THROWS_AS(as_objective(p)(Vector::Zero(10)), NumericError);
}

TEST_CASE("rollout rejects inconsistent problems") {
  TrajectoryProblem p = pendulum_swingup(4, 2.0);
  CHECK_THROWS_AS(rollout(p, Vector::Zero(5)), ConfigError);

  TrajectoryProblem bad_init = p;
  bad_init.x_init = Vector::Zero(3);
  CHECK_THROWS_AS(rollout(bad_init, Vector::Zero(4)), ConfigError);

  TrajectoryProblem bad_bounds = p;
  bad_bounds.control_lo = Vector::Constant(1, 2.0);
  CHECK_THROWS_AS(rollout(bad_bounds, Vector::Zero(4)), ConfigError);

  TrajectoryProblem empty;
  CHECK_THROWS_AS(rollout(empty, Vector::Zero(0)), ConfigError);

  CHECK_THROWS_AS(pendulum_swingup(0, 2.0), ConfigError);
  CHECK_THROWS_AS(pendulum_swingup(10, 0.0), ConfigError);
  CHECK_THROWS_AS(pendulum_swingup(10, 2.0, {}, -1.0), ConfigError);
}

TEST_CASE("swing-up weights propagate into the cost") {
  const SwingUpWeights w{2.0, 0.3, 0.05};
  const TrajectoryProblem p = pendulum_swingup(1, 5.0, w, 0.0);
  const Vector u = Vector::Constant(1, 2.0);
  const Rollout r = rollout(p, u);
  // stage from (pi, 0): angle 2 * 4, control 0.05 * 4
  CHECK(r.stage_costs[0] == doctest::Approx(8.0 + 0.2));
  const Vector& x1 = r.states[1];
  const double a1 = 1.0 - std::cos(x1(0));
  CHECK(r.stage_costs[1] ==
        doctest::Approx(2.0 * a1 * a1 + 0.3 * x1(1) * x1(1)));
}

TEST_CASE("problems load from json") {
  const nlohmann::json j = {
      {"model", "cartpole"},
      {"horizon", 50},
      {"dt", 0.02},
      {"bounds", {{"lo", -10.0}, {"hi", 10.0}}},
      {"penalty_weight", 50.0},
      {"cost_weights", {{"angle", 2.0}, {"velocity", 0.2}, {"control", 0.01}}},
  };
  const TrajectoryProblem p = load_problem(j);
  CHECK(p.dynamics.state_dim == 4);
  CHECK(p.dynamics.dt == 0.02);
  CHECK(p.horizon == 50);
  CHECK(p.control_lo(0) == -10.0);
  CHECK(p.control_hi(0) == 10.0);
  CHECK(p.penalty_weight == 50.0);
  CHECK(p.x_init == (Vector(4) << 0.0, kPi, 0.0, 0.0).finished());
}

TEST_CASE("loaded problems match directly built ones") {
  const nlohmann::json j = {
      {"model", "pendulum"},
      {"horizon", 20},
      {"bounds", {{"lo", -2.0}, {"hi", 2.0}}},
  };
  const TrajectoryProblem loaded = load_problem(j);
  const TrajectoryProblem built = pendulum_swingup(20, 2.0);
  RngStream rng(11, 0);
  Vector u(20);
  for (int i = 0; i < 20; ++i) u(i) = rng.uniform(-3.0, 3.0);
  CHECK(rollout(loaded, u).cost == rollout(built, u).cost);
}

TEST_CASE("json loading rejects malformed documents") {
  const nlohmann::json good = {
      {"model", "pendulum"},
      {"horizon", 10},
      {"bounds", {{"lo", -2.0}, {"hi", 2.0}}},
  };
  CHECK_NOTHROW(load_problem(good));

  nlohmann::json j = good;
  j["modle"] = "pendulum";
  CHECK_THROWS_AS(load_problem(j), ConfigError);

  j = good;
  j.erase("horizon");
  CHECK_THROWS_AS(load_problem(j), ConfigError);

  j = good;
  j["bounds"] = {{"lo", -1.0}, {"hi", 2.0}};
  const TrajectoryProblem asym = load_problem(j);
  CHECK(asym.control_lo(0) == -1.0);
  CHECK(asym.control_hi(0) == 2.0);

  j = good;
  j["bounds"] = {{"lo", 2.0}, {"hi", 2.0}};
  CHECK_THROWS_AS(load_problem(j), ConfigError);

  j = good;
  j["bounds"] = {{"lo", -2.0}, {"hi", 2.0}, {"mid", 0.0}};
  CHECK_THROWS_AS(load_problem(j), ConfigError);

  j = good;
  j["cost_weights"] = {{"angle", 1.0}, {"angel", 2.0}};
  CHECK_THROWS_AS(load_problem(j), ConfigError);

  j = good;
  j["model"] = "acrobot";
  CHECK_THROWS_AS(load_problem(j), ConfigError);

  j = good;
  j["x_init"] = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(load_problem(j), ConfigError);

  j = good;
  j["x_init"] = {1.5, 0.0};
  const TrajectoryProblem p = load_problem(j);
  CHECK(p.x_init(0) == 1.5);
}

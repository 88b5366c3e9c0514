#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <atomic>
#include <cmath>
#include <memory>

#include "doctest.h"
#include "rsopt/core/errors.hpp"
#include "rsopt/core/parallel.hpp"
#include "rsopt/estimators/estimators.hpp"

using namespace rsopt;

namespace {

Objective counted(Index dim, std::function<double(const Vector&)> fn,
                  std::shared_ptr<std::atomic<std::int64_t>> counter) {
  return Objective(dim, [fn = std::move(fn), counter](const Vector& x) {
    counter->fetch_add(1);
    return fn(x);
  });
}

SmoothingConfig identity_cfg(Index dim, double mu, int k,
                             double lambda = kNoTemperature) {
  return {mu, lambda, CovarianceModel::scaled_identity(dim, 1.0), k};
}

const Objective sphere2(2, [](const Vector& x) { return x.squaredNorm(); });

}  // namespace

TEST_CASE("fd_forward on constant, linear, and quadratic objectives") {
  Objective constant(3, [](const Vector&) { return 4.25; });
  GradientEstimate est = fd_forward(constant, Vector::Zero(3), 0.7);
  CHECK(est.g.isZero(0.0));
  CHECK(est.n_evals == 4);

  Objective linear(2, [](const Vector& x) { return x(0) + 2.0 * x(1); });
  est = fd_forward(linear, Vector::Zero(2), 0.5);
  CHECK(est.g(0) == 1.0);
  CHECK(est.g(1) == 2.0);

  Vector x(2);
  x << 1.0, 0.0;
  est = fd_forward(sphere2, x, 0.1);
  CHECK(est.g(0) == doctest::Approx(2.1).epsilon(1e-12));
  CHECK(est.g(1) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("coordinate probes reproduce the exhaustive bias law") {
  // f = |x|^2 at (1,1): probe j=0 gives (2.1, 0), j=1 gives (0, 2.1);
  // the average over axes is (grad f + (mu/2) diag H) / n.
  Vector x = Vector::Ones(2);
  GradientEstimate e0 = coordinate_probe(sphere2, x, 0.1, 0);
  GradientEstimate e1 = coordinate_probe(sphere2, x, 0.1, 1);
  CHECK(e0.g(0) == doctest::Approx(2.1).epsilon(1e-12));
  CHECK(e0.g(1) == 0.0);
  CHECK(e1.g(1) == doctest::Approx(2.1).epsilon(1e-12));
  Vector avg = (e0.g + e1.g) / 2.0;
  CHECK(avg(0) == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(avg(1) == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(e0.n_evals == 2);
}

TEST_CASE("random_coordinate draws every axis") {
  RngStream rng(2024);
  bool seen[2] = {false, false};
  for (int t = 0; t < 32; ++t) {
    GradientEstimate est =
        random_coordinate(sphere2, Vector::Ones(2), 0.1, rng.substream(t));
    for (int j = 0; j < 2; ++j) {
      if (est.g(j) != 0.0) seen[j] = true;
    }
    CHECK(est.n_evals == 2);
  }
  CHECK(seen[0]);
  CHECK(seen[1]);
}

TEST_CASE("sign_probe matches the hand-computed linear case") {
  Objective linear(2, [](const Vector& x) { return x(0) + 2.0 * x(1); });
  Vector delta(2);
  delta << 1.0, -1.0;
  GradientEstimate est = sign_probe(linear, Vector::Zero(2), 0.5, delta);
  CHECK(est.g(0) == -1.0);
  CHECK(est.g(1) == 1.0);
  CHECK(est.n_evals == 2);

  Vector bad(2);
  bad << 1.0, 0.5;
  CHECK_THROWS_AS(sign_probe(linear, Vector::Zero(2), 0.5, bad), ConfigError);
}

TEST_CASE("exhaustive spsa average equals the gradient for quadratics") {
  const Index n = 3;
  Matrix h(n, n);
  h << 4.0, 1.0, -0.5, 1.0, 3.0, 0.25, -0.5, 0.25, 2.0;
  Vector a(n);
  a << 1.0, -2.0, 0.5;
  Objective quad(n, [&](const Vector& y) {
    return 0.5 * y.dot(h * y) + a.dot(y);
  });
  Vector x(n);
  x << 0.3, -1.1, 0.7;
  Vector grad = h * x + a;

  Vector mean = Vector::Zero(n);
  for (int bits = 0; bits < (1 << n); ++bits) {
    Vector delta(n);
    for (Index i = 0; i < n; ++i) delta(i) = (bits >> i) & 1 ? 1.0 : -1.0;
    mean += sign_probe(quad, x, 0.37, delta).g;
  }
  mean /= double(1 << n);
  CHECK((mean - grad).norm() <= 1e-12 * grad.norm());
}

TEST_CASE("spsa draws sign vectors and stays exact on linear objectives") {
  Objective linear(3, [](const Vector& x) { return 2.0 * x.sum(); });
  RngStream rng(5);
  GradientEstimate est = spsa(linear, Vector::Zero(3), 0.25, rng);
  // g = (a' delta) delta for a = (2,2,2): |a' delta| is 2 or 6, and every
  // entry has that magnitude.
  double mag = std::abs(est.g(0));
  CHECK((mag == 2.0 || mag == 6.0));
  for (Index i = 0; i < 3; ++i) CHECK(std::abs(est.g(i)) == mag);
  CHECK(est.n_evals == 2);
}

TEST_CASE("rs_forward single sample matches the hand formula bitwise") {
  Objective linear(2, [](const Vector& x) { return 3.0 * x(0) + 4.0 * x(1); });
  SmoothingConfig cfg = identity_cfg(2, 1.0, 1);
  RngStream rng(9, 3);

  RngStream lane = rng.substream(0);
  Vector eps = cfg.cov.sample(lane);
  Vector x = Vector::Zero(2);
  double expect_coeff = (3.0 * eps(0) + 4.0 * eps(1)) - 0.0;
  GradientEstimate est = rs_forward(linear, x, cfg, rng);
  CHECK(est.g(0) == expect_coeff * eps(0));
  CHECK(est.g(1) == expect_coeff * eps(1));
  CHECK(est.n_evals == 2);
  CHECK(est.sample_values.size() == 1);
}

TEST_CASE("rs_forward is unbiased on quadratics (Monte Carlo)") {
  const Index n = 3;
  Matrix h(n, n);
  h << 3.0, 0.5, 0.0, 0.5, 2.0, -0.25, 0.0, -0.25, 1.5;
  Objective quad(n, [&](const Vector& y) { return 0.5 * y.dot(h * y); });
  Vector x(n);
  x << 1.0, -0.5, 0.25;
  Vector grad = h * x;

  SmoothingConfig cfg = identity_cfg(n, 0.3, 1);
  const int trials = 20000;
  Matrix samples(n, trials);
  RngStream rng(77, 1);
  for (int t = 0; t < trials; ++t) {
    samples.col(t) = rs_forward(quad, x, cfg, rng.substream(t)).g;
  }
  Vector mean = samples.rowwise().mean();
  for (Index i = 0; i < n; ++i) {
    double sd = std::sqrt(
        (samples.row(i).array() - mean(i)).square().sum() / (trials - 1));
    double se = sd / std::sqrt(double(trials));
    CHECK(std::abs(mean(i) - grad(i)) <= 3.0 * se);
  }
}

TEST_CASE("rs_central reproduces the monomial expansion") {
  // f = y^3 at x=1, mu=1: per-sample g = 3 eps^2 + eps^4.
  Objective cubic(1, [](const Vector& y) { return y(0) * y(0) * y(0); });
  SmoothingConfig cfg = identity_cfg(1, 1.0, 1);
  for (int t = 0; t < 20; ++t) {
    RngStream rng(13, t);
    RngStream lane = rng.substream(0);
    double eps = cfg.cov.sample(lane)(0);
    GradientEstimate est = rs_central(cubic, Vector::Ones(1), cfg, rng);
    double expect = 3.0 * eps * eps + eps * eps * eps * eps;
    CHECK(est.g(0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(est.n_evals == 2);
  }
}

TEST_CASE("lse_gradient worked two-sample example") {
  Matrix eps(2, 2);
  eps << 1.0, 0.0, 0.0, 1.0;
  Vector values(2);
  values << 0.0, std::log(3.0);
  CovarianceModel cov = CovarianceModel::scaled_identity(2, 1.0);
  GradientEstimate est =
      lse_gradient_from_samples(cov, 1.0, 1.0, eps, values);
  CHECK(est.g(0) == doctest::Approx(-0.75).epsilon(1e-14));
  CHECK(est.g(1) == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(est.sample_values(1) == values(1));
}

TEST_CASE("lse_gradient constant objective with an antithetic pair is zero") {
  Matrix eps(2, 2);
  eps << 0.7, -0.7, -0.3, 0.3;
  Vector values = Vector::Constant(2, 5.5);
  CovarianceModel cov = CovarianceModel::scaled_identity(2, 1.0);
  GradientEstimate est =
      lse_gradient_from_samples(cov, 0.5, 2.0, eps, values);
  CHECK(est.g.isZero(0.0));
}

namespace {
// Antithetic sample set (pairs e, -e) so the mean perturbation is exactly 0.
void antithetic_set(const CovarianceModel& cov, int pairs, RngStream rng,
                    Matrix& eps) {
  eps.resize(cov.dim(), 2 * pairs);
  for (int i = 0; i < pairs; ++i) {
    RngStream lane = rng.substream(i);
    eps.col(2 * i) = cov.sample(lane);
    eps.col(2 * i + 1) = -eps.col(2 * i);
  }
}
}  // namespace

TEST_CASE("lse_gradient large-lambda limit on a fixed antithetic sample set") {
  const Index n = 4;
  Matrix h = Matrix::Identity(n, n) * 2.0;
  h(0, 1) = h(1, 0) = 0.6;
  Vector a(n);
  a << 0.5, -1.0, 0.25, 2.0;
  Objective quad(n, [&](const Vector& y) {
    return 0.5 * y.dot(h * y) + a.dot(y);
  });
  Vector x = Vector::Ones(n) * 0.4;
  Vector grad = h * x + a;

  CovarianceModel cov = CovarianceModel::scaled_identity(n, 1.0);
  Matrix eps;
  antithetic_set(cov, 512, RngStream(3, 8), eps);
  const double mu = 0.2;
  Vector values(eps.cols());
  for (Index k = 0; k < eps.cols(); ++k) values(k) = quad(x + mu * eps.col(k));

  GradientEstimate g6 = lse_gradient_from_samples(cov, mu, 1e6, eps, values);
  GradientEstimate g9 = lse_gradient_from_samples(cov, mu, 1e9, eps, values);
  CHECK((g6.g - g9.g).norm() <= 1e-6 * (1.0 + g9.g.norm()));

  // The limit is the centered rs average; antithetic cancellation removes
  // the mean term exactly.
  Vector rs_mean = Vector::Zero(n);
  double fbar = values.mean();
  for (Index k = 0; k < eps.cols(); ++k) {
    rs_mean += ((values(k) - fbar) / mu) * eps.col(k);
  }
  rs_mean /= double(eps.cols());
  CHECK((g9.g - rs_mean).norm() <= 1e-6 * (1.0 + rs_mean.norm()));

  // And the centered average estimates the true gradient; compare with the
  // spread of the independent pair means.
  for (Index i = 0; i < n; ++i) {
    const int pairs = int(eps.cols()) / 2;
    double mean_i = 0.0, m2 = 0.0;
    for (int p = 0; p < pairs; ++p) {
      double t = (((values(2 * p) - fbar) / mu) * eps(i, 2 * p) +
                  ((values(2 * p + 1) - fbar) / mu) * eps(i, 2 * p + 1)) /
                 2.0;
      mean_i += t;
    }
    mean_i /= pairs;
    for (int p = 0; p < pairs; ++p) {
      double t = (((values(2 * p) - fbar) / mu) * eps(i, 2 * p) +
                  ((values(2 * p + 1) - fbar) / mu) * eps(i, 2 * p + 1)) /
                 2.0;
      m2 += (t - mean_i) * (t - mean_i);
    }
    double se = std::sqrt(m2 / (pairs - 1) / pairs);
    CHECK(std::abs(mean_i - grad(i)) <= 3.0 * se);
  }
}

TEST_CASE("lse_gradient with infinite lambda routes to rs_forward") {
  Objective quad(2, [](const Vector& y) { return y.squaredNorm(); });
  SmoothingConfig cfg = identity_cfg(2, 0.5, 4, kNoTemperature);
  Vector x(2);
  x << 0.2, -0.4;
  GradientEstimate a = lse_gradient(quad, x, cfg, RngStream(21, 4));
  GradientEstimate b = rs_forward(quad, x, cfg, RngStream(21, 4));
  CHECK(a.g == b.g);
  CHECK(a.n_evals == b.n_evals);
}

TEST_CASE("surrogate values: worked example and large-lambda agreement") {
  Vector values(2);
  values << 0.0, std::log(4.0);
  CHECK(surrogate_rs_from_values(values) ==
        doctest::Approx(std::log(4.0) / 2.0).epsilon(1e-14));
  CHECK(surrogate_lse_from_values(values, 1.0) ==
        doctest::Approx(std::log(8.0 / 5.0)).epsilon(1e-14));

  RngStream rng(6);
  Vector big(100);
  for (Index i = 0; i < big.size(); ++i) big(i) = rng.uniform(-3.0, 7.0);
  double spread = big.maxCoeff() - big.minCoeff();
  double rs = surrogate_rs_from_values(big);
  double lse = surrogate_lse_from_values(big, 1e6);
  CHECK(std::abs(lse - rs) <= 1e-4 * spread);
}

TEST_CASE("surrogates on a constant objective return the constant") {
  Objective constant(2, [](const Vector&) { return -3.5; });
  SmoothingConfig cfg = identity_cfg(2, 1.0, 8, 2.0);
  SurrogateValues s = surrogate_both(constant, Vector::Zero(2), cfg,
                                     RngStream(1, 1));
  CHECK(s.rs == -3.5);
  CHECK(s.lse == -3.5);
}

TEST_CASE("Jensen ordering and lambda monotonicity on shared values") {
  RngStream rng(88);
  for (int trial = 0; trial < 50; ++trial) {
    Vector values(16);
    for (Index i = 0; i < values.size(); ++i) {
      values(i) = rng.uniform(-2.0, 2.0);
    }
    double rs = surrogate_rs_from_values(values);
    double prev = -std::numeric_limits<double>::infinity();
    for (double lambda : {0.05, 0.2, 1.0, 5.0, 50.0, 1e4}) {
      double lse = surrogate_lse_from_values(values, lambda);
      CHECK(lse <= rs);
      CHECK(lse >= prev);
      prev = lse;
    }
  }
  // equality iff all values coincide
  Vector flat = Vector::Constant(8, 1.25);
  CHECK(surrogate_lse_from_values(flat, 0.7) ==
        surrogate_rs_from_values(flat));
}

namespace {
// Integer-valued objective: double arithmetic on its outputs is exact, so
// constant shifts cancel bit-for-bit inside the estimators.
const Objective lattice(2, [](const Vector& x) {
  double a = std::round(x(0) * 2.0);
  double b = std::round(x(1) * 2.0);
  return a * a + 3.0 * b * b;
});
}  // namespace

TEST_CASE("translation invariance is bit-exact on integer-valued objectives") {
  const double c = 1000.0;
  Objective shifted(2, [&](const Vector& x) { return lattice(x) + c; });
  Vector x(2);
  x << 0.4, -1.2;

  CHECK(fd_forward(lattice, x, 0.7).g == fd_forward(shifted, x, 0.7).g);
  CHECK(random_coordinate(lattice, x, 0.7, RngStream(4)).g ==
        random_coordinate(shifted, x, 0.7, RngStream(4)).g);
  CHECK(spsa(lattice, x, 0.7, RngStream(5)).g ==
        spsa(shifted, x, 0.7, RngStream(5)).g);

  SmoothingConfig cfg = identity_cfg(2, 1.3, 6, 2.0);
  CHECK(rs_forward(lattice, x, cfg, RngStream(6)).g ==
        rs_forward(shifted, x, cfg, RngStream(6)).g);
  CHECK(rs_central(lattice, x, cfg, RngStream(7)).g ==
        rs_central(shifted, x, cfg, RngStream(7)).g);
  CHECK(lse_gradient(lattice, x, cfg, RngStream(8)).g ==
        lse_gradient(shifted, x, cfg, RngStream(8)).g);
}

TEST_CASE("translation invariance holds to rounding for generic shifts") {
  Objective quad(2, [](const Vector& y) { return y.squaredNorm(); });
  const double c = 0.1234567;
  Objective shifted(2, [&](const Vector& y) { return y.squaredNorm() + c; });
  Vector x(2);
  x << 0.3, 0.9;
  SmoothingConfig cfg = identity_cfg(2, 0.8, 8, 1.5);
  Vector a = lse_gradient(quad, x, cfg, RngStream(11)).g;
  Vector b = lse_gradient(shifted, x, cfg, RngStream(11)).g;
  CHECK((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
}

TEST_CASE("n_evals matches actual objective calls for every estimator") {
  auto counter = std::make_shared<std::atomic<std::int64_t>>(0);
  Objective f = counted(
      3, [](const Vector& x) { return x.squaredNorm(); }, counter);
  Vector x = Vector::Ones(3);
  SmoothingConfig cfg = identity_cfg(3, 0.5, 7, 2.0);

  auto reset = [&] { counter->store(0); };

  reset();
  auto e1 = fd_forward(f, x, 0.5);
  CHECK(e1.n_evals == counter->load());
  reset();
  auto e2 = random_coordinate(f, x, 0.5, RngStream(1));
  CHECK(e2.n_evals == counter->load());
  reset();
  auto e3 = spsa(f, x, 0.5, RngStream(2));
  CHECK(e3.n_evals == counter->load());
  reset();
  auto e4 = rs_forward(f, x, cfg, RngStream(3));
  CHECK(e4.n_evals == counter->load());
  CHECK(counter->load() == 8);
  reset();
  auto e5 = rs_central(f, x, cfg, RngStream(4));
  CHECK(e5.n_evals == counter->load());
  CHECK(counter->load() == 14);
  reset();
  auto e6 = lse_gradient(f, x, cfg, RngStream(5));
  CHECK(e6.n_evals == counter->load());
  CHECK(counter->load() == 7);
  reset();
  auto e7 = surrogate_both(f, x, cfg, RngStream(6));
  CHECK(e7.n_evals == counter->load());
}

TEST_CASE("non-finite objective values carry the probe point") {
  Objective partial(1, [](const Vector& y) { return std::sqrt(y(0)); });
  SmoothingConfig cfg = identity_cfg(1, 5.0, 16);
  try {
    rs_forward(partial, Vector::Constant(1, 0.25), cfg, RngStream(10));
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.point()(0) < 0.0);
    CHECK(std::isnan(e.value()));
  }
}

TEST_CASE("estimates do not depend on the worker count") {
  Objective quad(4, [](const Vector& y) { return y.squaredNorm(); });
  SmoothingConfig cfg = identity_cfg(4, 0.5, 64, 1.0);
  Vector x = Vector::Ones(4);
  set_thread_count(1);
  Vector g1 = lse_gradient(quad, x, cfg, RngStream(42, 9)).g;
  set_thread_count(5);
  Vector g5 = lse_gradient(quad, x, cfg, RngStream(42, 9)).g;
  set_thread_count(0);
  CHECK(g1 == g5);
}

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace rsopt {

// Invalid configuration or arguments; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric failure during optimization; the CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cholesky pivot failure: the leading minor of the given order is not positive.
class NotSpdError : public NumericError {
 public:
  NotSpdError(int order, const std::string& what)
      : NumericError(what), order_(order) {}
  int order() const { return order_; }

 private:
  int order_;
};

// Objective returned NaN/Inf; carries the probe point that produced it.
class NonFiniteError : public NumericError {
 public:
  NonFiniteError(Eigen::VectorXd point, double value, const std::string& what)
      : NumericError(what), point_(std::move(point)), value_(value) {}
  const Eigen::VectorXd& point() const { return point_; }
  double value() const { return value_; }

 private:
  Eigen::VectorXd point_;
  double value_;
};

// Iterate escaped the divergence guard; names the step size in force.
class DivergedError : public NumericError {
 public:
  DivergedError(double step_size, double norm, const std::string& what)
      : NumericError(what), step_size_(step_size), norm_(norm) {}
  double step_size() const { return step_size_; }
  double norm() const { return norm_; }

 private:
  double step_size_;
  double norm_;
};

// Dynamics propagation left the finite range; names the failing time step.
class RolloutError : public NumericError {
 public:
  RolloutError(int time_index, const std::string& what)
      : NumericError(what), time_index_(time_index) {}
  int time_index() const { return time_index_; }

 private:
  int time_index_;
};

// Covariance update produced a non-SPD matrix; carries the offending weights.
class CovarianceUpdateError : public NotSpdError {
 public:
  CovarianceUpdateError(int order, Eigen::VectorXd weights,
                        const std::string& what)
      : NotSpdError(order, what), weights_(std::move(weights)) {}
  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  Eigen::VectorXd weights_;
};

}  // namespace rsopt

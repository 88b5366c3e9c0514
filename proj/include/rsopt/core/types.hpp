#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <utility>

namespace rsopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Objective to minimize. The callable must be pure (same input -> bit-identical
// output) and safe to call from several workers at once; every reproducibility
// guarantee in this library leans on that contract.
class Objective {
 public:
  Objective(Index dim, std::function<double(const Vector&)> fn)
      : dim_(dim), fn_(std::move(fn)) {}

  Index dim() const { return dim_; }
  double operator()(const Vector& x) const { return fn_(x); }

 private:
  Index dim_;
  std::function<double(const Vector&)> fn_;
};

// Axis-aligned box, lo(i) < hi(i) for all i.
struct Box {
  Vector lo;
  Vector hi;
};

}  // namespace rsopt

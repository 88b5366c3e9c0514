#pragma once

#include <vector>

#include "rsopt/core/rng.hpp"
#include "rsopt/core/types.hpp"

namespace rsopt {

enum class CovKind { ScaledIdentity, Diagonal, BlockDiagonal, Full };

// Immutable SPD sampling covariance in one of four structured forms.
// Full and BlockDiagonal hold their lower Cholesky factors, computed once at
// construction; a failed pivot throws NotSpdError naming the offending
// leading minor. Internally Full is a BlockDiagonal with one block, so the
// two kinds share every code path bit for bit.
class CovarianceModel {
 public:
  // sigma2 = 0 is admitted (degenerate sampling returns zeros) but
  // inverse_apply on it throws; every other kind must be strictly SPD.
  static CovarianceModel scaled_identity(Index dim, double sigma2);
  static CovarianceModel diagonal(Vector diag);
  static CovarianceModel block_diagonal(std::vector<Matrix> blocks);
  static CovarianceModel full(const Matrix& sigma);

  CovKind kind() const { return kind_; }
  Index dim() const { return dim_; }

  // eps ~ N(0, Sigma). Consumes exactly dim() normal draws in coordinate
  // order for every kind, so structurally equal models sample identically.
  Vector sample(RngStream& rng) const;

  Vector apply(const Vector& v) const;          // Sigma v
  Vector inverse_apply(const Vector& v) const;  // Sigma^{-1} v
  Matrix dense() const;

  // Structural blocks: Full exposes one block spanning dim(); Diagonal and
  // ScaledIdentity expose none.
  const std::vector<Index>& block_sizes() const { return block_sizes_; }
  Matrix block_dense(std::size_t b) const;

  double sigma2() const { return sigma2_; }
  const Vector& diagonal_values() const { return diag_; }

 private:
  CovarianceModel() = default;

  CovKind kind_ = CovKind::ScaledIdentity;
  Index dim_ = 0;
  double sigma2_ = 1.0;
  Vector diag_;
  std::vector<Matrix> factors_;  // lower Cholesky per block
  std::vector<Index> block_sizes_;
  std::vector<Index> block_offsets_;
};

// Lower Cholesky of the lower triangle of a; throws NotSpdError with the
// 1-based order of the first non-positive leading minor.
Matrix cholesky_lower(const Matrix& a);

// Free-function spelling of CovarianceModel::sample.
Vector gaussian_sample(const CovarianceModel& cov, RngStream& rng);

// Uniform draw from the unit sphere S^{dim-1}; dim >= 1.
Vector sphere_sample(Index dim, RngStream& rng);

}  // namespace rsopt

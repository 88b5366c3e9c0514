#include "rsopt/core/covariance.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "rsopt/core/errors.hpp"

namespace rsopt {

Matrix cholesky_lower(const Matrix& a) {
  const Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    const double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw NotSpdError(static_cast<int>(j + 1),
                        "matrix not positive definite: leading minor of order " +
                            std::to_string(j + 1) + " is not positive");
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

CovarianceModel CovarianceModel::scaled_identity(Index dim, double sigma2) {
  if (dim < 1) throw ConfigError("covariance dim must be >= 1");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw ConfigError("scaled identity needs sigma2 >= 0");
  }
  CovarianceModel m;
  m.kind_ = CovKind::ScaledIdentity;
  m.dim_ = dim;
  m.sigma2_ = sigma2;
  return m;
}

CovarianceModel CovarianceModel::diagonal(Vector diag) {
  if (diag.size() < 1) throw ConfigError("covariance dim must be >= 1");
  for (Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0) || !std::isfinite(diag(i))) {
      throw NotSpdError(static_cast<int>(i + 1),
                        "diagonal covariance entry " + std::to_string(i + 1) +
                            " is not positive");
    }
  }
  CovarianceModel m;
  m.kind_ = CovKind::Diagonal;
  m.dim_ = diag.size();
  m.diag_ = std::move(diag);
  return m;
}

CovarianceModel CovarianceModel::block_diagonal(std::vector<Matrix> blocks) {
  if (blocks.empty()) throw ConfigError("block diagonal needs >= 1 block");
  CovarianceModel m;
  m.kind_ = CovKind::BlockDiagonal;
  m.dim_ = 0;
  for (const Matrix& b : blocks) {
    if (b.rows() != b.cols() || b.rows() < 1) {
      throw ConfigError("covariance blocks must be square and non-empty");
    }
    m.block_offsets_.push_back(m.dim_);
    m.block_sizes_.push_back(b.rows());
    m.factors_.push_back(cholesky_lower(b));
    m.dim_ += b.rows();
  }
  return m;
}

CovarianceModel CovarianceModel::full(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1) {
    throw ConfigError("full covariance must be square and non-empty");
  }
  CovarianceModel m;
  m.kind_ = CovKind::Full;
  m.dim_ = sigma.rows();
  m.block_offsets_ = {0};
  m.block_sizes_ = {sigma.rows()};
  m.factors_ = {cholesky_lower(sigma)};
  return m;
}

Vector CovarianceModel::sample(RngStream& rng) const {
  Vector z(dim_);
  for (Index i = 0; i < dim_; ++i) z(i) = rng.normal();
  switch (kind_) {
    case CovKind::ScaledIdentity:
      return std::sqrt(sigma2_) * z;
    case CovKind::Diagonal:
      return diag_.cwiseSqrt().cwiseProduct(z);
    case CovKind::BlockDiagonal:
    case CovKind::Full: {
      Vector out(dim_);
      for (std::size_t b = 0; b < factors_.size(); ++b) {
        out.segment(block_offsets_[b], block_sizes_[b]) =
            factors_[b] * z.segment(block_offsets_[b], block_sizes_[b]);
      }
      return out;
    }
  }
  return z;
}

Vector CovarianceModel::apply(const Vector& v) const {
  switch (kind_) {
    case CovKind::ScaledIdentity:
      return sigma2_ * v;
    case CovKind::Diagonal:
      return diag_.cwiseProduct(v);
    case CovKind::BlockDiagonal:
    case CovKind::Full: {
      Vector out(dim_);
      for (std::size_t b = 0; b < factors_.size(); ++b) {
        const auto seg = v.segment(block_offsets_[b], block_sizes_[b]);
        out.segment(block_offsets_[b], block_sizes_[b]) =
            factors_[b] * (factors_[b].transpose() * seg);
      }
      return out;
    }
  }
  return v;
}

Vector CovarianceModel::inverse_apply(const Vector& v) const {
  switch (kind_) {
    case CovKind::ScaledIdentity:
      if (sigma2_ == 0.0) {
        throw NotSpdError(1, "cannot invert degenerate scaled identity");
      }
      return v / sigma2_;
    case CovKind::Diagonal:
      return v.cwiseQuotient(diag_);
    case CovKind::BlockDiagonal:
    case CovKind::Full: {
      Vector out(dim_);
      for (std::size_t b = 0; b < factors_.size(); ++b) {
        Vector y = factors_[b].triangularView<Eigen::Lower>().solve(
            v.segment(block_offsets_[b], block_sizes_[b]));
        out.segment(block_offsets_[b], block_sizes_[b]) =
            factors_[b].transpose().triangularView<Eigen::Upper>().solve(y);
      }
      return out;
    }
  }
  return v;
}

Matrix CovarianceModel::dense() const {
  Matrix out = Matrix::Zero(dim_, dim_);
  switch (kind_) {
    case CovKind::ScaledIdentity:
      out.diagonal().setConstant(sigma2_);
      break;
    case CovKind::Diagonal:
      out.diagonal() = diag_;
      break;
    case CovKind::BlockDiagonal:
    case CovKind::Full:
      for (std::size_t b = 0; b < factors_.size(); ++b) {
        out.block(block_offsets_[b], block_offsets_[b], block_sizes_[b],
                  block_sizes_[b]) = factors_[b] * factors_[b].transpose();
      }
      break;
  }
  return out;
}

Matrix CovarianceModel::block_dense(std::size_t b) const {
  return factors_.at(b) * factors_.at(b).transpose();
}

Vector gaussian_sample(const CovarianceModel& cov, RngStream& rng) {
  return cov.sample(rng);
}

Vector sphere_sample(Index dim, RngStream& rng) {
  if (dim < 1) throw ConfigError("sphere_sample needs dim >= 1");
  Vector z(dim);
  double norm = 0.0;
  do {
    for (Index i = 0; i < dim; ++i) z(i) = rng.normal();
    norm = z.norm();
  } while (norm < 1e-8);
  return z / norm;
}

}  // namespace rsopt

#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace sdmh {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A square matrix whose entries satisfy m(i,j) == m(j,i) exactly.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  /// Throws DomainError unless `m` is square and exactly symmetric.
  explicit SymmetricMatrix(MatrixXd m);

  /// (m + m^T) / 2, which is exactly symmetric in floating point.
  static SymmetricMatrix symmetrized(const MatrixXd& m);
  static SymmetricMatrix identity(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const MatrixXd& matrix() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const {
    return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  MatrixXd m_;
};

/// Lower-triangular L with L L^T = m. Throws CholeskyError carrying the
/// index of the first non-positive pivot.
MatrixXd cholesky(const SymmetricMatrix& m);

/// 2 * sum(log(diag(L))) for a Cholesky factor.
double log_det_from_cholesky(const MatrixXd& chol);

struct LeastSquaresFit {
  VectorXd coefficients;
  double rss = 0.0;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

/// Minimum-norm least squares of y on the columns of x. A design with zero
/// columns yields the empty fit with rss = y^T y.
LeastSquaresFit least_squares(const MatrixXd& x, const VectorXd& y);

}  // namespace sdmh

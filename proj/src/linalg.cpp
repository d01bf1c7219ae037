#include "sdmh/linalg.hpp"

#include <cmath>

#include "sdmh/errors.hpp"

namespace sdmh {

SymmetricMatrix::SymmetricMatrix(MatrixXd m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DomainError("SymmetricMatrix: matrix is not square");
  for (Eigen::Index j = 0; j < m_.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < m_.rows(); ++i) {
      if (m_(i, j) != m_(j, i)) throw DomainError("SymmetricMatrix: matrix is not symmetric");
    }
  }
}

SymmetricMatrix SymmetricMatrix::symmetrized(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw DomainError("SymmetricMatrix: matrix is not square");
  MatrixXd s = 0.5 * (m + m.transpose());
  return SymmetricMatrix(std::move(s));
}

SymmetricMatrix SymmetricMatrix::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return SymmetricMatrix(MatrixXd::Identity(d, d));
}

MatrixXd cholesky(const SymmetricMatrix& sym) {
  const MatrixXd& m = sym.matrix();
  const Eigen::Index n = m.rows();
  MatrixXd l = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw CholeskyError(static_cast<std::size_t>(j), diag);
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

double log_det_from_cholesky(const MatrixXd& chol) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < chol.rows(); ++i) s += std::log(chol(i, i));
  return 2.0 * s;
}

LeastSquaresFit least_squares(const MatrixXd& x, const VectorXd& y) {
  if (x.rows() != y.size()) throw DomainError("least_squares: row count mismatch");
  if (x.cols() > x.rows()) throw DomainError("least_squares: more columns than rows");
  LeastSquaresFit fit;
  if (x.cols() == 0) {
    fit.coefficients = VectorXd(0);
    fit.rss = y.squaredNorm();
    return fit;
  }
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(x);
  fit.coefficients = cod.solve(y);
  fit.rank = cod.rank();
  fit.rank_deficient = fit.rank < x.cols();
  fit.rss = (y - x * fit.coefficients).squaredNorm();
  return fit;
}

}  // namespace sdmh

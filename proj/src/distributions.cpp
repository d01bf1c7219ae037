#include "sdmh/distributions.hpp"

#include <cmath>

#include "sdmh/errors.hpp"
#include "sdmh/special.hpp"

namespace sdmh {

VectorXd mvn_sample(const VectorXd& mean, const MatrixXd& chol_cov, Rng& rng) {
  if (chol_cov.rows() != mean.size() || chol_cov.cols() != mean.size()) {
    throw DomainError("mvn_sample: dimension mismatch");
  }
  VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + chol_cov.triangularView<Eigen::Lower>() * z;
}

double mvn_logpdf(const VectorXd& x, const VectorXd& mean, const MatrixXd& chol_cov) {
  if (x.size() != mean.size() || chol_cov.rows() != x.size() || chol_cov.cols() != x.size()) {
    throw DomainError("mvn_logpdf: dimension mismatch");
  }
  const auto k = static_cast<double>(x.size());
  const VectorXd w = chol_cov.triangularView<Eigen::Lower>().solve(x - mean);
  return -0.5 * k * kLn2Pi - 0.5 * log_det_from_cholesky(chol_cov) - 0.5 * w.squaredNorm();
}

double normal_logpdf(double x, double mean, double variance) {
  const double z = x - mean;
  return -0.5 * (kLn2Pi + std::log(variance)) - 0.5 * z * z / variance;
}

}  // namespace sdmh

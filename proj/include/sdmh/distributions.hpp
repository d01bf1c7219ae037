#pragma once

#include "sdmh/linalg.hpp"
#include "sdmh/rng.hpp"

namespace sdmh {

/// mean + chol_cov * z with z standard normal. A zero factor returns the mean.
VectorXd mvn_sample(const VectorXd& mean, const MatrixXd& chol_cov, Rng& rng);

/// Gaussian log-density with covariance chol_cov * chol_cov^T.
double mvn_logpdf(const VectorXd& x, const VectorXd& mean, const MatrixXd& chol_cov);

/// log N(x | mean, variance) for scalars.
double normal_logpdf(double x, double mean, double variance);

}  // namespace sdmh

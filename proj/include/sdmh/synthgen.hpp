#pragma once

// Synthetic data: a Toeplitz-correlated linear design and a planted-signal
// Dirichlet-Multinomial design.
//
// Every generator stage draws from its own child stream of the master seed
// (covariates 1, truth and coefficients 2, responses 3), so changing, say,
// sigma2 alters only the responses.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sdmh/dirmult.hpp"
#include "sdmh/inclusion.hpp"
#include "sdmh/linalg.hpp"

namespace sdmh {

struct LinearSynthConfig {
  std::size_t n = 200;
  std::size_t predictors = 500;
  std::size_t n_active = 5;
  double rho = 0.9;
  double sigma2 = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LinearSynth {
  MatrixXd x;  // standardized
  VectorXd y;
  InclusionVector truth;
  double intercept = 0.0;
  VectorXd beta;  // length P, zero off the truth
};

/// Rows of the Toeplitz(rho^{|i-j|}) covariance factor.
MatrixXd toeplitz_factor(std::size_t predictors, double rho);

/// Columns centered and scaled to unit sample standard deviation.
void standardize_columns(MatrixXd& x);

LinearSynth gen_linear(const LinearSynthConfig& config);

struct DMAssociation {
  std::size_t predictor = 0;
  std::size_t category = 0;
  double coefficient = 0.0;
};

struct DMSynthConfig {
  std::size_t n = 100;
  std::size_t predictors = 30;
  std::size_t categories = 5;
  double rho = 0.0;
  /// Used as given when nonempty; otherwise `n_random` distinct (p, j)
  /// pairs are drawn with coefficients of magnitude `magnitude` and random sign.
  std::vector<DMAssociation> associations;
  std::size_t n_random = 3;
  double magnitude = 1.5;
  double intercept = 1.0;  // beta0_j for every category
  double depth_base = 1000.0;
  double depth_poisson_mean = 500.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct DMSynth {
  DMData data;
  VectorXd beta0;
  MatrixXd beta;  // P x J
  std::vector<InclusionVector> truth;  // J vectors of length P
  std::vector<DMAssociation> associations;
};

DMSynth gen_dm(const DMSynthConfig& config);

}  // namespace sdmh

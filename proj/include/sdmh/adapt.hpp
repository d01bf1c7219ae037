#pragma once

// Windowed Robbins-Monro adaptation of the proposal exponent lambda, and a
// multiplicative scale adapter for Gaussian random-walk proposals.
//
// Windows of W steps are counted only while t lies in [t_start, t_end).
// After the first completed window (epoch 1) the rate is only recorded;
// from epoch 2 on, log lambda moves by c k^-delta times the change in
// window acceptance, in the direction of the previous lambda move. A zero
// previous move counts as upward.

#include <cstddef>
#include <vector>

#include "sdmh/linalg.hpp"

namespace sdmh {

struct AdaptConfig {
  bool enabled = true;
  std::size_t window = 25;
  double c = 1.0;
  double delta = 0.75;
  double lambda_min = 0.05;
  double lambda_max = 10.0;
  std::size_t t_start = 100;
  std::size_t t_end = 75000;
  double initial_lambda = 0.7;

  /// Throws ConfigError on violated invariants; total is the chain length.
  void validate(std::size_t total) const;
};

struct AdaptState {
  std::size_t k = 0;              // completed epochs
  double lambda = 1.0;            // lambda^(k)
  std::vector<double> log_lambda; // log lambda^(0), ..., log lambda^(k)
  double alpha_current = 0.0;     // alpha^(k)
  double alpha_previous = 0.0;    // alpha^(k-1)
  std::size_t n_acc = 0;
  std::size_t t_window = 0;
  bool frozen = false;

  static AdaptState initial(const AdaptConfig& config);
};

int sgn_convention(double x);

/// d_k = c k^-delta.
double robbins_monro_step(double c, double delta, std::size_t k);

/// Feed the accept flag of iteration t (1-based). Returns true when an
/// epoch completed on this step.
bool record_step(AdaptState& state, const AdaptConfig& config, std::size_t t, bool accepted);

struct ScaleAdaptConfig {
  bool enabled = true;
  std::size_t window = 25;
  double c = 1.0;
  double delta = 0.75;
  double target = 0.234;
  std::size_t t_end = 10000;  // frozen from this iteration on
};

struct ScaleAdaptState {
  std::size_t k = 0;
  double log_scale = 0.0;  // log of the multiplier applied to the base covariance
  std::size_t n_acc = 0;
  std::size_t t_window = 0;
  bool frozen = false;

  double scale() const;
};

/// sigma * exp(eta * (rate - target)).
SymmetricMatrix adapt_rw_scale(const SymmetricMatrix& sigma, double window_rate, double target,
                               double eta);

/// Window bookkeeping for the random-walk multiplier. Returns true when the
/// multiplier changed.
bool record_scale_step(ScaleAdaptState& state, const ScaleAdaptConfig& config, std::size_t t,
                       bool accepted);

}  // namespace sdmh

#pragma once

// Conjugate Normal-Inverse-Gamma linear regression over inclusion vectors.
//
// Every candidate design contains an intercept column plus the active
// predictors; the intercept is not part of the inclusion vector. Prior
// vectors and matrices are indexed with the intercept at position 0 and
// predictor p at position p + 1.

#include <cstddef>
#include <memory>
#include <string_view>

#include "sdmh/inclusion.hpp"
#include "sdmh/linalg.hpp"
#include "sdmh/scorer.hpp"

namespace sdmh {

/// Smallest p-value used before taking log10; caps -d at 300.
inline constexpr double kPValueFloor = 1e-300;
inline constexpr double kDissimilarityFloor = -300.0;

struct NIGPrior {
  VectorXd mu0;      // length P + 1
  MatrixXd lambda0;  // (P + 1) x (P + 1), symmetric positive definite
  double a0 = 0.01;
  double b0 = 0.01;

  /// mu0 = 0, lambda0 = precision * I.
  static NIGPrior diffuse(std::size_t predictors, double precision = 0.01, double a0 = 0.01,
                          double b0 = 0.01);
  void validate(std::size_t predictors) const;
};

/// Beta(a_pi, b_pi) hyperprior on the common inclusion probability.
struct ModelPrior {
  double a_pi = 1.0;
  double b_pi = 1.0;
};

/// ln[B(|xi| + a_pi, P - |xi| + b_pi) / B(a_pi, b_pi)].
double log_model_prior(const ModelPrior& prior, const InclusionVector& xi);

enum class DissimilarityKind { F, LR };

DissimilarityKind parse_dissimilarity(std::string_view name);
std::string_view to_string(DissimilarityKind kind);

/// Everything the samplers need about one configuration.
struct ConfigStats {
  double rss = 0.0;
  double log_marginal = 0.0;
  double log_prior = 0.0;
  double d_f = 0.0;
  double d_lr = 0.0;
  bool dof_ok = true;  // n > P' + 1
};

class LinearProblem {
 public:
  LinearProblem(MatrixXd x, VectorXd y, NIGPrior prior, ModelPrior model_prior,
                bool use_cache = true);
  ~LinearProblem();
  LinearProblem(LinearProblem&&) noexcept;
  LinearProblem& operator=(LinearProblem&&) noexcept;

  std::size_t n() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t predictors() const { return static_cast<std::size_t>(x_.cols()); }
  const MatrixXd& x() const { return x_; }
  const VectorXd& y() const { return y_; }
  const NIGPrior& prior() const { return prior_; }
  const ModelPrior& model_prior() const { return model_prior_; }

  /// Cached (when enabled) evaluation of every per-configuration quantity.
  ConfigStats stats(const InclusionVector& xi) const;
  /// Same as stats() but never touches the cache.
  ConfigStats compute_stats(const InclusionVector& xi) const;

  /// log p(y | xi), including the (2 pi)^{-n/2} constant.
  double log_marginal_likelihood(const InclusionVector& xi) const;
  double log_model_prior(const InclusionVector& xi) const;
  double log_posterior(const InclusionVector& xi) const;

  double null_rss() const { return rss0_; }
  double rss(const InclusionVector& xi) const;

  /// log10 of the F-test p-value against the intercept-only model, floored at -300.
  double f_dissimilarity(const InclusionVector& xi) const;
  /// log10 of the likelihood-ratio p-value against the intercept-only model, floored at -300.
  double lr_dissimilarity(const InclusionVector& xi) const;
  double dissimilarity(DissimilarityKind kind, const InclusionVector& xi) const;

  std::size_t cache_size() const;

 private:
  void check(const InclusionVector& xi) const;
  double compute_rss(const std::vector<std::size_t>& active) const;
  double compute_log_marginal(const std::vector<std::size_t>& active) const;

  MatrixXd x_;
  VectorXd y_;
  NIGPrior prior_;
  ModelPrior model_prior_;

  MatrixXd centered_gram_;  // Xc^T Xc
  VectorXd centered_xty_;   // Xc^T yc
  double rss0_ = 0.0;
  MatrixXd gram_;           // [1 X]^T [1 X]
  VectorXd xty_;            // [1 X]^T y
  double yty_ = 0.0;
  bool diagonal_prior_ = false;

  struct Cache;
  std::unique_ptr<Cache> cache_;
};

/// F statistic dissimilarity from residual sums of squares.
double f_dissimilarity_from_rss(double rss0, double rss, std::size_t n, std::size_t active);
/// Likelihood-ratio dissimilarity from residual sums of squares.
double lr_dissimilarity_from_rss(double rss0, double rss, std::size_t n, std::size_t active);

/// ModelScorer view of a LinearProblem with a fixed dissimilarity.
class LinearScorer final : public ModelScorer {
 public:
  LinearScorer(const LinearProblem& problem, DissimilarityKind kind)
      : problem_(&problem), kind_(kind) {}

  std::size_t dimension() const override { return problem_->predictors(); }
  double log_posterior(const InclusionVector& xi) const override;
  double dissimilarity(const InclusionVector& xi) const override;

  const LinearProblem& problem() const { return *problem_; }
  DissimilarityKind kind() const { return kind_; }

 private:
  const LinearProblem* problem_;
  DissimilarityKind kind_;
};

}  // namespace sdmh

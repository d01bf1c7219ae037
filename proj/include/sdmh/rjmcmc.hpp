#pragma once

// Reversible-jump sampler over (beta0, beta, xi) for Dirichlet-Multinomial
// regression. Each iteration makes one Gaussian random-walk update of the
// intercepts and then, category by category, one similarity-driven flip of
// the inclusion vector with coefficients drawn around the penalised fit of
// the proposed active set. An optional graph-guided swap follows each flip.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "sdmh/adapt.hpp"
#include "sdmh/dirmult.hpp"
#include "sdmh/localmove.hpp"
#include "sdmh/rng.hpp"

namespace sdmh {

struct RJConfig {
  std::size_t iterations = 20000;
  std::size_t burn_in = 10000;
  DMPriors priors{};
  /// Shared template for the per-category lambda adaptation.
  AdaptConfig adapt{.enabled = true,
                    .window = 25,
                    .c = 1.0,
                    .delta = 0.75,
                    .lambda_min = 0.05,
                    .lambda_max = 10.0,
                    .t_start = 100,
                    .t_end = 10000,
                    .initial_lambda = 1.0};
  /// Intercept random walk: covariance beta0_sd^2 I times an adapted multiplier.
  double beta0_sd = 0.1;
  ScaleAdaptConfig beta0_adapt{};
  bool local_move = false;
  double lambda_move = 1.25;
  double graph_threshold = 0.5;
  std::size_t warm_start_capacity = 4096;
  std::size_t drift_check_every = 1000;  // accepted category updates
  std::size_t checkpoint_every = 1000;   // iterations
  PMLEOptions pmle{};
  std::uint64_t seed = 1;

  void validate(std::size_t categories) const;
};

enum class MoveStatus : std::uint8_t { NotAttempted = 0, Rejected = 1, Accepted = 2 };

/// Per-iteration record; iteration t (1-based) is stored at index t - 1.
struct RJTrace {
  std::size_t predictors = 0;
  std::size_t categories = 0;
  /// Inclusion matrix after each iteration, category-major: bit j * P + p.
  ConfigTrace xi;
  std::vector<double> beta0;            // T x J, row-major
  std::vector<std::uint8_t> beta0_accepted;
  std::vector<double> beta0_scale;      // multiplier used at iteration t
  std::vector<MoveStatus> flip;         // T x J
  std::vector<MoveStatus> swap;         // T x J
  std::vector<double> lambda;           // T x J, value used at iteration t
  std::vector<double> log_post;         // T
  struct Coefficient {
    std::uint32_t iteration;  // 1-based
    std::uint16_t category;
    std::uint32_t predictor;
    double value;
  };
  std::vector<Coefficient> coefficients;  // active entries after each iteration
  std::size_t failed_moves = 0;
  std::size_t drift_resyncs = 0;
  std::size_t fits_computed = 0;   // penalised fits evaluated
  std::size_t reverse_built = 0;   // reverse proposals that had to be assembled

  std::size_t iterations() const { return log_post.size(); }
  bool included(std::size_t t, std::size_t j, std::size_t p) const {
    return xi.test(t, j * predictors + p);
  }
};

/// Log joint posterior up to sampled-quantity-free constants.
double log_joint_posterior(const DMData& data, const DMParams& params, const DMPriors& priors);

/// log p(xi = 1) or log p(xi = 0) under the Beta-Binomial prior.
double log_inclusion_prior(bool included, double a, double b);

struct StepResult {
  bool accepted = false;
  bool attempted = true;
  bool failed = false;
  /// Upper bound only when `screened` (rejected before the reverse
  /// selection probability was needed).
  double log_alpha = 0.0;
  double log_uniform = 0.0;
  bool screened = false;
};

/// Gaussian random walk beta0' = beta0 + chol_cov z; all concentrations and
/// the cached log-likelihood are refreshed on acceptance.
StepResult update_beta0(const DMData& data, DMParams& params, const DMPriors& priors,
                        const MatrixXd& chol_cov, Rng& rng);

/// Precision-parameterised Gaussian used for coefficient proposals: mean
/// beta_hat and precision -H (regularised by the smallest jitter in
/// 0, 1e-6, 1e-5, ..., 1 that makes it positive definite).
struct CoefficientProposal {
  VectorXd mean;
  MatrixXd chol_precision;  // lower L with L L' = -H + jitter I
  double jitter = 0.0;

  static CoefficientProposal from_fit(const PMLEResult& fit);
  VectorXd sample(Rng& rng) const;
  double log_density(const VectorXd& x) const;
};

/// Acceptance ratio of a trans-dimensional category move from its parts.
double rj_log_acceptance(double log_post_ratio, double log_q_reverse, double log_q_forward,
                         double log_density_reverse, double log_density_forward);

/// Shared state for category updates. Penalised fits are tabulated per
/// category and reused while the conditioning (intercepts and the other
/// categories) is unchanged, so every active set has exactly one fit per
/// conditioning epoch. Moves are first screened against the acceptance ratio
/// without the reverse selection probability, which is at most one; the
/// reverse proposal is only built when that bound does not already reject.
class CategoryUpdater {
 public:
  CategoryUpdater(const DMData& data, const RJConfig& config);

  StepResult update_category(DMParams& params, std::size_t j, double lambda, Rng& rng);
  StepResult swap_category(DMParams& params, std::size_t j, const DependencyGraph& graph,
                           Rng& rng);

  /// Conditioning of every category changed (intercepts moved).
  void invalidate_all();
  /// Conditioning of all categories except j changed.
  void invalidate_others(std::size_t j);

  /// Fit of `active_set` for category j under the current conditioning.
  const CandidateFit& fit(const DMParams& params, std::size_t j,
                          const InclusionVector& active_set);
  /// Flip proposal at `origin` assembled from tabulated fits.
  CategoryProposal proposal(const DMParams& params, std::size_t j, const InclusionVector& origin,
                            double lambda);

  WarmStartCache& warm_starts() { return cache_; }
  std::size_t fits_computed() const { return fits_computed_; }
  std::size_t reverse_built() const { return reverse_built_; }

 private:
  struct Table {
    std::uint64_t epoch = 0;
    std::optional<BaselineTerms> baseline;
    std::unordered_map<InclusionVector, CandidateFit, InclusionVectorHash> fits;
  };
  Table& table(const DMParams& params, std::size_t j);
  template <class ReverseLogQ>
  StepResult finish_move(DMParams& params, std::size_t j, const InclusionVector& proposed,
                         const PMLEResult& fit_new, const PMLEResult& fit_cur,
                         double log_q_forward, ReverseLogQ&& log_q_reverse, Rng& rng);

  const DMData* data_;
  const RJConfig* config_;
  WarmStartCache cache_;
  std::vector<std::uint64_t> epoch_;
  std::vector<Table> tables_;
  std::size_t fits_computed_ = 0;
  std::size_t reverse_built_ = 0;
};

/// Runs the sampler. A dependency graph is estimated from the covariates
/// when local moves are enabled and `graph` is null.
RJTrace run_rjmcmc(const DMData& data, const RJConfig& config,
                   const DependencyGraph* graph = nullptr,
                   std::optional<DMParams> initial = std::nullopt);

}  // namespace sdmh

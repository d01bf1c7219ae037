#pragma once

// Dirichlet-Multinomial regression with a log-linear link,
//   log gamma_ij = beta0_j + sum_{p active in j} x_ip beta_pj,
// plus the per-category penalised fits that drive the inclusion proposals.
//
// Log-likelihoods here include the multinomial coefficient, so they are
// proper log-probabilities; every difference used by the samplers is
// unaffected by that constant.

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "sdmh/inclusion.hpp"
#include "sdmh/lbfgs.hpp"
#include "sdmh/linalg.hpp"

namespace sdmh {

/// Linear predictors are clamped to this range before exponentiation.
inline constexpr double kEtaClamp = 30.0;

struct DMData {
  MatrixXd counts;     // n x J, nonnegative integers stored as doubles
  VectorXd row_totals; // y_{i+}
  MatrixXd x;          // n x P

  std::size_t n() const { return static_cast<std::size_t>(counts.rows()); }
  std::size_t categories() const { return static_cast<std::size_t>(counts.cols()); }
  std::size_t predictors() const { return static_cast<std::size_t>(x.cols()); }

  /// Validates counts (finite, nonnegative, integral) and shapes; throws DataError.
  static DMData make(MatrixXd counts, MatrixXd x);
  /// sum_i [lgamma(y_{i+} + 1) - sum_j lgamma(y_ij + 1)]
  double multinomial_constant() const { return log_multinomial_; }

 private:
  double log_multinomial_ = 0.0;
};

struct DMPriors {
  VectorXd s2;  // intercept prior variances, length J
  VectorXd r2;  // coefficient prior variances, length J
  double a = 1.0;
  double b = 9.0;
  double c = 1.0;

  static DMPriors defaults(std::size_t categories, double s2 = 10.0, double r2 = 10.0,
                           double a = 1.0, double b = 9.0, double c = 1.0);
  void validate(std::size_t categories) const;
};

struct DMParams {
  VectorXd beta0;                  // J
  MatrixXd beta;                   // P x J, zero where excluded
  std::vector<InclusionVector> xi; // J vectors of length P
  MatrixXd lin;                    // n x J, X_active beta_j (without intercept)
  MatrixXd gamma;                  // n x J
  VectorXd gamma_row;              // n
  double loglik = 0.0;

  std::vector<std::size_t> active(std::size_t j) const { return xi[j].active_indices(); }
  VectorXd active_beta(std::size_t j) const;
};

/// beta0 = log of mean category proportions, xi = 0, beta = 0; caches filled.
DMParams dm_initial_params(const DMData& data);

/// Recomputes lin, gamma, gamma_row and loglik from beta0, beta and xi.
void dm_refresh(const DMData& data, DMParams& params);

/// exp(clamp(eta)); counts clamp events for diagnostics.
double dm_link(double eta);
std::size_t dm_clamp_events();

double dm_logpmf(std::span<const double> counts, std::span<const double> gamma);

/// Sum of per-row log-pmfs at the cached gamma.
double dm_total_loglik(const DMData& data, const DMParams& params);

/// Log-likelihood with gamma_ij = exp(beta0_j) for all i.
double dm_baseline_loglik(const DMData& data, const VectorXd& beta0);

struct IncrementalLogLik {
  double total = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
};

/// Replace column j of gamma by new_gamma_col and update the log-likelihood.
IncrementalLogLik dm_incremental_loglik(const DMData& data, const DMParams& params, std::size_t j,
                                        const VectorXd& new_gamma_col);

/// Commits a new column j (coefficients over `active`, in that order).
void dm_set_category(const DMData& data, DMParams& params, std::size_t j,
                     const InclusionVector& xi_j, const VectorXd& beta_active);

/// Penalised category-j objective and its derivatives, holding beta0 and
/// the other categories fixed:
///   ell_j(beta) - c |A| / (2n) beta'beta.
struct CategoryObjective {
  double value = 0.0;
  VectorXd gradient;
  MatrixXd hessian;           // filled only when requested
  double count_terms = 0.0;   // sum_i [lgamma(y_ij + g_ij) - lgamma(g_ij)]
  VectorXd gamma_col;         // g_ij at beta
};

CategoryObjective dm_category_objective(const DMData& data, const DMParams& params,
                                        std::size_t j, const std::vector<std::size_t>& active,
                                        const VectorXd& beta_j, const DMPriors& priors,
                                        bool want_hessian);

struct GradHess {
  VectorXd gradient;
  MatrixXd hessian;
};

GradHess dm_grad_hess(const DMData& data, const DMParams& params, std::size_t j,
                      const std::vector<std::size_t>& active, const VectorXd& beta_j,
                      const DMPriors& priors);

/// LRU memory of penalised fits keyed by (category, active set).
class WarmStartCache {
 public:
  explicit WarmStartCache(std::size_t capacity_per_category = 4096)
      : capacity_(capacity_per_category) {}

  std::optional<VectorXd> get(std::size_t j, const InclusionVector& active);
  void put(std::size_t j, const InclusionVector& active, const VectorXd& beta);
  std::size_t size(std::size_t j) const;

 private:
  using Entry = std::pair<InclusionVector, VectorXd>;
  struct Category {
    std::list<Entry> order;
    std::unordered_map<InclusionVector, std::list<Entry>::iterator, InclusionVectorHash> index;
  };
  Category& category(std::size_t j);

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::vector<Category> categories_;
};

struct PMLEOptions {
  LbfgsOptions lbfgs{};
  /// Start the quasi-Newton recursion from the exact inverse Hessian at the
  /// warm start when it is negative definite.
  bool exact_initial_hessian = true;
};

struct PMLEResult {
  VectorXd beta_hat;
  MatrixXd hessian;  // of the penalised objective at beta_hat
  double objective = 0.0;
  double grad_norm = 0.0;
  double count_terms = 0.0;
  VectorXd gamma_col;
  std::size_t iterations = 0;
};

/// Maximises the penalised category-j objective over the coefficients of
/// `active` (ascending predictor indices). Warm start: `cache` entry for the
/// set if present, otherwise the current coefficients restricted to the set
/// (zero for newly added predictors). Throws NumericalError on failure.
PMLEResult dm_pmle(const DMData& data, const DMParams& params, std::size_t j,
                   const std::vector<std::size_t>& active, const DMPriors& priors,
                   WarmStartCache* cache = nullptr, const PMLEOptions& options = {});

/// Per-candidate ingredients of the category proposal.
struct CandidateFit {
  bool ok = false;
  PMLEResult fit;
  double lr = 0.0;
  double log10_p = 0.0;  // dissimilarity, floored at -300
};

struct CategoryProposal {
  std::size_t category = 0;
  InclusionVector origin;
  double lambda = 1.0;
  std::vector<CandidateFit> candidates;  // one per flipped predictor
  std::vector<double> log_weights;
  double log_normalizer = 0.0;
  std::vector<double> probabilities;

  double log_probability(std::size_t p) const { return log_weights[p] - log_normalizer; }
};

/// Fits the flipped active set for every predictor and turns the
/// likelihood-ratio p-values against the no-covariate baseline into a
/// categorical distribution over flips.
CategoryProposal dm_category_proposal(const DMData& data, const DMParams& params, std::size_t j,
                                      const DMPriors& priors, double lambda,
                                      WarmStartCache* cache = nullptr,
                                      const PMLEOptions& options = {});

/// Probabilities only.
std::vector<double> dm_category_proposal_probs(const DMData& data, const DMParams& params,
                                               std::size_t j, const DMPriors& priors,
                                               double lambda, WarmStartCache* cache = nullptr);

/// Likelihood ratio of a fitted column j against the baseline at the current
/// intercepts, and its log10 p-value with dof = max(1, |active|).
struct LRStat {
  double lr = 0.0;
  double log10_p = 0.0;
};

class BaselineTerms {
 public:
  BaselineTerms(const DMData& data, const VectorXd& beta0, std::size_t j);
  LRStat evaluate(const DMData& data, const VectorXd& gamma_col, double count_terms,
                  std::size_t active_size) const;

 private:
  double others_ = 0.0;   // sum_{k != j} exp(beta0_k)
  double reference_ = 0.0;  // category-dependent part of the baseline log-likelihood
};

}  // namespace sdmh

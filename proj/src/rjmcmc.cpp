#include "sdmh/rjmcmc.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>

#include "sdmh/errors.hpp"
#include "sdmh/log.hpp"
#include "sdmh/proposal.hpp"
#include "sdmh/scorer.hpp"
#include "sdmh/special.hpp"

namespace sdmh {

using Index = Eigen::Index;

namespace {

double normal_prior(double x, double var) {
  return -0.5 * (kLn2Pi + std::log(var)) - 0.5 * x * x / var;
}

double coefficient_prior(const VectorXd& b, double var) {
  double s = 0.0;
  for (Index i = 0; i < b.size(); ++i) s += normal_prior(b(i), var);
  return s;
}

double inclusion_prior_sum(const InclusionVector& xi, double a, double b) {
  const auto on = static_cast<double>(xi.active_indices().size());
  const auto off = static_cast<double>(xi.size()) - on;
  return on * log_inclusion_prior(true, a, b) + off * log_inclusion_prior(false, a, b);
}

VectorXd column_for(const DMData& data, const DMParams& params, std::size_t j,
                    const std::vector<std::size_t>& active, const VectorXd& beta) {
  const auto n = static_cast<Index>(data.n());
  VectorXd eta = VectorXd::Constant(n, params.beta0(static_cast<Index>(j)));
  for (std::size_t a = 0; a < active.size(); ++a) {
    eta += data.x.col(static_cast<Index>(active[a])) * beta(static_cast<Index>(a));
  }
  for (Index i = 0; i < n; ++i) eta(i) = dm_link(eta(i));
  return eta;
}

// Dissimilarities of arbitrary active sets of one category, for the
// graph-guided swap.
class CategoryScorer final : public ModelScorer {
 public:
  CategoryScorer(CategoryUpdater& updater, const DMParams& params, std::size_t j,
                 std::size_t predictors)
      : updater_(updater), params_(params), j_(j), predictors_(predictors) {}

  std::size_t dimension() const override { return predictors_; }
  double log_posterior(const InclusionVector&) const override {
    throw DomainError("category scorer has no closed-form posterior");
  }
  double dissimilarity(const InclusionVector& xi) const override {
    return updater_.fit(params_, j_, xi).log10_p;
  }

 private:
  CategoryUpdater& updater_;
  const DMParams& params_;
  std::size_t j_;
  std::size_t predictors_;
};

constexpr std::size_t kMaxTabulatedFits = 1u << 16;

}  // namespace

void RJConfig::validate(std::size_t categories) const {
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (burn_in >= iterations) throw ConfigError("burn-in must be smaller than iterations");
  priors.validate(categories);
  AdaptConfig a = adapt;
  a.t_end = burn_in;
  a.enabled = adapt.enabled && a.t_start < burn_in;
  a.validate(iterations);
  if (!(beta0_sd >= 0.0) || !std::isfinite(beta0_sd)) {
    throw ConfigError("intercept proposal scale must be finite and nonnegative");
  }
  if (!(beta0_adapt.target > 0.0 && beta0_adapt.target < 1.0)) {
    throw ConfigError("intercept acceptance target must lie in (0, 1)");
  }
  if (beta0_adapt.window == 0) throw ConfigError("intercept adaptation window must be positive");
  if (!(lambda_move > 0.0)) throw ConfigError("lambda_move must be positive");
  if (drift_check_every == 0 || checkpoint_every == 0) {
    throw ConfigError("check intervals must be positive");
  }
}

double log_inclusion_prior(bool included, double a, double b) {
  return included ? log_beta(a + 1.0, b) - log_beta(a, b) : log_beta(a, b + 1.0) - log_beta(a, b);
}

double log_joint_posterior(const DMData& data, const DMParams& params, const DMPriors& priors) {
  double lp = params.loglik;
  for (std::size_t j = 0; j < data.categories(); ++j) {
    const auto jj = static_cast<Index>(j);
    lp += normal_prior(params.beta0(jj), priors.s2(jj));
    lp += coefficient_prior(params.active_beta(j), priors.r2(jj));
    lp += inclusion_prior_sum(params.xi[j], priors.a, priors.b);
  }
  return lp;
}

StepResult update_beta0(const DMData& data, DMParams& params, const DMPriors& priors,
                        const MatrixXd& chol_cov, Rng& rng) {
  const auto jn = static_cast<Index>(data.categories());
  VectorXd z(jn);
  for (Index j = 0; j < jn; ++j) z(j) = rng.normal();
  StepResult r;
  DMParams next = params;
  next.beta0 = params.beta0 + chol_cov.triangularView<Eigen::Lower>() * z;
  try {
    const auto n = static_cast<Index>(data.n());
    for (Index j = 0; j < jn; ++j) {
      for (Index i = 0; i < n; ++i) next.gamma(i, j) = dm_link(next.beta0(j) + next.lin(i, j));
    }
    next.gamma_row = next.gamma.rowwise().sum();
    next.loglik = dm_total_loglik(data, next);
    r.log_alpha = next.loglik - params.loglik;
    for (Index j = 0; j < jn; ++j) {
      r.log_alpha += normal_prior(next.beta0(j), priors.s2(j)) -
                     normal_prior(params.beta0(j), priors.s2(j));
    }
  } catch (const std::exception& e) {
    log_warning(std::string("intercept update rejected: ") + e.what());
    r.failed = true;
    r.log_alpha = -std::numeric_limits<double>::infinity();
  }
  r.log_uniform = std::log(rng.uniform_open());
  r.accepted = !r.failed && r.log_uniform < r.log_alpha;
  if (r.accepted) params = std::move(next);
  return r;
}

CoefficientProposal CoefficientProposal::from_fit(const PMLEResult& fit) {
  CoefficientProposal q;
  q.mean = fit.beta_hat;
  const Index k = fit.beta_hat.size();
  if (k == 0) {
    q.chol_precision = MatrixXd(0, 0);
    return q;
  }
  const MatrixXd prec = -fit.hessian;
  double jitter = 0.0;
  while (true) {
    Eigen::LLT<MatrixXd> llt(prec + jitter * MatrixXd::Identity(k, k));
    if (llt.info() == Eigen::Success) {
      q.chol_precision = llt.matrixL();
      q.jitter = jitter;
      return q;
    }
    jitter = jitter == 0.0 ? 1e-6 : jitter * 10.0;
    if (jitter > 1.0 + 1e-12) {
      throw NumericalError("negative Hessian is not positive definite even with unit jitter");
    }
  }
}

VectorXd CoefficientProposal::sample(Rng& rng) const {
  const Index k = mean.size();
  VectorXd z(k);
  for (Index i = 0; i < k; ++i) z(i) = rng.normal();
  if (k == 0) return z;
  return mean + chol_precision.transpose().triangularView<Eigen::Upper>().solve(z);
}

double CoefficientProposal::log_density(const VectorXd& x) const {
  const Index k = mean.size();
  if (x.size() != k) throw DomainError("coefficient proposal: dimension mismatch");
  if (k == 0) return 0.0;
  const VectorXd w = chol_precision.transpose() * (x - mean);
  double logdet = 0.0;
  for (Index i = 0; i < k; ++i) logdet += std::log(chol_precision(i, i));
  return -0.5 * static_cast<double>(k) * kLn2Pi + logdet - 0.5 * w.squaredNorm();
}

double rj_log_acceptance(double log_post_ratio, double log_q_reverse, double log_q_forward,
                         double log_density_reverse, double log_density_forward) {
  return log_post_ratio + log_q_reverse - log_q_forward + log_density_reverse -
         log_density_forward;
}

CategoryUpdater::CategoryUpdater(const DMData& data, const RJConfig& config)
    : data_(&data), config_(&config), cache_(config.warm_start_capacity),
      epoch_(data.categories(), 1), tables_(data.categories()) {}

void CategoryUpdater::invalidate_all() {
  for (auto& e : epoch_) ++e;
}

void CategoryUpdater::invalidate_others(std::size_t j) {
  for (std::size_t k = 0; k < epoch_.size(); ++k) {
    if (k != j) ++epoch_[k];
  }
}

CategoryUpdater::Table& CategoryUpdater::table(const DMParams& params, std::size_t j) {
  Table& t = tables_[j];
  if (t.epoch != epoch_[j] || t.fits.size() >= kMaxTabulatedFits) {
    t.fits.clear();
    t.baseline.emplace(*data_, params.beta0, j);
    t.epoch = epoch_[j];
  }
  return t;
}

const CandidateFit& CategoryUpdater::fit(const DMParams& params, std::size_t j,
                                         const InclusionVector& active_set) {
  Table& t = table(params, j);
  auto it = t.fits.find(active_set);
  if (it != t.fits.end()) return it->second;
  ++fits_computed_;
  CandidateFit c;
  const std::vector<std::size_t> act = active_set.active_indices();
  try {
    c.fit = dm_pmle(*data_, params, j, act, config_->priors, &cache_, config_->pmle);
    const LRStat s = t.baseline->evaluate(*data_, c.fit.gamma_col, c.fit.count_terms, act.size());
    c.lr = s.lr;
    c.log10_p = s.log10_p;
    c.ok = true;
  } catch (const NumericalError& e) {
    log_warning(std::string("candidate fit failed: ") + e.what());
    c.ok = false;
    c.log10_p = 0.0;
  }
  return t.fits.emplace(active_set, std::move(c)).first->second;
}

CategoryProposal CategoryUpdater::proposal(const DMParams& params, std::size_t j,
                                           const InclusionVector& origin, double lambda) {
  const std::size_t pn = data_->predictors();
  CategoryProposal q;
  q.category = j;
  q.origin = origin;
  q.lambda = lambda;
  q.candidates.resize(pn);
  q.log_weights.resize(pn);
  for (std::size_t f = 0; f < pn; ++f) {
    q.candidates[f] = fit(params, j, origin.flipped(f));
    q.log_weights[f] = similarity_weight(q.candidates[f].log10_p, lambda);
  }
  q.log_normalizer = log_sum_exp(q.log_weights);
  q.probabilities.resize(pn);
  for (std::size_t f = 0; f < pn; ++f) {
    q.probabilities[f] = std::exp(q.log_weights[f] - q.log_normalizer);
  }
  return q;
}

template <class ReverseLogQ>
StepResult CategoryUpdater::finish_move(DMParams& params, std::size_t j,
                                        const InclusionVector& proposed,
                                        const PMLEResult& fit_new, const PMLEResult& fit_cur,
                                        double log_q_forward, ReverseLogQ&& log_q_reverse,
                                        Rng& rng) {
  StepResult r;
  const auto jj = static_cast<Index>(j);
  const double r2 = config_->priors.r2(jj);
  try {
    const CoefficientProposal fwd = CoefficientProposal::from_fit(fit_new);
    const VectorXd beta_new = fwd.sample(rng);
    const CoefficientProposal rev = CoefficientProposal::from_fit(fit_cur);
    const VectorXd beta_cur = params.active_beta(j);
    const std::vector<std::size_t> act_new = proposed.active_indices();
    const VectorXd col = column_for(*data_, params, j, act_new, beta_new);
    const IncrementalLogLik inc = dm_incremental_loglik(*data_, params, j, col);
    const double log_post_ratio =
        inc.delta1 + inc.delta2 + coefficient_prior(beta_new, r2) -
        coefficient_prior(beta_cur, r2) +
        inclusion_prior_sum(proposed, config_->priors.a, config_->priors.b) -
        inclusion_prior_sum(params.xi[j], config_->priors.a, config_->priors.b);
    const double bound = rj_log_acceptance(log_post_ratio, 0.0, log_q_forward,
                                           rev.log_density(beta_cur), fwd.log_density(beta_new));
    if (std::isnan(bound)) throw NumericalError("acceptance ratio is NaN");
    r.log_uniform = std::log(rng.uniform_open());
    if (!(r.log_uniform < bound)) {
      r.log_alpha = bound;
      r.screened = true;
      return r;
    }
    ++reverse_built_;
    r.log_alpha = bound + log_q_reverse();
    if (std::isnan(r.log_alpha)) throw NumericalError("acceptance ratio is NaN");
    r.accepted = r.log_uniform < r.log_alpha;
    if (r.accepted) {
      dm_set_category(*data_, params, j, proposed, beta_new);
      invalidate_others(j);
    }
  } catch (const std::exception& e) {
    log_warning(std::string("category move rejected: ") + e.what());
    r.failed = true;
    r.accepted = false;
  }
  return r;
}

StepResult CategoryUpdater::update_category(DMParams& params, std::size_t j, double lambda,
                                            Rng& rng) {
  const InclusionVector current = params.xi[j];
  const CategoryProposal fwd = proposal(params, j, current, lambda);
  const std::size_t f = inverse_cdf(fwd.probabilities, rng.uniform());
  const InclusionVector proposed = current.flipped(f);
  const CandidateFit& to = fwd.candidates[f];
  const CandidateFit from = fit(params, j, current);
  if (!to.ok || !from.ok) {
    StepResult r;
    r.failed = true;
    return r;
  }
  const auto log_q_reverse = [&] {
    return proposal(params, j, proposed, lambda).log_probability(f);
  };
  return finish_move(params, j, proposed, to.fit, from.fit, fwd.log_probability(f),
                     log_q_reverse, rng);
}

StepResult CategoryUpdater::swap_category(DMParams& params, std::size_t j,
                                          const DependencyGraph& graph, Rng& rng) {
  StepResult r;
  const InclusionVector current = params.xi[j];
  if (active_swappable_set(current, graph).empty()) {
    r.attempted = false;
    return r;
  }
  try {
    const CategoryScorer scorer(*this, params, j, data_->predictors());
    const SwapDraw draw = sample_swap(scorer, current, graph, config_->lambda_move, rng);
    if (!draw.possible) {
      r.attempted = false;
      return r;
    }
    const CandidateFit to = fit(params, j, draw.proposed);
    const CandidateFit from = fit(params, j, current);
    if (!to.ok || !from.ok) {
      r.failed = true;
      return r;
    }
    const SwapCandidate back{draw.candidate.activate, draw.candidate.deactivate};
    const auto log_q_reverse = [&] {
      return swap_log_probability(scorer, draw.proposed, graph, back, config_->lambda_move);
    };
    return finish_move(params, j, draw.proposed, to.fit, from.fit, draw.log_forward,
                       log_q_reverse, rng);
  } catch (const std::exception& e) {
    log_warning(std::string("swap move rejected: ") + e.what());
    r.failed = true;
    return r;
  }
}

RJTrace run_rjmcmc(const DMData& data, const RJConfig& config, const DependencyGraph* graph,
                   std::optional<DMParams> initial) {
  const std::size_t jn = data.categories();
  const std::size_t pn = data.predictors();
  config.validate(jn);

  AdaptConfig acfg = config.adapt;
  acfg.t_end = config.burn_in;
  acfg.enabled = config.adapt.enabled && acfg.t_start < config.burn_in;
  ScaleAdaptConfig scfg = config.beta0_adapt;
  scfg.t_end = config.burn_in;

  std::optional<DependencyGraph> estimated;
  if (config.local_move && graph == nullptr) {
    estimated = estimate_graph(data.x, config.graph_threshold);
    graph = &*estimated;
  }
  if (graph != nullptr && graph->size() != pn) {
    throw ConfigError("dependency graph size does not match the number of predictors");
  }

  DMParams params = initial ? std::move(*initial) : dm_initial_params(data);
  if (initial) dm_refresh(data, params);

  Rng rng(config.seed);
  CategoryUpdater updater(data, config);
  std::vector<AdaptState> adapt(jn, AdaptState::initial(acfg));
  ScaleAdaptState scale;
  if (!scfg.enabled) scale.frozen = true;

  const std::size_t T = config.iterations;
  RJTrace trace;
  trace.predictors = pn;
  trace.categories = jn;
  trace.xi = ConfigTrace(jn * pn);
  trace.xi.reserve(T);
  trace.beta0.reserve(T * jn);
  trace.beta0_accepted.reserve(T);
  trace.beta0_scale.reserve(T);
  trace.flip.reserve(T * jn);
  trace.swap.reserve(T * jn);
  trace.lambda.reserve(T * jn);
  trace.log_post.reserve(T);

  std::size_t accepts = 0;
  const auto status = [](const StepResult& s) {
    if (!s.attempted) return MoveStatus::NotAttempted;
    return s.accepted ? MoveStatus::Accepted : MoveStatus::Rejected;
  };
  const auto resync = [&](const char* what) {
    const double full = dm_total_loglik(data, params);
    if (std::abs(full - params.loglik) > 1e-6 * std::max(1.0, std::abs(full))) {
      log_warning(std::string(what) + ": cached log-likelihood drifted by " +
                  std::to_string(full - params.loglik) + "; resynchronised");
      ++trace.drift_resyncs;
    }
    params.loglik = full;
  };

  for (std::size_t t = 1; t <= T; ++t) {
    const double s = scale.scale();
    trace.beta0_scale.push_back(s);
    const MatrixXd chol =
        MatrixXd::Identity(static_cast<Index>(jn), static_cast<Index>(jn)) *
        (config.beta0_sd * std::sqrt(s));
    const StepResult b0 = update_beta0(data, params, config.priors, chol, rng);
    if (b0.failed) ++trace.failed_moves;
    if (b0.accepted && config.beta0_sd > 0.0) updater.invalidate_all();
    trace.beta0_accepted.push_back(b0.accepted ? 1 : 0);
    if (scfg.enabled) record_scale_step(scale, scfg, t, b0.accepted);

    for (std::size_t j = 0; j < jn; ++j) {
      const double lambda = adapt[j].lambda;
      trace.lambda.push_back(lambda);
      const StepResult fr = updater.update_category(params, j, lambda, rng);
      if (fr.failed) ++trace.failed_moves;
      if (fr.accepted) ++accepts;
      trace.flip.push_back(status(fr));
      if (acfg.enabled) record_step(adapt[j], acfg, t, fr.accepted);

      StepResult sr;
      sr.attempted = false;
      if (config.local_move) {
        sr = updater.swap_category(params, j, *graph, rng);
        if (sr.failed) ++trace.failed_moves;
        if (sr.accepted) ++accepts;
      }
      trace.swap.push_back(status(sr));
      if (accepts >= config.drift_check_every) {
        accepts = 0;
        resync("drift check");
      }
    }
    if (t % config.checkpoint_every == 0) resync("checkpoint");

    InclusionVector packed(jn * pn);
    for (std::size_t j = 0; j < jn; ++j) {
      for (std::size_t p : params.xi[j].active_indices()) {
        packed.set(j * pn + p, true);
        trace.coefficients.push_back({static_cast<std::uint32_t>(t),
                                      static_cast<std::uint16_t>(j),
                                      static_cast<std::uint32_t>(p),
                                      params.beta(static_cast<Index>(p), static_cast<Index>(j))});
      }
      trace.beta0.push_back(params.beta0(static_cast<Index>(j)));
    }
    trace.xi.push(packed);
    trace.log_post.push_back(log_joint_posterior(data, params, config.priors));
  }
  trace.fits_computed = updater.fits_computed();
  trace.reverse_built = updater.reverse_built();
  return trace;
}

}  // namespace sdmh

#include "sdmh/dirmult.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "sdmh/conjlinear.hpp"
#include "sdmh/errors.hpp"
#include "sdmh/log.hpp"
#include "sdmh/proposal.hpp"
#include "sdmh/special.hpp"

namespace sdmh {

namespace {

using Index = Eigen::Index;

std::atomic<std::size_t> g_clamps{0};

MatrixXd active_columns(const MatrixXd& x, const std::vector<std::size_t>& active) {
  MatrixXd xa(x.rows(), static_cast<Index>(active.size()));
  for (std::size_t a = 0; a < active.size(); ++a) {
    xa.col(static_cast<Index>(a)) = x.col(static_cast<Index>(active[a]));
  }
  return xa;
}

// Everything about category j that stays fixed while its coefficients move.
struct CategoryContext {
  const DMData* data;
  std::size_t j;
  MatrixXd xa;
  VectorXd others;  // sum_{k != j} gamma_ik at the current parameters
  double beta0j;
  double ridge;     // c |A| / n

  CategoryContext(const DMData& d, const DMParams& params, std::size_t jj,
                  const std::vector<std::size_t>& active, const DMPriors& priors)
      : data(&d), j(jj), xa(active_columns(d.x, active)), beta0j(params.beta0(static_cast<Index>(jj))) {
    const Index n = d.counts.rows();
    others.resize(n);
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Index k = 0; k < params.gamma.cols(); ++k) {
        if (k != static_cast<Index>(jj)) s += params.gamma(i, k);
      }
      others(i) = s;
    }
    ridge = priors.c * static_cast<double>(active.size()) / static_cast<double>(n);
  }

  CategoryObjective evaluate(const VectorXd& beta, bool want_hessian) const {
    const Index n = xa.rows();
    const Index k = xa.cols();
    const auto jj = static_cast<Index>(j);
    CategoryObjective out;
    out.gradient = VectorXd::Zero(k);
    if (want_hessian) out.hessian = MatrixXd::Zero(k, k);
    out.gamma_col.resize(n);
    VectorXd eta = VectorXd::Constant(n, beta0j);
    if (k > 0) eta.noalias() += xa * beta;

    VectorXd w1(n);  // d ell / d eta_i
    VectorXd w2(n);  // d^2 ell / d eta_i^2
    double value = 0.0;
    double count_terms = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double e = eta(i);
      const bool clamped = e > kEtaClamp || e < -kEtaClamp;
      const double g = std::exp(std::clamp(e, -kEtaClamp, kEtaClamp));
      out.gamma_col(i) = g;
      const double y = data->counts(i, jj);
      const double s = others(i);
      const double ytot = data->row_totals(i);
      double u = 0.0;
      double du = 0.0;
      if (y > 0.0) {
        const GammaTriple a = gamma_triple(y + g);
        const GammaTriple b = gamma_triple(g);
        count_terms += a.log_gamma - b.log_gamma;
        u += a.digamma - b.digamma;
        du += a.trigamma - b.trigamma;
      }
      const GammaTriple c = gamma_triple(s + g);
      const GammaTriple d = gamma_triple(ytot + s + g);
      value += c.log_gamma - d.log_gamma;
      u += c.digamma - d.digamma;
      du += c.trigamma - d.trigamma;
      if (clamped) {
        w1(i) = 0.0;
        w2(i) = 0.0;
      } else {
        w1(i) = g * u;
        w2(i) = g * u + g * g * du;
      }
    }
    value += count_terms;
    out.count_terms = count_terms;
    if (k > 0) {
      out.gradient.noalias() = xa.transpose() * w1;
      out.gradient -= ridge * beta;
      value -= 0.5 * ridge * beta.squaredNorm();
      if (want_hessian) {
        out.hessian.noalias() = xa.transpose() * w2.asDiagonal() * xa;
        out.hessian.diagonal().array() -= ridge;
      }
    }
    out.value = value;
    return out;
  }
};

}  // namespace

DMData DMData::make(MatrixXd counts, MatrixXd x) {
  if (counts.rows() != x.rows()) {
    throw DataError("count matrix has " + std::to_string(counts.rows()) +
                    " rows but covariates have " + std::to_string(x.rows()));
  }
  if (counts.rows() == 0 || counts.cols() < 2) {
    throw DataError("count matrix needs at least one row and two categories");
  }
  for (Index i = 0; i < counts.rows(); ++i) {
    for (Index j = 0; j < counts.cols(); ++j) {
      const double v = counts(i, j);
      if (!std::isfinite(v) || v < 0.0 || v != std::floor(v)) {
        throw DataError("count (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") is not a nonnegative integer");
      }
    }
  }
  if (!x.allFinite()) throw DataError("covariates are not finite");
  DMData d;
  d.counts = std::move(counts);
  d.x = std::move(x);
  d.row_totals = d.counts.rowwise().sum();
  double c = 0.0;
  for (Index i = 0; i < d.counts.rows(); ++i) {
    c += log_gamma(d.row_totals(i) + 1.0);
    for (Index j = 0; j < d.counts.cols(); ++j) c -= log_gamma(d.counts(i, j) + 1.0);
  }
  d.log_multinomial_ = c;
  return d;
}

DMPriors DMPriors::defaults(std::size_t categories, double s2, double r2, double a, double b,
                            double c) {
  DMPriors p;
  p.s2 = VectorXd::Constant(static_cast<Index>(categories), s2);
  p.r2 = VectorXd::Constant(static_cast<Index>(categories), r2);
  p.a = a;
  p.b = b;
  p.c = c;
  return p;
}

void DMPriors::validate(std::size_t categories) const {
  const auto jn = static_cast<Index>(categories);
  if (s2.size() != jn || r2.size() != jn) {
    throw ConfigError("prior variance vectors must have one entry per category");
  }
  if (!(s2.array() > 0.0).all() || !(r2.array() > 0.0).all()) {
    throw ConfigError("prior variances must be positive");
  }
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0)) throw ConfigError("a, b and c must be positive");
}

VectorXd DMParams::active_beta(std::size_t j) const {
  const std::vector<std::size_t> act = active(j);
  VectorXd b(static_cast<Index>(act.size()));
  for (std::size_t a = 0; a < act.size(); ++a) {
    b(static_cast<Index>(a)) = beta(static_cast<Index>(act[a]), static_cast<Index>(j));
  }
  return b;
}

double dm_link(double eta) {
  if (eta > kEtaClamp || eta < -kEtaClamp) {
    if (g_clamps.fetch_add(1) == 0) {
      log_warning("linear predictor outside [-30, 30] clamped before exponentiation");
    }
    eta = std::clamp(eta, -kEtaClamp, kEtaClamp);
  }
  return std::exp(eta);
}

std::size_t dm_clamp_events() { return g_clamps.load(); }

DMParams dm_initial_params(const DMData& data) {
  const auto n = static_cast<Index>(data.n());
  const auto jn = static_cast<Index>(data.categories());
  DMParams p;
  p.beta0.resize(jn);
  for (Index j = 0; j < jn; ++j) {
    double mean = 0.0;
    Index rows = 0;
    for (Index i = 0; i < n; ++i) {
      if (data.row_totals(i) > 0.0) {
        mean += data.counts(i, j) / data.row_totals(i);
        ++rows;
      }
    }
    mean = rows > 0 ? mean / static_cast<double>(rows) : 1.0 / static_cast<double>(jn);
    // A category that is never observed would give log 0; keep it finite.
    p.beta0(j) = std::log(std::max(mean, 1e-8));
  }
  p.beta = MatrixXd::Zero(static_cast<Index>(data.predictors()), jn);
  p.xi.assign(data.categories(), InclusionVector(data.predictors()));
  dm_refresh(data, p);
  return p;
}

void dm_refresh(const DMData& data, DMParams& p) {
  const auto n = static_cast<Index>(data.n());
  const auto jn = static_cast<Index>(data.categories());
  p.lin = MatrixXd::Zero(n, jn);
  p.gamma.resize(n, jn);
  for (Index j = 0; j < jn; ++j) {
    for (std::size_t q : p.xi[static_cast<std::size_t>(j)].active_indices()) {
      p.lin.col(j) += data.x.col(static_cast<Index>(q)) * p.beta(static_cast<Index>(q), j);
    }
    for (Index i = 0; i < n; ++i) p.gamma(i, j) = dm_link(p.beta0(j) + p.lin(i, j));
  }
  p.gamma_row = p.gamma.rowwise().sum();
  p.loglik = dm_total_loglik(data, p);
}

double dm_logpmf(std::span<const double> counts, std::span<const double> gamma) {
  if (counts.size() != gamma.size()) throw DomainError("dm_logpmf: length mismatch");
  double ytot = 0.0;
  double gtot = 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (!(gamma[j] > 0.0) || !std::isfinite(gamma[j])) {
      throw DomainError("dm_logpmf: concentrations must be positive");
    }
    ytot += counts[j];
    gtot += gamma[j];
    s += log_gamma(counts[j] + gamma[j]) - log_gamma(counts[j] + 1.0) - log_gamma(gamma[j]);
  }
  return s + log_gamma(ytot + 1.0) + log_gamma(gtot) - log_gamma(ytot + gtot);
}

double dm_total_loglik(const DMData& data, const DMParams& params) {
  const auto n = static_cast<Index>(data.n());
  const auto jn = static_cast<Index>(data.categories());
  if (params.gamma.rows() != n || params.gamma.cols() != jn) {
    throw DomainError("cached concentrations have the wrong shape");
  }
  double total = 0.0;
  std::vector<double> y(static_cast<std::size_t>(jn));
  std::vector<double> g(static_cast<std::size_t>(jn));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < jn; ++j) {
      y[static_cast<std::size_t>(j)] = data.counts(i, j);
      g[static_cast<std::size_t>(j)] = params.gamma(i, j);
    }
    total += dm_logpmf(y, g);
  }
  return total;
}

double dm_baseline_loglik(const DMData& data, const VectorXd& beta0) {
  const auto n = static_cast<Index>(data.n());
  const auto jn = static_cast<Index>(data.categories());
  if (beta0.size() != jn) throw DomainError("intercept vector has the wrong length");
  std::vector<double> g(static_cast<std::size_t>(jn));
  for (Index j = 0; j < jn; ++j) g[static_cast<std::size_t>(j)] = dm_link(beta0(j));
  std::vector<double> y(static_cast<std::size_t>(jn));
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < jn; ++j) y[static_cast<std::size_t>(j)] = data.counts(i, j);
    total += dm_logpmf(y, g);
  }
  return total;
}

IncrementalLogLik dm_incremental_loglik(const DMData& data, const DMParams& params, std::size_t j,
                                        const VectorXd& new_gamma_col) {
  const auto n = static_cast<Index>(data.n());
  const auto jj = static_cast<Index>(j);
  if (new_gamma_col.size() != n) throw DomainError("new concentration column has the wrong length");
  IncrementalLogLik r;
  for (Index i = 0; i < n; ++i) {
    const double gn = new_gamma_col(i);
    const double go = params.gamma(i, jj);
    if (!(gn > 0.0)) throw DomainError("updated concentrations must be positive");
    if (gn == go) continue;
    const double y = data.counts(i, jj);
    r.delta1 += log_gamma(y + gn) - log_gamma(gn) - log_gamma(y + go) + log_gamma(go);
    const double row_old = params.gamma_row(i);
    const double row_new = row_old - go + gn;
    if (!(row_new > 0.0)) throw DomainError("updated row sums must be positive");
    const double ytot = data.row_totals(i);
    r.delta2 += log_gamma(row_new) - log_gamma(row_old) - log_gamma(ytot + row_new) +
                log_gamma(ytot + row_old);
  }
  r.total = params.loglik + r.delta1 + r.delta2;
  return r;
}

void dm_set_category(const DMData& data, DMParams& params, std::size_t j,
                     const InclusionVector& xi_j, const VectorXd& beta_active) {
  const auto jj = static_cast<Index>(j);
  const std::vector<std::size_t> act = xi_j.active_indices();
  if (static_cast<Index>(act.size()) != beta_active.size()) {
    throw DomainError("coefficient vector does not match the active set");
  }
  const auto n = static_cast<Index>(data.n());
  VectorXd lin = VectorXd::Zero(n);
  params.beta.col(jj).setZero();
  for (std::size_t a = 0; a < act.size(); ++a) {
    const double b = beta_active(static_cast<Index>(a));
    params.beta(static_cast<Index>(act[a]), jj) = b;
    lin += data.x.col(static_cast<Index>(act[a])) * b;
  }
  VectorXd col(n);
  for (Index i = 0; i < n; ++i) col(i) = dm_link(params.beta0(jj) + lin(i));
  const IncrementalLogLik inc = dm_incremental_loglik(data, params, j, col);
  for (Index i = 0; i < n; ++i) {
    params.gamma_row(i) += col(i) - params.gamma(i, jj);
  }
  params.gamma.col(jj) = col;
  params.lin.col(jj) = lin;
  params.xi[j] = xi_j;
  params.loglik = inc.total;
}

CategoryObjective dm_category_objective(const DMData& data, const DMParams& params,
                                        std::size_t j, const std::vector<std::size_t>& active,
                                        const VectorXd& beta_j, const DMPriors& priors,
                                        bool want_hessian) {
  if (beta_j.size() != static_cast<Index>(active.size())) {
    throw DomainError("coefficient vector does not match the active set");
  }
  const CategoryContext ctx(data, params, j, active, priors);
  return ctx.evaluate(beta_j, want_hessian);
}

GradHess dm_grad_hess(const DMData& data, const DMParams& params, std::size_t j,
                      const std::vector<std::size_t>& active, const VectorXd& beta_j,
                      const DMPriors& priors) {
  CategoryObjective o = dm_category_objective(data, params, j, active, beta_j, priors, true);
  return {std::move(o.gradient), std::move(o.hessian)};
}

WarmStartCache::Category& WarmStartCache::category(std::size_t j) {
  if (categories_.size() <= j) categories_.resize(j + 1);
  return categories_[j];
}

std::optional<VectorXd> WarmStartCache::get(std::size_t j, const InclusionVector& active) {
  std::lock_guard lock(mutex_);
  Category& c = category(j);
  auto it = c.index.find(active);
  if (it == c.index.end()) return std::nullopt;
  c.order.splice(c.order.begin(), c.order, it->second);
  return it->second->second;
}

void WarmStartCache::put(std::size_t j, const InclusionVector& active, const VectorXd& beta) {
  if (capacity_ == 0) return;
  std::lock_guard lock(mutex_);
  Category& c = category(j);
  auto it = c.index.find(active);
  if (it != c.index.end()) {
    it->second->second = beta;
    c.order.splice(c.order.begin(), c.order, it->second);
    return;
  }
  c.order.emplace_front(active, beta);
  c.index.emplace(active, c.order.begin());
  if (c.order.size() > capacity_) {
    c.index.erase(c.order.back().first);
    c.order.pop_back();
  }
}

std::size_t WarmStartCache::size(std::size_t j) const {
  std::lock_guard lock(mutex_);
  return j < categories_.size() ? categories_[j].order.size() : 0;
}

PMLEResult dm_pmle(const DMData& data, const DMParams& params, std::size_t j,
                   const std::vector<std::size_t>& active, const DMPriors& priors,
                   WarmStartCache* cache, const PMLEOptions& options) {
  const CategoryContext ctx(data, params, j, active, priors);
  const auto k = static_cast<Index>(active.size());
  const InclusionVector key = InclusionVector::from_indices(data.predictors(), active);

  VectorXd start(k);
  std::optional<VectorXd> warm = cache ? cache->get(j, key) : std::nullopt;
  if (warm && warm->size() == k) {
    start = *warm;
  } else {
    for (Index a = 0; a < k; ++a) {
      start(a) = params.beta(static_cast<Index>(active[static_cast<std::size_t>(a)]),
                             static_cast<Index>(j));
    }
  }

  PMLEResult out;
  if (k == 0) {
    const CategoryObjective o = ctx.evaluate(start, true);
    out.beta_hat = start;
    out.hessian = MatrixXd(0, 0);
    out.objective = o.value;
    out.count_terms = o.count_terms;
    out.gamma_col = o.gamma_col;
    return out;
  }

  // The last full evaluation is kept so that the Hessian and the fitted
  // column at the optimum come for free.
  CategoryObjective last = ctx.evaluate(start, true);
  VectorXd last_x = start;
  std::optional<MatrixXd> h0;
  if (options.exact_initial_hessian) {
    Eigen::LLT<MatrixXd> llt(-last.hessian);
    if (llt.info() == Eigen::Success) h0 = llt.solve(MatrixXd::Identity(k, k));
  }
  bool first = true;
  auto objective = [&](const VectorXd& b, VectorXd& grad) {
    if (first && b == start) {
      first = false;
    } else {
      last = ctx.evaluate(b, true);
      last_x = b;
    }
    grad = -last.gradient;
    return -last.value;
  };
  const LbfgsResult res = lbfgs_minimize(objective, start, options.lbfgs, h0);
  if (!res.converged) {
    throw NumericalError("penalised fit for category " + std::to_string(j) + " did not converge (" +
                         res.message + ", |g| = " + std::to_string(res.g.lpNorm<Eigen::Infinity>()) +
                         ")");
  }
  if (!(last_x == res.x)) {
    last = ctx.evaluate(res.x, true);
  }
  out.beta_hat = res.x;
  out.hessian = last.hessian;
  out.objective = last.value;
  out.grad_norm = last.gradient.lpNorm<Eigen::Infinity>();
  out.count_terms = last.count_terms;
  out.gamma_col = last.gamma_col;
  out.iterations = res.iterations;
  if (cache) cache->put(j, key, out.beta_hat);
  return out;
}

BaselineTerms::BaselineTerms(const DMData& data, const VectorXd& beta0, std::size_t j) {
  const auto jn = static_cast<Index>(data.categories());
  const auto jj = static_cast<Index>(j);
  double total = 0.0;
  for (Index k = 0; k < jn; ++k) {
    const double g = dm_link(beta0(k));
    total += g;
    if (k != jj) others_ += g;
  }
  const double g0 = dm_link(beta0(jj));
  const auto n = static_cast<Index>(data.n());
  const double lg_total = log_gamma_fast(total);
  const double lg_g0 = log_gamma_fast(g0);
  for (Index i = 0; i < n; ++i) {
    const double y = data.counts(i, jj);
    if (y > 0.0) reference_ += log_gamma_fast(y + g0) - lg_g0;
    reference_ += lg_total - log_gamma_fast(data.row_totals(i) + total);
  }
}

LRStat BaselineTerms::evaluate(const DMData& data, const VectorXd& gamma_col, double count_terms,
                               std::size_t active_size) const {
  LRStat r;
  // An empty active set reproduces the baseline column exactly.
  if (active_size == 0) return r;
  double l = count_terms;
  const auto n = static_cast<Index>(data.n());
  for (Index i = 0; i < n; ++i) {
    const double s = others_ + gamma_col(i);
    l += log_gamma_fast(s) - log_gamma_fast(data.row_totals(i) + s);
  }
  r.lr = std::max(0.0, 2.0 * (l - reference_));
  const int dof = static_cast<int>(std::max<std::size_t>(1, active_size));
  r.log10_p = std::max(kDissimilarityFloor, chi2_log_sf(r.lr, dof) / kLn10);
  if (r.log10_p > 0.0) r.log10_p = 0.0;
  return r;
}

CategoryProposal dm_category_proposal(const DMData& data, const DMParams& params, std::size_t j,
                                      const DMPriors& priors, double lambda,
                                      WarmStartCache* cache, const PMLEOptions& options) {
  if (!(lambda > 0.0)) throw DomainError("proposal exponent must be positive");
  const std::size_t p = data.predictors();
  CategoryProposal q;
  q.category = j;
  q.origin = params.xi[j];
  q.lambda = lambda;
  q.candidates.resize(p);
  q.log_weights.resize(p);
  const BaselineTerms base(data, params.beta0, j);
  for (std::size_t f = 0; f < p; ++f) {
    const InclusionVector flipped = q.origin.flipped(f);
    const std::vector<std::size_t> act = flipped.active_indices();
    CandidateFit& c = q.candidates[f];
    try {
      c.fit = dm_pmle(data, params, j, act, priors, cache, options);
      const LRStat s = base.evaluate(data, c.fit.gamma_col, c.fit.count_terms, act.size());
      c.lr = s.lr;
      c.log10_p = s.log10_p;
      c.ok = true;
    } catch (const NumericalError& e) {
      log_warning(std::string("candidate fit failed: ") + e.what());
      c.ok = false;
      c.log10_p = 0.0;
    }
    q.log_weights[f] = similarity_weight(c.log10_p, lambda);
  }
  q.log_normalizer = log_sum_exp(q.log_weights);
  q.probabilities.resize(p);
  for (std::size_t f = 0; f < p; ++f) {
    q.probabilities[f] = std::exp(q.log_weights[f] - q.log_normalizer);
  }
  return q;
}

std::vector<double> dm_category_proposal_probs(const DMData& data, const DMParams& params,
                                               std::size_t j, const DMPriors& priors,
                                               double lambda, WarmStartCache* cache) {
  return dm_category_proposal(data, params, j, priors, lambda, cache).probabilities;
}

}  // namespace sdmh

#include "sdmh/conjlinear.hpp"

#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

#include "sdmh/errors.hpp"
#include "sdmh/special.hpp"

namespace sdmh {

namespace {

using Index = Eigen::Index;

std::vector<Index> design_indices(const std::vector<std::size_t>& active) {
  std::vector<Index> idx;
  idx.reserve(active.size() + 1);
  idx.push_back(0);
  for (std::size_t p : active) idx.push_back(static_cast<Index>(p) + 1);
  return idx;
}

bool is_diagonal(const MatrixXd& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

double floor_log10(double log_p) {
  const double d = log_p / kLn10;
  return d < kDissimilarityFloor ? kDissimilarityFloor : (d > 0.0 ? 0.0 : d);
}

}  // namespace

NIGPrior NIGPrior::diffuse(std::size_t predictors, double precision, double a0, double b0) {
  const auto d = static_cast<Index>(predictors) + 1;
  NIGPrior prior;
  prior.mu0 = VectorXd::Zero(d);
  prior.lambda0 = precision * MatrixXd::Identity(d, d);
  prior.a0 = a0;
  prior.b0 = b0;
  return prior;
}

void NIGPrior::validate(std::size_t predictors) const {
  const auto d = static_cast<Index>(predictors) + 1;
  if (mu0.size() != d) throw ConfigError("NIG prior mean has the wrong length");
  if (lambda0.rows() != d || lambda0.cols() != d) {
    throw ConfigError("NIG prior precision has the wrong shape");
  }
  if (!(a0 > 0.0) || !(b0 > 0.0)) throw ConfigError("NIG prior requires a0 > 0 and b0 > 0");
  try {
    (void)cholesky(SymmetricMatrix(lambda0));
  } catch (const DomainError&) {
    throw ConfigError("NIG prior precision is not symmetric");
  } catch (const CholeskyError&) {
    throw ConfigError("NIG prior precision is not positive definite");
  }
}

double log_model_prior(const ModelPrior& prior, const InclusionVector& xi) {
  const double k = static_cast<double>(xi.popcount());
  const double p = static_cast<double>(xi.size());
  return log_beta(k + prior.a_pi, p - k + prior.b_pi) - log_beta(prior.a_pi, prior.b_pi);
}

DissimilarityKind parse_dissimilarity(std::string_view name) {
  if (name == "F" || name == "f") return DissimilarityKind::F;
  if (name == "LR" || name == "lr") return DissimilarityKind::LR;
  throw ConfigError("unknown dissimilarity '" + std::string(name) + "' (expected F or LR)");
}

std::string_view to_string(DissimilarityKind kind) {
  return kind == DissimilarityKind::F ? "F" : "LR";
}

double f_dissimilarity_from_rss(double rss0, double rss, std::size_t n, std::size_t active) {
  if (active == 0) return 0.0;
  if (n <= active + 1) {
    throw DegreesOfFreedomError("F dissimilarity needs n > P' + 1 (n = " + std::to_string(n) +
                                ", P' = " + std::to_string(active) + ")");
  }
  if (!(rss > 0.0)) return kDissimilarityFloor;
  const auto d1 = static_cast<int>(active);
  const auto d2 = static_cast<int>(n - active - 1);
  double f = ((rss0 - rss) / d1) / (rss / d2);
  if (f < 0.0) f = 0.0;
  return floor_log10(f_log_sf(f, d1, d2));
}

double lr_dissimilarity_from_rss(double rss0, double rss, std::size_t n, std::size_t active) {
  if (active == 0) return 0.0;
  if (n <= active + 1) {
    throw DegreesOfFreedomError("LR dissimilarity needs n > P' + 1 (n = " + std::to_string(n) +
                                ", P' = " + std::to_string(active) + ")");
  }
  if (!(rss > 0.0)) return kDissimilarityFloor;
  double stat = static_cast<double>(n) * std::log(rss0 / rss);
  if (stat < 0.0) stat = 0.0;
  return floor_log10(chi2_log_sf(stat, static_cast<int>(active)));
}

struct LinearProblem::Cache {
  mutable std::shared_mutex mutex;
  std::unordered_map<InclusionVector, ConfigStats, InclusionVectorHash> map;
};

LinearProblem::LinearProblem(MatrixXd x, VectorXd y, NIGPrior prior, ModelPrior model_prior,
                             bool use_cache)
    : x_(std::move(x)), y_(std::move(y)), prior_(std::move(prior)), model_prior_(model_prior) {
  if (x_.rows() != y_.size()) {
    throw DataError("design has " + std::to_string(x_.rows()) + " rows but response has " +
                    std::to_string(y_.size()) + " entries");
  }
  if (x_.rows() < 2) throw DataError("at least two observations are required");
  if (!x_.allFinite() || !y_.allFinite()) throw DataError("design or response is not finite");
  prior_.validate(predictors());
  if (!(model_prior_.a_pi > 0.0) || !(model_prior_.b_pi > 0.0)) {
    throw ConfigError("model prior requires a_pi > 0 and b_pi > 0");
  }

  const Index n = x_.rows();
  const Index p = x_.cols();
  const VectorXd means = x_.colwise().mean().transpose();
  const MatrixXd xc = x_.rowwise() - means.transpose();
  const VectorXd yc = y_.array() - y_.mean();
  centered_gram_ = xc.transpose() * xc;
  centered_xty_ = xc.transpose() * yc;
  rss0_ = yc.squaredNorm();

  MatrixXd d(n, p + 1);
  d.col(0).setOnes();
  d.rightCols(p) = x_;
  gram_ = d.transpose() * d;
  xty_ = d.transpose() * y_;
  yty_ = y_.squaredNorm();
  diagonal_prior_ = is_diagonal(prior_.lambda0);

  if (use_cache) cache_ = std::make_unique<Cache>();
}

LinearProblem::~LinearProblem() = default;
LinearProblem::LinearProblem(LinearProblem&&) noexcept = default;
LinearProblem& LinearProblem::operator=(LinearProblem&&) noexcept = default;

void LinearProblem::check(const InclusionVector& xi) const {
  if (xi.size() != predictors()) {
    throw DomainError("inclusion vector has length " + std::to_string(xi.size()) +
                      " but the problem has " + std::to_string(predictors()) + " predictors");
  }
}

double LinearProblem::compute_rss(const std::vector<std::size_t>& active) const {
  if (active.empty()) return rss0_;
  std::vector<Index> idx(active.begin(), active.end());
  const MatrixXd g = centered_gram_(idx, idx);
  const VectorXd b = centered_xty_(idx);
  Eigen::LLT<MatrixXd> llt(g);
  if (llt.info() == Eigen::Success) {
    const VectorXd z = llt.matrixL().solve(b);
    const double rss = rss0_ - z.squaredNorm();
    if (rss > 1e-8 * rss0_) return rss;
  }
  // Ill-conditioned or near-interpolating subsets: orthogonal factorization of
  // the explicit design, which also handles more columns than rows.
  const Index n = x_.rows();
  MatrixXd d(n, static_cast<Index>(active.size()) + 1);
  d.col(0).setOnes();
  for (std::size_t k = 0; k < active.size(); ++k) {
    d.col(static_cast<Index>(k) + 1) = x_.col(static_cast<Index>(active[k]));
  }
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(d);
  const VectorXd beta = cod.solve(y_);
  return (y_ - d * beta).squaredNorm();
}

double LinearProblem::compute_log_marginal(const std::vector<std::size_t>& active) const {
  const std::vector<Index> idx = design_indices(active);
  const auto k = static_cast<Index>(idx.size());
  const VectorXd mu0 = prior_.mu0(idx);

  double log_det_prior = 0.0;
  double prior_quad = 0.0;
  MatrixXd lambda_n = gram_(idx, idx);
  VectorXd h = xty_(idx);
  if (diagonal_prior_) {
    for (Index a = 0; a < k; ++a) {
      const double lam = prior_.lambda0(idx[a], idx[a]);
      lambda_n(a, a) += lam;
      h(a) += lam * mu0(a);
      log_det_prior += std::log(lam);
      prior_quad += lam * mu0(a) * mu0(a);
    }
  } else {
    const MatrixXd lambda0 = prior_.lambda0(idx, idx);
    Eigen::LLT<MatrixXd> l0(lambda0);
    const MatrixXd l0m = l0.matrixL();
    log_det_prior = log_det_from_cholesky(l0m);
    const VectorXd l0mu = lambda0 * mu0;
    prior_quad = mu0.dot(l0mu);
    lambda_n += lambda0;
    h += l0mu;
  }

  Eigen::LLT<MatrixXd> ln(lambda_n);
  if (ln.info() != Eigen::Success) {
    throw NumericalError("posterior precision is not positive definite for a model of size " +
                         std::to_string(active.size()));
  }
  const MatrixXd lm = ln.matrixL();
  const double log_det_post = log_det_from_cholesky(lm);
  const VectorXd z = ln.matrixL().solve(h);

  const double n = static_cast<double>(x_.rows());
  const double an = prior_.a0 + 0.5 * n;
  const double bn = prior_.b0 + 0.5 * (yty_ + prior_quad - z.squaredNorm());
  if (!(bn > 0.0) || !std::isfinite(bn)) {
    std::ostringstream msg;
    msg << "posterior scale b_n = " << bn << " is not positive (model size " << active.size()
        << ", y'y = " << yty_ << ")";
    throw NumericalError(msg.str());
  }
  return -0.5 * n * kLn2Pi + 0.5 * (log_det_prior - log_det_post) + log_gamma(an) -
         log_gamma(prior_.a0) + prior_.a0 * std::log(prior_.b0) - an * std::log(bn);
}

ConfigStats LinearProblem::compute_stats(const InclusionVector& xi) const {
  check(xi);
  const std::vector<std::size_t> active = xi.active_indices();
  ConfigStats s;
  s.rss = compute_rss(active);
  s.log_marginal = compute_log_marginal(active);
  s.log_prior = sdmh::log_model_prior(model_prior_, xi);
  s.dof_ok = active.empty() || n() > active.size() + 1;
  if (s.dof_ok) {
    s.d_f = f_dissimilarity_from_rss(rss0_, s.rss, n(), active.size());
    s.d_lr = lr_dissimilarity_from_rss(rss0_, s.rss, n(), active.size());
  }
  return s;
}

ConfigStats LinearProblem::stats(const InclusionVector& xi) const {
  if (!cache_) return compute_stats(xi);
  {
    std::shared_lock lock(cache_->mutex);
    auto it = cache_->map.find(xi);
    if (it != cache_->map.end()) return it->second;
  }
  ConfigStats s = compute_stats(xi);
  std::unique_lock lock(cache_->mutex);
  return cache_->map.try_emplace(xi, s).first->second;
}

double LinearProblem::log_marginal_likelihood(const InclusionVector& xi) const {
  return stats(xi).log_marginal;
}

double LinearProblem::log_model_prior(const InclusionVector& xi) const {
  check(xi);
  return sdmh::log_model_prior(model_prior_, xi);
}

double LinearProblem::log_posterior(const InclusionVector& xi) const {
  const ConfigStats s = stats(xi);
  return s.log_marginal + s.log_prior;
}

double LinearProblem::rss(const InclusionVector& xi) const { return stats(xi).rss; }

double LinearProblem::f_dissimilarity(const InclusionVector& xi) const {
  const ConfigStats s = stats(xi);
  if (!s.dof_ok) return f_dissimilarity_from_rss(rss0_, s.rss, n(), xi.popcount());
  return s.d_f;
}

double LinearProblem::lr_dissimilarity(const InclusionVector& xi) const {
  const ConfigStats s = stats(xi);
  if (!s.dof_ok) return lr_dissimilarity_from_rss(rss0_, s.rss, n(), xi.popcount());
  return s.d_lr;
}

double LinearProblem::dissimilarity(DissimilarityKind kind, const InclusionVector& xi) const {
  return kind == DissimilarityKind::F ? f_dissimilarity(xi) : lr_dissimilarity(xi);
}

std::size_t LinearProblem::cache_size() const {
  if (!cache_) return 0;
  std::shared_lock lock(cache_->mutex);
  return cache_->map.size();
}

double LinearScorer::log_posterior(const InclusionVector& xi) const {
  return problem_->log_posterior(xi);
}

double LinearScorer::dissimilarity(const InclusionVector& xi) const {
  return problem_->dissimilarity(kind_, xi);
}

}  // namespace sdmh

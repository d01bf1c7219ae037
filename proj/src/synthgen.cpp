#include "sdmh/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "sdmh/errors.hpp"
#include "sdmh/rng.hpp"

namespace sdmh {

using Index = Eigen::Index;

namespace {

MatrixXd correlated_design(std::size_t n, std::size_t predictors, double rho, Rng& rng) {
  const MatrixXd l = toeplitz_factor(predictors, rho);
  MatrixXd z(static_cast<Index>(n), static_cast<Index>(predictors));
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index p = 0; p < z.cols(); ++p) z(i, p) = rng.normal();
  }
  MatrixXd x = z * l.transpose();
  standardize_columns(x);
  return x;
}

}  // namespace

void LinearSynthConfig::validate() const {
  if (n < 2) throw ConfigError("n must be at least 2");
  if (predictors == 0) throw ConfigError("P must be positive");
  if (n_active > predictors) throw ConfigError("n_active exceeds P");
  if (!(std::abs(rho) < 1.0)) throw ConfigError("rho must satisfy |rho| < 1");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ConfigError("sigma2 must be positive");
}

MatrixXd toeplitz_factor(std::size_t predictors, double rho) {
  const auto p = static_cast<Index>(predictors);
  MatrixXd t(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) t(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  Eigen::LLT<MatrixXd> llt(t);
  if (llt.info() != Eigen::Success) throw NumericalError("Toeplitz covariance is not positive definite");
  return llt.matrixL();
}

void standardize_columns(MatrixXd& x) {
  const Index n = x.rows();
  for (Index p = 0; p < x.cols(); ++p) {
    const double mean = x.col(p).mean();
    x.col(p).array() -= mean;
    // A second centring pass removes the rounding left by the first.
    x.col(p).array() -= x.col(p).mean();
    const double sd = std::sqrt(x.col(p).squaredNorm() / static_cast<double>(n - 1));
    if (sd > 0.0) x.col(p) /= sd;
  }
}

LinearSynth gen_linear(const LinearSynthConfig& config) {
  config.validate();
  Rng design(derive_seed(config.seed, 1));
  Rng truth_rng(derive_seed(config.seed, 2));
  Rng noise(derive_seed(config.seed, 3));

  LinearSynth out;
  out.x = correlated_design(config.n, config.predictors, config.rho, design);

  std::vector<std::size_t> idx(config.predictors);
  for (std::size_t p = 0; p < idx.size(); ++p) idx[p] = p;
  for (std::size_t i = 0; i < config.n_active; ++i) {
    const std::size_t k = i + truth_rng.uniform_index(idx.size() - i);
    std::swap(idx[i], idx[k]);
  }
  std::vector<std::size_t> active(idx.begin(), idx.begin() + static_cast<long>(config.n_active));
  std::sort(active.begin(), active.end());
  out.truth = InclusionVector::from_indices(config.predictors, active);
  out.intercept = truth_rng.normal();
  out.beta = VectorXd::Zero(static_cast<Index>(config.predictors));
  for (std::size_t p : active) out.beta(static_cast<Index>(p)) = truth_rng.normal();

  const double sd = std::sqrt(config.sigma2);
  out.y = (out.x * out.beta).array() + out.intercept;
  for (Index i = 0; i < out.y.size(); ++i) out.y(i) += sd * noise.normal();
  return out;
}

void DMSynthConfig::validate() const {
  if (n == 0 || predictors == 0) throw ConfigError("n and P must be positive");
  if (categories < 2) throw ConfigError("at least two categories are required");
  if (!(std::abs(rho) < 1.0)) throw ConfigError("rho must satisfy |rho| < 1");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& a : associations) {
    if (a.predictor >= predictors || a.category >= categories) {
      throw ConfigError("association (" + std::to_string(a.predictor) + ", " +
                        std::to_string(a.category) + ") is out of range");
    }
    if (!seen.insert({a.predictor, a.category}).second) {
      throw ConfigError("duplicate association");
    }
  }
  if (associations.empty() && n_random > predictors * categories) {
    throw ConfigError("more random associations than predictor-category pairs");
  }
  if (!(depth_base >= 0.0) || !(depth_poisson_mean >= 0.0)) {
    throw ConfigError("depth parameters must be nonnegative");
  }
  if (!std::isfinite(intercept) || !std::isfinite(magnitude)) {
    throw ConfigError("intercept and magnitude must be finite");
  }
}

DMSynth gen_dm(const DMSynthConfig& config) {
  config.validate();
  Rng design(derive_seed(config.seed, 1));
  Rng truth_rng(derive_seed(config.seed, 2));
  Rng counts_rng(derive_seed(config.seed, 3));

  const auto n = static_cast<Index>(config.n);
  const auto pn = static_cast<Index>(config.predictors);
  const auto jn = static_cast<Index>(config.categories);
  MatrixXd x = correlated_design(config.n, config.predictors, config.rho, design);

  DMSynth out;
  out.associations = config.associations;
  if (out.associations.empty()) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    while (out.associations.size() < config.n_random) {
      const std::size_t p = truth_rng.uniform_index(config.predictors);
      const std::size_t j = truth_rng.uniform_index(config.categories);
      const double sign = truth_rng.uniform() < 0.5 ? -1.0 : 1.0;
      if (seen.insert({p, j}).second) out.associations.push_back({p, j, sign * config.magnitude});
    }
  }
  out.beta0 = VectorXd::Constant(jn, config.intercept);
  out.beta = MatrixXd::Zero(pn, jn);
  out.truth.assign(config.categories, InclusionVector(config.predictors));
  for (const auto& a : out.associations) {
    out.beta(static_cast<Index>(a.predictor), static_cast<Index>(a.category)) = a.coefficient;
    out.truth[a.category].set(a.predictor, true);
  }

  MatrixXd counts(n, jn);
  std::vector<double> phi(config.categories);
  for (Index i = 0; i < n; ++i) {
    double total = 0.0;
    for (Index j = 0; j < jn; ++j) {
      const double eta = out.beta0(j) + x.row(i).dot(out.beta.col(j));
      const double g = std::exp(std::clamp(eta, -kEtaClamp, kEtaClamp));
      phi[static_cast<std::size_t>(j)] = counts_rng.gamma(g);
      total += phi[static_cast<std::size_t>(j)];
    }
    auto depth = static_cast<std::uint64_t>(config.depth_base) +
                 counts_rng.poisson(config.depth_poisson_mean);
    // Multinomial by sequential conditional binomials.
    double rest = 1.0;
    for (Index j = 0; j < jn; ++j) {
      const double pj = total > 0.0 ? phi[static_cast<std::size_t>(j)] / total : 1.0 / static_cast<double>(jn);
      std::uint64_t c = 0;
      if (j + 1 == jn) {
        c = depth;
      } else if (depth > 0 && rest > 0.0) {
        c = counts_rng.binomial(depth, std::clamp(pj / rest, 0.0, 1.0));
      }
      counts(i, j) = static_cast<double>(c);
      depth -= c;
      rest -= pj;
    }
  }
  out.data = DMData::make(std::move(counts), std::move(x));
  return out;
}

}  // namespace sdmh

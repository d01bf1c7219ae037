#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance run: tail integrals by quadrature and the marginal likelihood as
// an explicit multivariate t density, all in long double where it matters.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "sdmh/conjlinear.hpp"
#include "sdmh/linalg.hpp"
#include "sdmh/rng.hpp"

namespace sdmh::oracle {

inline long double chi2_tail_quadrature(double x, int k) {
  const long double h = k / 2.0L;
  const long double norm = std::lgamma(h) + h * std::log(2.0L);
  auto density = [&](long double t) {
    if (t <= 0) return 0.0L;
    return std::exp((h - 1) * std::log(t) - t / 2 - norm);
  };
  boost::math::quadrature::exp_sinh<long double> integrator;
  return integrator.integrate(density, static_cast<long double>(x),
                              std::numeric_limits<long double>::infinity());
}

inline long double f_tail_quadrature(double f, int d1, int d2) {
  const long double a = d1 / 2.0L, b = d2 / 2.0L;
  const long double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const long double r = static_cast<long double>(d1) / d2;
  auto density = [&](long double t) {
    if (t <= 0) return 0.0L;
    return std::exp(a * std::log(r) + (a - 1) * std::log(t) - (a + b) * std::log1p(r * t) - lbeta);
  };
  boost::math::quadrature::exp_sinh<long double> integrator;
  return integrator.integrate(density, static_cast<long double>(f),
                              std::numeric_limits<long double>::infinity());
}

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

inline MatrixXd gaussian(Rng& rng, Eigen::Index r, Eigen::Index c) {
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

// log density of y under y ~ t_{2 a0}(X mu0, (b0 / a0)(I + X L0^{-1} X')).
inline long double student_t_marginal(const MatrixXd& x, const VectorXd& y, const VectorXd& mu0,
                                      const MatrixXd& lambda0, double a0, double b0) {
  const MatL xl = x.cast<long double>();
  const VecL yl = y.cast<long double>();
  const Eigen::Index n = x.rows();
  const long double nu = 2.0L * a0;
  const MatL cov = (static_cast<long double>(b0) / a0) *
                   (MatL::Identity(n, n) +
                    xl * lambda0.cast<long double>().inverse() * xl.transpose());
  const VecL r = yl - xl * mu0.cast<long double>();
  Eigen::LLT<MatL> llt(cov);
  const MatL l = llt.matrixL();
  long double logdet = 0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2 * std::log(l(i, i));
  const long double q = r.dot(llt.solve(r));
  const long double nl = static_cast<long double>(n);
  return std::lgamma((nu + nl) / 2) - std::lgamma(nu / 2) - nl / 2 * std::log(nu * std::numbers::pi_v<long double>) -
         logdet / 2 - (nu + nl) / 2 * std::log1p(q / nu);
}

struct Sub {
  MatrixXd x;
  VectorXd mu0;
  MatrixXd lambda0;
};

inline Sub subset(const LinearProblem& prob, const InclusionVector& xi) {
  const auto act = xi.active_indices();
  std::vector<Eigen::Index> idx{0};
  for (auto p : act) idx.push_back(static_cast<Eigen::Index>(p) + 1);
  const auto k = static_cast<Eigen::Index>(idx.size());
  Sub s;
  s.x.resize(static_cast<Eigen::Index>(prob.n()), k);
  s.x.col(0).setOnes();
  for (Eigen::Index c = 1; c < k; ++c) s.x.col(c) = prob.x().col(idx[c] - 1);
  s.mu0.resize(k);
  s.lambda0.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    s.mu0(a) = prob.prior().mu0(idx[a]);
    for (Eigen::Index b = 0; b < k; ++b) s.lambda0(a, b) = prob.prior().lambda0(idx[a], idx[b]);
  }
  return s;
}

// log marginal likelihood of y = 0 (n = 3, intercept only, unit prior
// precision, a0 = b0 = 1) by nested quadrature over sigma2 and beta0.
inline double intercept_only_quadrature() {
  // integral over sigma2 > 0 of IG(sigma2 | 1, 1) * integral over beta0 of
  // N(beta0 | 0, sigma2) prod_i N(0 | beta0, sigma2)
  auto inner = [](double s2) {
    const double log_ig = -2 * std::log(s2) - 1 / s2;  // 1^1 / Gamma(1) s2^{-2} e^{-1/s2}
    auto f = [s2, log_ig](double b) {
      const double log_prior = -0.5 * std::log(2 * std::numbers::pi * s2) - b * b / (2 * s2);
      const double log_lik = -1.5 * std::log(2 * std::numbers::pi * s2) - 3 * b * b / (2 * s2);
      return std::exp(log_ig + log_prior + log_lik);
    };
    if (!std::isfinite(log_ig) || log_ig < -700) return 0.0;
    boost::math::quadrature::sinh_sinh<double> integ;
    return integ.integrate(f);
  };
  boost::math::quadrature::exp_sinh<double> outer;
  return std::log(outer.integrate(inner, 0.0, std::numeric_limits<double>::infinity()));
}

}  // namespace sdmh::oracle

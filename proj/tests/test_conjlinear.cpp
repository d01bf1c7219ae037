#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "sdmh/conjlinear.hpp"
#include "sdmh/errors.hpp"
#include "sdmh/rng.hpp"
#include "sdmh/special.hpp"
#include "sdmh/synthgen.hpp"
#include "oracles.hpp"

using namespace sdmh;
using namespace sdmh::oracle;

TEST_CASE("log marginal likelihood against 2-D quadrature, n = 3 intercept only") {
  NIGPrior prior;
  prior.mu0 = VectorXd::Zero(2);
  prior.lambda0 = MatrixXd::Identity(2, 2);
  prior.a0 = 1.0;
  prior.b0 = 1.0;
  MatrixXd x(3, 1);
  x << -1, 0, 1;
  LinearProblem prob(x, VectorXd::Zero(3), prior, ModelPrior{});
  const double got = prob.log_marginal_likelihood(InclusionVector(1));

  const double ref = intercept_only_quadrature();
  CHECK(std::fabs((got - ref) / ref) <= 1e-6);
}

TEST_CASE("log marginal likelihood equals the multivariate t density of y") {
  Rng rng(2024);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 12 + rep;
    const std::size_t p = 6;
    MatrixXd x = gaussian(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    VectorXd y = gaussian(rng, static_cast<Eigen::Index>(n), 1) + 0.8 * x.col(1);
    NIGPrior prior;
    prior.mu0 = 0.3 * gaussian(rng, static_cast<Eigen::Index>(p + 1), 1);
    const MatrixXd a = gaussian(rng, static_cast<Eigen::Index>(p + 1), static_cast<Eigen::Index>(p + 1));
    prior.lambda0 = SymmetricMatrix::symmetrized(0.2 * a * a.transpose() +
                                                 0.5 * MatrixXd::Identity(p + 1, p + 1))
                        .matrix();
    prior.a0 = 0.5 + rep * 0.1;
    prior.b0 = 0.3 + rep * 0.05;
    LinearProblem prob(x, y, prior, ModelPrior{});
    InclusionVector xi(p);
    for (std::size_t q = 0; q < p; ++q)
      if (rng.uniform() < 0.5) xi.set(q, true);
    const Sub s = subset(prob, xi);
    const long double ref = student_t_marginal(s.x, y, s.mu0, s.lambda0, prior.a0, prior.b0);
    CHECK(std::fabs(prob.log_marginal_likelihood(xi) - static_cast<double>(ref)) <= 1e-8);
  }
}

TEST_CASE("duplicated predictors give identical marginals") {
  Rng rng(8);
  MatrixXd x = gaussian(rng, 30, 4);
  x.col(3) = x.col(1);
  const VectorXd y = gaussian(rng, 30, 1);
  LinearProblem prob(x, y, NIGPrior::diffuse(4), ModelPrior{});
  const auto a = InclusionVector::from_string("0100");
  const auto b = InclusionVector::from_string("0001");
  CHECK(prob.log_marginal_likelihood(a) == prob.log_marginal_likelihood(b));
  CHECK(prob.f_dissimilarity(a) == prob.f_dissimilarity(b));
}

TEST_CASE("marginal likelihood is exchangeable under column permutation") {
  Rng rng(81);
  const MatrixXd x = gaussian(rng, 25, 5);
  const VectorXd y = gaussian(rng, 25, 1);
  LinearProblem prob(x, y, NIGPrior::diffuse(5, 0.3), ModelPrior{});
  const std::vector<Eigen::Index> perm{3, 0, 4, 1, 2};
  MatrixXd xp(25, 5);
  for (Eigen::Index c = 0; c < 5; ++c) xp.col(c)= x.col(perm[c]);
  LinearProblem permuted(xp, y, NIGPrior::diffuse(5, 0.3), ModelPrior{});
  for (std::size_t idx = 0; idx < 32; ++idx) {
    InclusionVector xi(5), xq(5);
    for (std::size_t c = 0; c < 5; ++c)
      if ((idx >> c) & 1U) {
        xq.set(c, true);
        xi.set(static_cast<std::size_t>(perm[c]), true);
      }
    CHECK(permuted.log_marginal_likelihood(xq) ==
          doctest::Approx(prob.log_marginal_likelihood(xi)).epsilon(1e-12));
  }
}

TEST_CASE("model prior") {
  CHECK(log_model_prior(ModelPrior{1, 1}, InclusionVector::from_string("1")) ==
        doctest::Approx(std::log(0.5)));
  double total = 0;
  for (auto s : {"00", "01", "10", "11"})
    total += std::exp(log_model_prior(ModelPrior{1, 1}, InclusionVector::from_string(s)));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  const ModelPrior mp{1, 9};
  const auto zero = InclusionVector(10);
  const auto one = InclusionVector::from_string("0000100000");
  const double direct0 = log_beta(0 + 1.0, 10 + 9.0) - log_beta(1, 9);
  const double direct1 = log_beta(1 + 1.0, 9 + 9.0) - log_beta(1, 9);
  CHECK(log_model_prior(mp, zero) == doctest::Approx(direct0).epsilon(1e-14));
  CHECK(log_model_prior(mp, one) - log_model_prior(mp, zero) ==
        doctest::Approx(direct1 - direct0).epsilon(1e-13));
}

TEST_CASE("exact enumeration normalizes") {
  Rng rng(12);
  const MatrixXd x = gaussian(rng, 20, 6);
  const VectorXd y = gaussian(rng, 20, 1);
  LinearProblem prob(x, y, NIGPrior::diffuse(6), ModelPrior{2, 3});
  std::vector<double> lp;
  for (std::size_t idx = 0; idx < 64; ++idx) {
    InclusionVector xi(6);
    for (std::size_t c = 0; c < 6; ++c)
      if ((idx >> c) & 1U) xi.set(c, true);
    lp.push_back(prob.log_posterior(xi));
  }
  const double z = log_sum_exp(lp);
  double total = 0;
  for (double v : lp) total += std::exp(v - z);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("F dissimilarity by direct substitution, n = 6") {
  MatrixXd x(6, 1);
  x << 0.1, -1.2, 0.7, 2.0, -0.4, 0.9;
  VectorXd y(6);
  y << 1.0, -0.5, 0.8, 2.7, 0.1, 0.4;
  LinearProblem prob(x, y, NIGPrior::diffuse(1), ModelPrior{});
  const double xm = x.mean(), ym = y.mean();
  const VectorXd xc = x.col(0).array() - xm, yc = y.array() - ym;
  const double rss0 = yc.squaredNorm();
  const double slope = xc.dot(yc) / xc.squaredNorm();
  const double rss1 = (yc - slope * xc).squaredNorm();
  const double f = (rss0 - rss1) / (rss1 / 4.0);
  const auto xi = InclusionVector::from_string("1");
  CHECK(prob.f_dissimilarity(xi) == doctest::Approx(std::log10(f_sf(f, 1, 4))).epsilon(1e-12));
  CHECK(prob.f_dissimilarity(InclusionVector(1)) == 0.0);
  CHECK(prob.lr_dissimilarity(InclusionVector(1)) == 0.0);
  CHECK(prob.lr_dissimilarity(xi) ==
        doctest::Approx(std::log10(chi2_sf(6 * std::log(rss0 / rss1), 1))).epsilon(1e-12));
}

TEST_CASE("LR statistic from the profile likelihood") {
  // RSS0 / RSS = e^{x/n} gives Lambda = n ln(RSS0 / RSS) = x.
  const std::size_t n = 40;
  for (double stat : {0.5, 3.0, 17.0}) {
    const double rss0 = 10.0;
    const double rss = rss0 * std::exp(-stat / static_cast<double>(n));
    CHECK(lr_dissimilarity_from_rss(rss0, rss, n, 2) ==
          doctest::Approx(std::log10(chi2_sf(stat, 2))).epsilon(1e-10));
  }
}

TEST_CASE("dissimilarities are nonpositive, floored, and check dof") {
  CHECK(f_dissimilarity_from_rss(5.0, 0.0, 10, 2) == kDissimilarityFloor);
  CHECK(lr_dissimilarity_from_rss(5.0, 0.0, 10, 2) == kDissimilarityFloor);
  CHECK(f_dissimilarity_from_rss(1e6, 1e-12, 100, 2) >= kDissimilarityFloor);
  CHECK_THROWS_AS(f_dissimilarity_from_rss(5.0, 1.0, 3, 2), DegreesOfFreedomError);
  CHECK_THROWS_AS(lr_dissimilarity_from_rss(5.0, 1.0, 3, 2), DegreesOfFreedomError);

  Rng rng(31);
  const MatrixXd x = gaussian(rng, 5, 6);
  const VectorXd y = gaussian(rng, 5, 1);
  LinearProblem prob(x, y, NIGPrior::diffuse(6), ModelPrior{});
  CHECK_THROWS_AS(prob.f_dissimilarity(InclusionVector::from_string("111100")),
                  DegreesOfFreedomError);
  CHECK(prob.f_dissimilarity(InclusionVector::from_string("110000")) <= 0.0);
}

TEST_CASE("pure-noise F p-values are uniform (KS at 0.01)") {
  const int reps = 1000;
  std::vector<double> pv;
  Rng rng(77);
  for (int r = 0; r < reps; ++r) {
    const MatrixXd x = gaussian(rng, 200, 1);
    const VectorXd y = gaussian(rng, 200, 1);
    LinearProblem prob(x, y, NIGPrior::diffuse(1), ModelPrior{}, false);
    pv.push_back(std::pow(10.0, prob.f_dissimilarity(InclusionVector::from_string("1"))));
  }
  std::sort(pv.begin(), pv.end());
  double ks = 0;
  for (int i = 0; i < reps; ++i) {
    ks = std::max(ks, std::fabs(pv[i] - static_cast<double>(i) / reps));
    ks = std::max(ks, std::fabs(pv[i] - static_cast<double>(i + 1) / reps));
  }
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("nested fits never increase rss") {
  Rng rng(55);
  for (int rep = 0; rep < 100; ++rep) {
    const MatrixXd x = gaussian(rng, 30, 8);
    const VectorXd y = gaussian(rng, 30, 1);
    LinearProblem prob(x, y, NIGPrior::diffuse(8), ModelPrior{});
    InclusionVector xi(8);
    for (std::size_t q = 0; q < 8; ++q)
      if (rng.uniform() < 0.4) xi.set(q, true);
    const std::size_t add = rng.uniform_index(8);
    if (xi.test(add)) continue;
    const double before = prob.rss(xi);
    const double after = prob.rss(xi.flipped(add));
    CHECK(after <= before * (1 + 1e-12));
    CHECK(before <= prob.null_rss() * (1 + 1e-12));
  }
}

TEST_CASE("cache is transparent") {
  LinearSynthConfig cfg;
  cfg.n = 60;
  cfg.predictors = 10;
  cfg.seed = 4;
  const auto syn = gen_linear(cfg);
  LinearProblem cached(syn.x, syn.y, NIGPrior::diffuse(10), ModelPrior{}, true);
  LinearProblem plain(syn.x, syn.y, NIGPrior::diffuse(10), ModelPrior{}, false);
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    InclusionVector xi(10);
    for (std::size_t q = 0; q < 10; ++q)
      if (rng.uniform() < 0.3) xi.set(q, true);
    for (int twice = 0; twice < 2; ++twice) {
      const auto a = cached.stats(xi);
      const auto b = plain.stats(xi);
      CHECK(a.log_marginal == b.log_marginal);
      CHECK(a.d_f == b.d_f);
      CHECK(a.d_lr == b.d_lr);
      CHECK(a.rss == b.rss);
    }
  }
  CHECK(cached.cache_size() > 0);
  CHECK(plain.cache_size() == 0);
}

TEST_CASE("dissimilarity kinds parse") {
  CHECK(parse_dissimilarity("F") == DissimilarityKind::F);
  CHECK(parse_dissimilarity("LR") == DissimilarityKind::LR);
  CHECK(to_string(DissimilarityKind::LR) == "LR");
  CHECK_THROWS(parse_dissimilarity("bogus"));
}

#include <doctest.h>

#include <cmath>
#include <set>

#include "sdmh/diagnostics.hpp"
#include "sdmh/proposal.hpp"
#include "test_support.hpp"

using namespace sdmh;
using sdmh::testing::TableScorer;

namespace {

// Long double flip kernel built straight from the definitions.
std::vector<std::vector<long double>> reference_kernel(const ModelScorer& s, double lambda) {
  const std::size_t p = s.dimension();
  const std::size_t m = std::size_t{1} << p;
  std::vector<long double> logz(m), lp(m);
  std::vector<std::vector<long double>> w(m, std::vector<long double>(p));
  for (std::size_t a = 0; a < m; ++a) {
    lp[a] = s.log_posterior(state_from_index(p, a));
    long double z = 0;
    for (std::size_t f = 0; f < p; ++f) {
      const long double d = s.dissimilarity(state_from_index(p, a ^ (std::size_t{1} << f)));
      w[a][f] = std::pow(-d, static_cast<long double>(lambda));
      z += std::exp(w[a][f]);
    }
    logz[a] = std::log(z);
  }
  std::vector<std::vector<long double>> t(m, std::vector<long double>(m, 0));
  for (std::size_t a = 0; a < m; ++a) {
    long double stay = 1;
    for (std::size_t f = 0; f < p; ++f) {
      const std::size_t b = a ^ (std::size_t{1} << f);
      const long double q_fwd = w[a][f] - logz[a];
      const long double q_rev = w[b][f] - logz[b];
      const long double la = lp[b] - lp[a] + q_rev - q_fwd;
      t[a][b] = std::exp(q_fwd) * std::min(1.0L, std::exp(la));
      stay -= t[a][b];
    }
    t[a][a] = stay;
  }
  return t;
}

}  // namespace

TEST_CASE("single flip neighbourhood") {
  auto nb = single_flip_neighborhood(InclusionVector::from_string("00"));
  REQUIRE(nb.members.size() == 2);
  CHECK(nb.members[0] == InclusionVector::from_string("10"));
  CHECK(nb.members[1] == InclusionVector::from_string("01"));
  auto full = single_flip_neighborhood(InclusionVector::from_string("111"));
  REQUIRE(full.members.size() == 3);
  for (const auto& m : full.members) CHECK(m.popcount() == 2);
}

TEST_CASE("single flip neighbourhood is symmetric, P = 6") {
  for (std::size_t a = 0; a < 64; ++a) {
    const auto xa = state_from_index(6, a);
    const auto na = single_flip_neighborhood(xa);
    std::set<std::size_t> ids;
    for (const auto& m : na.members) {
      CHECK(hamming(m, xa) == 1);
      ids.insert(state_index(m));
    }
    CHECK(ids.size() == 6);
    for (std::size_t b = 0; b < 64; ++b) {
      const auto nb = single_flip_neighborhood(state_from_index(6, b));
      bool b_has_a = false;
      for (const auto& m : nb.members) b_has_a |= state_index(m) == a;
      CHECK(ids.contains(b) == b_has_a);
    }
  }
}

TEST_CASE("similarity weight") {
  CHECK(similarity_weight(0.0, 0.3) == 0.0);
  CHECK(similarity_weight(0.0, 7.0) == 0.0);
  CHECK(similarity_weight(-4.0, 0.5) == doctest::Approx(2.0));
  CHECK(std::fabs(similarity_weight(-1.0, 1e-9) - similarity_weight(-250.0, 1e-9)) < 1e-8);
}

TEST_CASE("proposal from dissimilarities") {
  const auto nb = single_flip_neighborhood(InclusionVector(3));
  auto uniform = make_proposal(nb, {-2.0, -2.0, -2.0}, 1.3);
  for (double p : uniform.probabilities) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-14));

  auto soft = make_proposal(nb, {-1.0, -2.0, -3.0}, 1.0);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(soft.probabilities[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
  CHECK(soft.probabilities[2] == doctest::Approx(std::exp(3.0) / z).epsilon(1e-14));
  double sum = 0;
  for (std::size_t i = 0; i < soft.size(); ++i) {
    sum += soft.probabilities[i];
    CHECK(soft.probabilities[i] == doctest::Approx(std::exp(soft.log_probability(i))).epsilon(1e-14));
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // huge weights stay finite in log space
  auto sharp = make_proposal(nb, {-300.0, -299.0, -1.0}, 10.0);
  CHECK(sharp.probabilities[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(sharp.log_normalizer));

  CHECK_THROWS(make_proposal(nb, {-1.0, std::nan(""), -1.0}, 1.0));
}

TEST_CASE("proposal against long double recomputation, P = 8") {
  auto prob = sdmh::testing::small_problem(50, 8, 3);
  LinearScorer scorer(prob, DissimilarityKind::F);
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    InclusionVector xi(8);
    for (std::size_t q = 0; q < 8; ++q)
      if (rng.uniform() < 0.3) xi.set(q, true);
    const double lambda = 0.05 + 2.0 * rng.uniform();
    const auto prop = build_flip_proposal(scorer, xi, lambda);
    std::vector<long double> w;
    long double z = 0;
    for (std::size_t f = 0; f < 8; ++f) {
      const long double d = scorer.dissimilarity(xi.flipped(f));
      w.push_back(std::exp(std::pow(-d, static_cast<long double>(lambda))));
      z += w.back();
    }
    for (std::size_t f = 0; f < 8; ++f)
      CHECK(std::fabs(prop.probabilities[f] - static_cast<double>(w[f] / z)) <= 1e-12);
  }
}

TEST_CASE("higher lambda concentrates on the most dissimilar-to-null member") {
  const auto nb = single_flip_neighborhood(InclusionVector(4));
  const std::vector<double> d{-0.5, -3.0, -1.2, -2.0};
  double prev = 0;
  for (double lambda : {0.05, 0.3, 0.7, 1.0, 1.5, 3.0}) {
    const auto prop = make_proposal(nb, d, lambda);
    CHECK(prop.probabilities[1] >= prev);
    prev = prop.probabilities[1];
  }
}

TEST_CASE("inverse cdf and sampling") {
  const std::vector<double> p{0.2, 0.0, 0.5, 0.3};
  CHECK(inverse_cdf(p, 0.0) == 0);
  CHECK(inverse_cdf(p, 0.2) == 2);
  CHECK(inverse_cdf(p, 0.6999) == 2);
  CHECK(inverse_cdf(p, 0.7) == 3);
  CHECK(inverse_cdf(p, 0.999999) == 3);

  const auto nb = single_flip_neighborhood(InclusionVector(3));
  auto det = make_proposal(nb, {-300.0, -1.0, -1.0}, 1.0);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto draw = sample_proposal(det, rng);
    CHECK(draw.index == 0);
    CHECK(draw.candidate == nb.members[0]);
  }

  const std::size_t P = 5;
  auto uni = make_proposal(single_flip_neighborhood(InclusionVector(P)),
                           std::vector<double>(P, -1.0), 1.0);
  std::vector<int> counts(P);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto draw = sample_proposal(uni, rng);
    CHECK(draw.log_forward == uni.log_probability(draw.index));
    counts[draw.index]++;
  }
  const double sd = std::sqrt(n * 0.2 * 0.8);
  for (int c : counts) CHECK(std::fabs(c - n * 0.2) <= 3 * sd);
}

TEST_CASE("acceptance reduces to the posterior ratio for constant dissimilarity") {
  std::vector<double> lp(16), d(16, -2.0);
  Rng rng(6);
  for (auto& v : lp) v = rng.normal();
  d[0] = -2.0;
  TableScorer s(4, lp, d);
  for (std::size_t a = 0; a < 16; ++a) {
    const auto xa = state_from_index(4, a);
    const auto fwd = build_flip_proposal(s, xa, 0.8);
    for (std::size_t f = 0; f < 4; ++f) {
      const auto rev = build_flip_proposal(s, fwd.neighborhood.members[f], 0.8);
      const std::size_t b = a ^ (std::size_t{1} << f);
      CHECK(flip_log_acceptance(fwd, f, rev, lp[a], lp[b]) ==
            doctest::Approx(lp[b] - lp[a]).epsilon(1e-13));
    }
  }
}

TEST_CASE("mh_accept_flip accepts an overwhelmingly better candidate") {
  std::vector<double> lp(4, 0.0), d(4, -1.0);
  lp[1] = 500.0;
  TableScorer s(2, lp, d);
  const auto fwd = build_flip_proposal(s, InclusionVector(2), 1.0);
  Rng rng(1);
  ProposalDraw draw{0, fwd.neighborhood.members[0], fwd.log_probability(0)};
  const auto r = mh_accept_flip(s, fwd, draw, rng);
  CHECK(r.outcome.accepted);
  CHECK(r.outcome.log_alpha > 400);
  CHECK(r.reverse.neighborhood.origin == draw.candidate);
}

TEST_CASE("flip kernel, P = 4: entries match long double and detailed balance holds") {
  auto prob = sdmh::testing::small_problem(30, 4, 10);
  for (auto kind : {DissimilarityKind::F, DissimilarityKind::LR}) {
    LinearScorer scorer(prob, kind);
    for (double lambda : {0.2, 0.7, 1.5}) {
      const MatrixXd t = flip_kernel_matrix(scorer, lambda);
      const auto ref = reference_kernel(scorer, lambda);
      double worst = 0;
      for (std::size_t a = 0; a < 16; ++a)
        for (std::size_t b = 0; b < 16; ++b)
          worst = std::max(worst, std::fabs(t(a, b) - static_cast<double>(ref[a][b])));
      CHECK(worst <= 1e-12);
      const auto pi = exact_posterior(scorer);
      const auto bal = detailed_balance(t, pi);
      CHECK(bal.max_flow_gap <= 1e-12);
      CHECK(bal.stationarity_gap <= 1e-12);
    }
  }
  const auto table = TableScorer::random(4, 99);
  const auto pi = exact_posterior(table);
  const auto bal = detailed_balance(flip_kernel_matrix(table, 1.1), pi);
  CHECK(bal.max_flow_gap <= 1e-12);
  CHECK(bal.stationarity_gap <= 1e-12);
}

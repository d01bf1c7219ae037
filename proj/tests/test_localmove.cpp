#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sdmh/diagnostics.hpp"
#include "sdmh/errors.hpp"
#include "sdmh/localmove.hpp"
#include "sdmh/synthgen.hpp"
#include "test_support.hpp"

using namespace sdmh;
using sdmh::testing::TableScorer;

namespace {

DependencyGraph random_graph(std::size_t p, double density, Rng& rng) {
  DependencyGraph g(p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b)
      if (rng.uniform() < density) g.add_edge(a, b);
  return g;
}

DependencyGraph path_graph(std::size_t p) {
  DependencyGraph g(p);
  for (std::size_t a = 0; a + 1 < p; ++a) g.add_edge(a, a + 1);
  return g;
}

}  // namespace

TEST_CASE("graph construction is symmetric") {
  Rng rng(1);
  const auto g = random_graph(8, 0.4, rng);
  for (std::size_t a = 0; a < 8; ++a) {
    CHECK(!g.connected(a, a));
    for (std::size_t b : g.neighbors(a)) CHECK(g.connected(b, a));
    CHECK(std::is_sorted(g.neighbors(a).begin(), g.neighbors(a).end()));
  }
  const auto again = DependencyGraph::from_edges(8, g.edges());
  CHECK(again.edges() == g.edges());
}

TEST_CASE("estimate_graph on simple designs") {
  MatrixXd q = MatrixXd::Zero(8, 4);
  for (int i = 0; i < 4; ++i) {
    q(2 * i, i) = 1;
    q(2 * i + 1, i) = -1;
  }
  CHECK(estimate_graph(q, 0.5).edge_count() == 0);

  Rng rng(3);
  MatrixXd x(50, 5);
  for (Eigen::Index i = 0; i < 50; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = rng.normal();
  x.col(4) = x.col(1);
  const auto g = estimate_graph(x, 0.99);
  CHECK(g.edge_count() == 1);
  CHECK(g.connected(1, 4));

  x.col(2).setConstant(3.0);
  CHECK(estimate_graph(x, 0.99).neighbors(2).empty());
  CHECK_THROWS_AS(estimate_graph(x, 1.5), DomainError);
}

TEST_CASE("Toeplitz design connects lag-1 columns") {
  int hits = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    LinearSynthConfig cfg;
    cfg.n = 200;
    cfg.predictors = 20;
    cfg.rho = 0.9;
    cfg.seed = seed;
    const auto g = estimate_graph(gen_linear(cfg).x, 0.5);
    for (std::size_t p = 0; p + 1 < 20; ++p) {
      hits += g.connected(p, p + 1);
      ++total;
    }
  }
  CHECK(static_cast<double>(hits) / total >= 0.95);
}

TEST_CASE("adjacency file round trip and errors") {
  const auto dir = std::filesystem::temp_directory_path() / "sdmh_adj_test";
  std::filesystem::create_directories(dir);
  Rng rng(4);
  const auto g = random_graph(7, 0.5, rng);
  write_adjacency(dir / "g.txt", g);
  CHECK(read_adjacency(dir / "g.txt", 7).edges() == g.edges());
  {
    std::ofstream f(dir / "c.txt");
    f << "# comment\n0 1\n\n2 3\n";
  }
  CHECK(read_adjacency(dir / "c.txt", 4).edge_count() == 2);
  {
    std::ofstream f(dir / "bad.txt");
    f << "0 9\n";
  }
  CHECK_THROWS_AS(read_adjacency(dir / "bad.txt", 4), DataError);
  {
    std::ofstream f(dir / "bad2.txt");
    f << "0 x\n";
  }
  CHECK_THROWS_AS(read_adjacency(dir / "bad2.txt", 4), DataError);
  CHECK_THROWS_AS(read_adjacency(dir / "missing.txt", 4), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("active swappable set") {
  Rng rng(5);
  DependencyGraph complete(5);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b) complete.add_edge(a, b);
  CHECK(active_swappable_set(InclusionVector(5), complete).empty());
  CHECK(active_swappable_set(InclusionVector::from_string("00100"), complete) ==
        std::vector<std::size_t>{2});

  for (int rep = 0; rep < 10; ++rep) {
    const auto g = random_graph(6, 0.35, rng);
    for (std::size_t s = 0; s < 64; ++s) {
      const auto xi = state_from_index(6, s);
      std::vector<std::size_t> brute;
      for (std::size_t p = 0; p < 6; ++p) {
        if (!xi.test(p)) continue;
        bool any = false;
        for (std::size_t q = 0; q < 6; ++q) any |= g.connected(p, q) && !xi.test(q);
        if (any) brute.push_back(p);
      }
      CHECK(active_swappable_set(xi, g) == brute);
    }
  }
}

TEST_CASE("swap proposal probabilities") {
  // p = 0 active with a single inactive neighbour
  std::vector<double> lp(8, 0.0), d(8, -1.0);
  TableScorer s(3, lp, d);
  DependencyGraph g(3);
  g.add_edge(0, 1);
  const auto xi = InclusionVector::from_string("100");
  const auto prop = build_swap_proposal(s, xi, g, 1.25);
  REQUIRE(prop.candidates.size() == 1);
  CHECK(std::exp(prop.log_probabilities[0]) == doctest::Approx(1.0));

  DependencyGraph star(3);
  star.add_edge(0, 1);
  star.add_edge(0, 2);
  const auto two = build_swap_proposal(s, xi, star, 1.25);
  REQUIRE(two.candidates.size() == 2);
  CHECK(std::exp(two.log_probabilities[0]) == doctest::Approx(0.5));
  CHECK(std::exp(two.log_probabilities[1]) == doctest::Approx(0.5));
}

TEST_CASE("swap proposal against long double, P = 6") {
  const auto s = TableScorer::random(6, 17);
  Rng rng(8);
  const auto g = random_graph(6, 0.5, rng);
  const double lm = 1.25;
  for (std::size_t st = 0; st < 64; ++st) {
    const auto xi = state_from_index(6, st);
    const auto prop = build_swap_proposal(s, xi, g, lm);
    const auto a = active_swappable_set(xi, g);
    for (std::size_t c = 0; c < prop.candidates.size(); ++c) {
      const auto [p, q] = std::pair{prop.candidates[c].deactivate, prop.candidates[c].activate};
      long double z = 0, wq = 0;
      for (std::size_t r : g.neighbors(p)) {
        if (xi.test(r)) continue;
        const long double w =
            std::exp(std::pow(-static_cast<long double>(s.dissimilarity(apply_swap(xi, {p, r}))),
                              static_cast<long double>(lm)));
        z += w;
        if (r == q) wq = w;
      }
      const long double ref = wq / z / a.size();
      CHECK(std::fabs(std::exp(prop.log_probabilities[c]) - static_cast<double>(ref)) <= 1e-12);
      CHECK(swap_log_probability(s, xi, g, prop.candidates[c], lm) ==
            doctest::Approx(prop.log_probabilities[c]).epsilon(1e-14));
    }
  }
}

TEST_CASE("swap moves preserve size and change two coordinates") {
  const auto s = TableScorer::random(6, 21);
  Rng rng(9);
  const auto g = random_graph(6, 0.5, rng);
  for (int rep = 0; rep < 500; ++rep) {
    const auto xi = state_from_index(6, rng.uniform_index(64));
    const auto draw = sample_swap(s, xi, g, 1.25, rng);
    if (!draw.possible) {
      CHECK(active_swappable_set(xi, g).empty());
      continue;
    }
    CHECK(hamming(xi, draw.proposed) == 2);
    CHECK(draw.proposed.popcount() == xi.popcount());
    CHECK(draw.log_forward == doctest::Approx(swap_log_probability(s, xi, g, draw.candidate, 1.25)));
  }
}

TEST_CASE("symmetric two-node swap with equal posteriors has alpha = 1") {
  std::vector<double> lp(4, 0.0), d(4, -2.0);
  TableScorer s(2, lp, d);
  DependencyGraph g(2);
  g.add_edge(0, 1);
  Rng rng(2);
  const auto xi = InclusionVector::from_string("10");
  const auto draw = sample_swap(s, xi, g, 1.25, rng);
  REQUIRE(draw.possible);
  CHECK(swap_log_acceptance(s, xi, draw, g, 1.25) == doctest::Approx(0.0).epsilon(1e-15));
  const auto out = mh_accept_swap(s, xi, draw, g, 1.25, rng);
  CHECK(out.accepted);

  std::vector<double> better(4, 0.0);
  better[2] = 5.0;  // state "01"
  TableScorer sb(2, better, d);
  const auto draw2 = sample_swap(sb, xi, g, 1.25, rng);
  CHECK(mh_accept_swap(sb, xi, draw2, g, 1.25, rng).accepted);
}

TEST_CASE("swap kernel detailed balance, P = 5") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const auto s = TableScorer::random(5, seed);
    Rng rng(seed);
    const auto g = random_graph(5, 0.5, rng);
    const auto pi = exact_posterior(s);
    const auto bal = detailed_balance(swap_kernel_matrix(s, g, 1.25), pi);
    CHECK(bal.max_flow_gap <= 1e-12);
    CHECK(bal.stationarity_gap <= 1e-12);
  }
}

TEST_CASE("flip then swap leaves the posterior invariant, P = 5") {
  auto prob = sdmh::testing::small_problem(40, 5, 6, 0.8);
  LinearScorer scorer(prob, DissimilarityKind::F);
  const auto g = path_graph(5);
  const auto pi = exact_posterior(scorer);
  const MatrixXd t = flip_kernel_matrix(scorer, 0.7) * swap_kernel_matrix(scorer, g, 1.25);
  Eigen::RowVectorXd v(32);
  for (int i = 0; i < 32; ++i) v(i) = pi[i];
  CHECK((v * t - v).cwiseAbs().maxCoeff() <= 1e-10);
}

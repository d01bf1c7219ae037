#include "sdmh/localmove.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "sdmh/errors.hpp"
#include "sdmh/log.hpp"
#include "sdmh/special.hpp"

namespace sdmh {

DependencyGraph DependencyGraph::from_edges(
    std::size_t nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  DependencyGraph g(nodes);
  for (const auto& [p, q] : edges) g.add_edge(p, q);
  return g;
}

void DependencyGraph::add_edge(std::size_t p, std::size_t q) {
  if (p >= adj_.size() || q >= adj_.size()) throw DomainError("graph edge index out of range");
  if (p == q) throw DomainError("graph self-loops are not allowed");
  auto insert = [](std::vector<std::size_t>& v, std::size_t x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  };
  insert(adj_[p], q);
  insert(adj_[q], p);
}

bool DependencyGraph::connected(std::size_t p, std::size_t q) const {
  return std::binary_search(adj_[p].begin(), adj_[p].end(), q);
}

std::size_t DependencyGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& a : adj_) twice += a.size();
  return twice / 2;
}

std::vector<std::pair<std::size_t, std::size_t>> DependencyGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t p = 0; p < adj_.size(); ++p) {
    for (std::size_t q : adj_[p]) {
      if (p < q) out.emplace_back(p, q);
    }
  }
  return out;
}

DependencyGraph estimate_graph(const MatrixXd& x, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw DomainError("graph threshold must lie in (0, 1)");
  }
  const auto p = static_cast<std::size_t>(x.cols());
  DependencyGraph g(p);
  if (x.rows() < 2) return g;
  MatrixXd z = x.rowwise() - x.colwise().mean();
  std::vector<bool> constant(p, false);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double norm = z.col(j).norm();
    if (!(norm > 0.0)) {
      constant[static_cast<std::size_t>(j)] = true;
      z.col(j).setZero();
      log_warning("column " + std::to_string(j) + " is constant; it gets no graph edges");
    } else {
      z.col(j) /= norm;
    }
  }
  const MatrixXd corr = z.transpose() * z;
  for (std::size_t a = 0; a < p; ++a) {
    if (constant[a]) continue;
    for (std::size_t b = a + 1; b < p; ++b) {
      if (constant[b]) continue;
      if (std::abs(corr(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) >= threshold) {
        g.add_edge(a, b);
      }
    }
  }
  return g;
}

DependencyGraph read_adjacency(const std::filesystem::path& path, std::size_t nodes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open adjacency file " + path.string());
  DependencyGraph g(nodes);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    long long p = -1;
    long long q = -1;
    std::string rest;
    if (!(ss >> p >> q) || (ss >> rest)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 'p q'");
    }
    if (p < 0 || q < 0 || static_cast<std::size_t>(p) >= nodes ||
        static_cast<std::size_t>(q) >= nodes || p == q) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": invalid edge");
    }
    g.add_edge(static_cast<std::size_t>(p), static_cast<std::size_t>(q));
  }
  return g;
}

void write_adjacency(const std::filesystem::path& path, const DependencyGraph& graph) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write adjacency file " + path.string());
  out << "# p q\n";
  for (const auto& [p, q] : graph.edges()) out << p << ' ' << q << '\n';
}

std::vector<std::size_t> active_swappable_set(const InclusionVector& xi,
                                              const DependencyGraph& graph) {
  if (xi.size() != graph.size()) throw DomainError("graph and inclusion vector sizes differ");
  std::vector<std::size_t> out;
  for (std::size_t p : xi.active_indices()) {
    for (std::size_t q : graph.neighbors(p)) {
      if (!xi.test(q)) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

InclusionVector apply_swap(const InclusionVector& xi, const SwapCandidate& c) {
  if (!xi.test(c.deactivate) || xi.test(c.activate)) {
    throw DomainError("swap must deactivate an active and activate an inactive predictor");
  }
  InclusionVector out = xi;
  out.set(c.deactivate, false);
  out.set(c.activate, true);
  return out;
}

SwapConditional build_swap_conditional(const ModelScorer& scorer, const InclusionVector& xi,
                                       const DependencyGraph& graph, std::size_t p,
                                       double lambda_move) {
  if (!(lambda_move > 0.0)) throw DomainError("lambda_move must be positive");
  SwapConditional c;
  c.deactivate = p;
  for (std::size_t q : graph.neighbors(p)) {
    if (!xi.test(q)) c.targets.push_back(q);
  }
  if (c.targets.empty()) throw DomainError("predictor has no inactive neighbour to swap with");
  c.log_weights.resize(c.targets.size());
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    const double d = scorer.dissimilarity(apply_swap(xi, {p, c.targets[i]}));
    if (!std::isfinite(d) || d > 0.0) {
      throw NumericalError("invalid dissimilarity for swap candidate");
    }
    c.log_weights[i] = similarity_weight(d, lambda_move);
  }
  c.log_normalizer = log_sum_exp(c.log_weights);
  c.probabilities.resize(c.targets.size());
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    c.probabilities[i] = std::exp(c.log_weights[i] - c.log_normalizer);
  }
  return c;
}

SwapProposal build_swap_proposal(const ModelScorer& scorer, const InclusionVector& xi,
                                 const DependencyGraph& graph, double lambda_move) {
  SwapProposal sp;
  sp.origin = xi;
  sp.swappable = active_swappable_set(xi, graph);
  const double log_pick = -std::log(static_cast<double>(sp.swappable.size()));
  for (std::size_t p : sp.swappable) {
    const SwapConditional c = build_swap_conditional(scorer, xi, graph, p, lambda_move);
    for (std::size_t i = 0; i < c.targets.size(); ++i) {
      sp.candidates.push_back({p, c.targets[i]});
      sp.log_probabilities.push_back(log_pick + c.log_weights[i] - c.log_normalizer);
    }
  }
  return sp;
}

double swap_log_probability(const ModelScorer& scorer, const InclusionVector& xi,
                            const DependencyGraph& graph, const SwapCandidate& c,
                            double lambda_move) {
  const std::vector<std::size_t> a = active_swappable_set(xi, graph);
  if (!std::binary_search(a.begin(), a.end(), c.deactivate)) {
    return -std::numeric_limits<double>::infinity();
  }
  const SwapConditional cond = build_swap_conditional(scorer, xi, graph, c.deactivate, lambda_move);
  const auto it = std::find(cond.targets.begin(), cond.targets.end(), c.activate);
  if (it == cond.targets.end()) return -std::numeric_limits<double>::infinity();
  const auto i = static_cast<std::size_t>(it - cond.targets.begin());
  return -std::log(static_cast<double>(a.size())) + cond.log_weights[i] - cond.log_normalizer;
}

SwapDraw sample_swap(const ModelScorer& scorer, const InclusionVector& xi,
                     const DependencyGraph& graph, double lambda_move, Rng& rng) {
  SwapDraw draw;
  const std::vector<std::size_t> a = active_swappable_set(xi, graph);
  if (a.empty()) return draw;
  const std::size_t p = a[rng.uniform_index(a.size())];
  const SwapConditional cond = build_swap_conditional(scorer, xi, graph, p, lambda_move);
  const std::size_t i = inverse_cdf(cond.probabilities, rng.uniform());
  draw.possible = true;
  draw.candidate = {p, cond.targets[i]};
  draw.proposed = apply_swap(xi, draw.candidate);
  draw.log_forward =
      -std::log(static_cast<double>(a.size())) + cond.log_weights[i] - cond.log_normalizer;
  return draw;
}

double swap_log_acceptance(const ModelScorer& scorer, const InclusionVector& xi,
                           const SwapDraw& draw, const DependencyGraph& graph,
                           double lambda_move) {
  const SwapCandidate back{draw.candidate.activate, draw.candidate.deactivate};
  const double log_reverse = swap_log_probability(scorer, draw.proposed, graph, back, lambda_move);
  if (!std::isfinite(log_reverse)) {
    throw NumericalError("reverse swap is impossible; the graph must be symmetric");
  }
  return scorer.log_posterior(draw.proposed) - scorer.log_posterior(xi) + log_reverse -
         draw.log_forward;
}

MoveOutcome mh_accept_swap(const ModelScorer& scorer, const InclusionVector& xi,
                           const SwapDraw& draw, const DependencyGraph& graph, double lambda_move,
                           Rng& rng) {
  MoveOutcome out;
  if (!draw.possible) return out;
  out.log_uniform = std::log(rng.uniform_open());
  try {
    out.log_alpha = swap_log_acceptance(scorer, xi, draw, graph, lambda_move);
    if (std::isnan(out.log_alpha)) throw NumericalError("swap acceptance ratio is NaN");
  } catch (const std::exception& e) {
    log_warning(std::string("swap move rejected: ") + e.what());
    out.failed = true;
    out.log_alpha = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.accepted = out.log_uniform < out.log_alpha;
  return out;
}

}  // namespace sdmh

#pragma once

// Size-preserving swap moves guided by a dependency graph over predictors.
// A swap deactivates an active predictor p and activates an inactive graph
// neighbour q. The forward kernel picks p uniformly from the swappable set
// A(xi) and q with probability proportional to exp{(-d(xi^(p,q)))^lambda}
// among the inactive neighbours of p.

#include <cstddef>
#include <filesystem>
#include <utility>
#include <vector>

#include "sdmh/inclusion.hpp"
#include "sdmh/linalg.hpp"
#include "sdmh/proposal.hpp"
#include "sdmh/rng.hpp"
#include "sdmh/scorer.hpp"

namespace sdmh {

class DependencyGraph {
 public:
  DependencyGraph() = default;
  explicit DependencyGraph(std::size_t nodes) : adj_(nodes) {}
  static DependencyGraph from_edges(std::size_t nodes,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  std::size_t size() const { return adj_.size(); }
  /// Sorted neighbour list.
  const std::vector<std::size_t>& neighbors(std::size_t p) const { return adj_[p]; }
  bool connected(std::size_t p, std::size_t q) const;
  std::size_t edge_count() const;
  /// Each undirected edge once, as (p, q) with p < q, in lexicographic order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  void add_edge(std::size_t p, std::size_t q);

 private:
  std::vector<std::vector<std::size_t>> adj_;
};

/// Edge (p, q) iff |corr(X_p, X_q)| >= threshold. Constant columns get no
/// edges (a warning is logged).
DependencyGraph estimate_graph(const MatrixXd& x, double threshold = 0.5);

/// One "p q" pair per line, 0-based; blank lines and lines starting with
/// '#' are skipped. Throws DataError on malformed lines or out-of-range
/// indices.
DependencyGraph read_adjacency(const std::filesystem::path& path, std::size_t nodes);
void write_adjacency(const std::filesystem::path& path, const DependencyGraph& graph);

/// A(xi): active predictors with at least one inactive neighbour, ascending.
std::vector<std::size_t> active_swappable_set(const InclusionVector& xi,
                                              const DependencyGraph& graph);

struct SwapCandidate {
  std::size_t deactivate = 0;
  std::size_t activate = 0;
  friend bool operator==(const SwapCandidate&, const SwapCandidate&) = default;
};

InclusionVector apply_swap(const InclusionVector& xi, const SwapCandidate& c);

/// Conditional distribution over the inactive neighbours of one active p.
struct SwapConditional {
  std::size_t deactivate = 0;
  std::vector<std::size_t> targets;
  std::vector<double> log_weights;
  double log_normalizer = 0.0;
  std::vector<double> probabilities;
};

SwapConditional build_swap_conditional(const ModelScorer& scorer, const InclusionVector& xi,
                                       const DependencyGraph& graph, std::size_t p,
                                       double lambda_move);

/// The full swap kernel at xi, enumerated: every candidate with its
/// probability (1 / |A(xi)|) * conditional. Empty when A(xi) is empty.
struct SwapProposal {
  InclusionVector origin;
  std::vector<std::size_t> swappable;
  std::vector<SwapCandidate> candidates;
  std::vector<double> log_probabilities;
};

SwapProposal build_swap_proposal(const ModelScorer& scorer, const InclusionVector& xi,
                                 const DependencyGraph& graph, double lambda_move);

/// log Q_move(xi^(p,q) | xi).
double swap_log_probability(const ModelScorer& scorer, const InclusionVector& xi,
                            const DependencyGraph& graph, const SwapCandidate& c,
                            double lambda_move);

struct SwapDraw {
  bool possible = false;  // false when A(xi) is empty
  SwapCandidate candidate;
  InclusionVector proposed;
  double log_forward = 0.0;
};

/// Draws p uniformly from A(xi), then q from its conditional. Only the
/// chosen p's neighbours are scored.
SwapDraw sample_swap(const ModelScorer& scorer, const InclusionVector& xi,
                     const DependencyGraph& graph, double lambda_move, Rng& rng);

/// Log acceptance ratio of a drawn swap; the reverse move selects the newly
/// activated predictor and swaps back.
double swap_log_acceptance(const ModelScorer& scorer, const InclusionVector& xi,
                           const SwapDraw& draw, const DependencyGraph& graph,
                           double lambda_move);

MoveOutcome mh_accept_swap(const ModelScorer& scorer, const InclusionVector& xi,
                           const SwapDraw& draw, const DependencyGraph& graph, double lambda_move,
                           Rng& rng);

}  // namespace sdmh

#pragma once

// Similarity-driven proposals over a neighbourhood of inclusion vectors.
// A candidate with dissimilarity d receives log-weight (-d)^lambda on top
// of a uniform base kernel; all arithmetic stays in log space.

#include <cstddef>
#include <vector>

#include "sdmh/inclusion.hpp"
#include "sdmh/rng.hpp"
#include "sdmh/scorer.hpp"

namespace sdmh {

struct Neighborhood {
  InclusionVector origin;
  std::vector<InclusionVector> members;
};

/// All P single-coordinate flips of xi, ordered by flipped index.
Neighborhood single_flip_neighborhood(const InclusionVector& xi);

/// (-d)^lambda, the log of the unnormalised weight.
double similarity_weight(double d, double lambda);

struct SimilarityProposal {
  Neighborhood neighborhood;
  double lambda = 1.0;
  std::vector<double> dissimilarities;
  std::vector<double> log_weights;
  double log_normalizer = 0.0;
  std::vector<double> probabilities;

  std::size_t size() const { return log_weights.size(); }
  double log_probability(std::size_t i) const { return log_weights[i] - log_normalizer; }
  /// Position of `candidate` among the members, or size() when absent.
  std::size_t find(const InclusionVector& candidate) const;
};

/// Weights from precomputed dissimilarities (one per member).
SimilarityProposal make_proposal(Neighborhood neighborhood, std::vector<double> dissimilarities,
                                 double lambda);
SimilarityProposal build_proposal(const ModelScorer& scorer, Neighborhood neighborhood,
                                  double lambda);
SimilarityProposal build_flip_proposal(const ModelScorer& scorer, const InclusionVector& xi,
                                       double lambda);

/// Index of the first member whose cumulative probability strictly exceeds u.
std::size_t inverse_cdf(const std::vector<double>& probabilities, double u);

struct ProposalDraw {
  std::size_t index = 0;
  InclusionVector candidate;
  double log_forward = 0.0;
};

ProposalDraw sample_proposal(const SimilarityProposal& proposal, Rng& rng);

/// Log acceptance ratio for a move from forward.neighborhood.origin to
/// member `index`, given the proposal built at the candidate.
double flip_log_acceptance(const SimilarityProposal& forward, std::size_t index,
                           const SimilarityProposal& reverse, double log_post_current,
                           double log_post_candidate);

struct MoveOutcome {
  bool accepted = false;
  bool failed = false;  // evaluation error; counted as a rejection
  double log_alpha = 0.0;
  double log_uniform = 0.0;
};

struct FlipResult {
  MoveOutcome outcome;
  ProposalDraw draw;
  /// Proposal built at the candidate. When the move is accepted this is the
  /// forward proposal of the next step.
  SimilarityProposal reverse;
};

/// Metropolis-Hastings decision for a sampled flip. The uniform is always
/// drawn so that the random stream does not depend on the outcome.
FlipResult mh_accept_flip(const ModelScorer& scorer, const SimilarityProposal& forward,
                          const ProposalDraw& draw, Rng& rng);

}  // namespace sdmh

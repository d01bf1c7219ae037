#include "sdmh/proposal.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "sdmh/errors.hpp"
#include "sdmh/log.hpp"
#include "sdmh/special.hpp"

namespace sdmh {

Neighborhood single_flip_neighborhood(const InclusionVector& xi) {
  Neighborhood nb;
  nb.origin = xi;
  nb.members.reserve(xi.size());
  for (std::size_t p = 0; p < xi.size(); ++p) nb.members.push_back(xi.flipped(p));
  return nb;
}

double similarity_weight(double d, double lambda) {
  if (d >= 0.0) return 0.0;
  return std::pow(-d, lambda);
}

std::size_t SimilarityProposal::find(const InclusionVector& candidate) const {
  for (std::size_t i = 0; i < neighborhood.members.size(); ++i) {
    if (neighborhood.members[i] == candidate) return i;
  }
  return size();
}

SimilarityProposal make_proposal(Neighborhood neighborhood, std::vector<double> dissimilarities,
                                 double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("proposal exponent lambda must be positive and finite");
  }
  if (dissimilarities.size() != neighborhood.members.size()) {
    throw DomainError("one dissimilarity per neighbourhood member is required");
  }
  if (neighborhood.members.empty()) throw DomainError("empty neighbourhood");
  SimilarityProposal q;
  q.lambda = lambda;
  q.log_weights.resize(dissimilarities.size());
  for (std::size_t i = 0; i < dissimilarities.size(); ++i) {
    const double w = similarity_weight(dissimilarities[i], lambda);
    if (!std::isfinite(w)) {
      throw NumericalError("non-finite proposal weight for member " + std::to_string(i) + " (" +
                           neighborhood.members[i].to_string() + ")");
    }
    q.log_weights[i] = w;
  }
  q.log_normalizer = log_sum_exp(q.log_weights);
  q.probabilities.resize(q.log_weights.size());
  for (std::size_t i = 0; i < q.log_weights.size(); ++i) {
    q.probabilities[i] = std::exp(q.log_weights[i] - q.log_normalizer);
  }
  q.neighborhood = std::move(neighborhood);
  q.dissimilarities = std::move(dissimilarities);
  return q;
}

SimilarityProposal build_proposal(const ModelScorer& scorer, Neighborhood neighborhood,
                                  double lambda) {
  std::vector<double> d(neighborhood.members.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = scorer.dissimilarity(neighborhood.members[i]);
    if (!std::isfinite(d[i]) || d[i] > 0.0) {
      throw NumericalError("invalid dissimilarity " + std::to_string(d[i]) + " for member " +
                           std::to_string(i));
    }
  }
  return make_proposal(std::move(neighborhood), std::move(d), lambda);
}

SimilarityProposal build_flip_proposal(const ModelScorer& scorer, const InclusionVector& xi,
                                       double lambda) {
  return build_proposal(scorer, single_flip_neighborhood(xi), lambda);
}

std::size_t inverse_cdf(const std::vector<double>& probabilities, double u) {
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cum += probabilities[i];
    if (probabilities[i] > 0.0) last_positive = i;
    if (cum > u) return i;
  }
  return last_positive;
}

ProposalDraw sample_proposal(const SimilarityProposal& proposal, Rng& rng) {
  ProposalDraw draw;
  draw.index = inverse_cdf(proposal.probabilities, rng.uniform());
  draw.candidate = proposal.neighborhood.members[draw.index];
  draw.log_forward = proposal.log_probability(draw.index);
  return draw;
}

double flip_log_acceptance(const SimilarityProposal& forward, std::size_t index,
                           const SimilarityProposal& reverse, double log_post_current,
                           double log_post_candidate) {
  const std::size_t back = reverse.find(forward.neighborhood.origin);
  if (back == reverse.size()) {
    throw DomainError("reverse neighbourhood does not contain the current state");
  }
  return (log_post_candidate - log_post_current) + reverse.log_probability(back) -
         forward.log_probability(index);
}

FlipResult mh_accept_flip(const ModelScorer& scorer, const SimilarityProposal& forward,
                          const ProposalDraw& draw, Rng& rng) {
  FlipResult r;
  r.draw = draw;
  const double log_u = std::log(rng.uniform_open());
  r.outcome.log_uniform = log_u;
  try {
    r.reverse = build_flip_proposal(scorer, draw.candidate, forward.lambda);
    const double lp_cur = scorer.log_posterior(forward.neighborhood.origin);
    const double lp_new = scorer.log_posterior(draw.candidate);
    r.outcome.log_alpha = flip_log_acceptance(forward, draw.index, r.reverse, lp_cur, lp_new);
    if (std::isnan(r.outcome.log_alpha)) throw NumericalError("acceptance ratio is NaN");
  } catch (const std::exception& e) {
    log_warning(std::string("flip move rejected: ") + e.what());
    r.outcome.failed = true;
    r.outcome.accepted = false;
    r.outcome.log_alpha = -std::numeric_limits<double>::infinity();
    return r;
  }
  r.outcome.accepted = log_u < r.outcome.log_alpha;
  return r;
}

}  // namespace sdmh

#include "sdmh/linsampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "sdmh/errors.hpp"
#include "sdmh/log.hpp"
#include "sdmh/proposal.hpp"
#include "sdmh/rng.hpp"

namespace sdmh {

void SamplerConfig::validate(std::size_t predictors) const {
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (burn_in >= iterations) throw ConfigError("burn-in must be smaller than iterations");
  if (!(lambda_move > 0.0)) throw ConfigError("lambda_move must be positive");
  adapt.validate(iterations);
  if (initial && initial->size() != predictors) {
    throw ConfigError("initial configuration has the wrong length");
  }
}

ChainTrace run_chain(const ModelScorer& scorer, const SamplerConfig& config,
                     const DependencyGraph* graph) {
  const std::size_t p = scorer.dimension();
  config.validate(p);
  if (config.swap_enabled && (graph == nullptr || graph->size() != p)) {
    throw ConfigError("swap moves need a dependency graph over all predictors");
  }

  Rng rng(config.seed);
  AdaptState adapt = AdaptState::initial(config.adapt);
  InclusionVector xi = config.initial ? *config.initial : InclusionVector(p);
  double log_post = scorer.log_posterior(xi);

  const std::size_t t_max = config.iterations;
  ChainTrace trace;
  trace.configs = ConfigTrace(p);
  trace.configs.reserve(t_max + 1);
  trace.configs.push(xi);
  trace.initial_log_post = log_post;
  trace.flip_accepted.reserve(t_max);
  trace.swap.reserve(t_max);
  trace.d_h.reserve(t_max);
  trace.lambda.reserve(t_max);
  trace.log_post.reserve(t_max);
  trace.model_size.reserve(t_max);

  SimilarityProposal forward = build_flip_proposal(scorer, xi, adapt.lambda);

  for (std::size_t t = 1; t <= t_max; ++t) {
    const InclusionVector before = xi;
    const double lambda = adapt.lambda;
    if (forward.lambda != lambda || !(forward.neighborhood.origin == xi)) {
      if (forward.neighborhood.origin == xi) {
        forward = make_proposal(std::move(forward.neighborhood),
                                std::move(forward.dissimilarities), lambda);
      } else {
        forward = build_flip_proposal(scorer, xi, lambda);
      }
    }

    const ProposalDraw draw = sample_proposal(forward, rng);
    FlipResult flip = mh_accept_flip(scorer, forward, draw, rng);
    if (flip.outcome.failed) ++trace.flip_failures;
    if (flip.outcome.accepted) {
      xi = draw.candidate;
      log_post = scorer.log_posterior(xi);
      forward = std::move(flip.reverse);
    }
    record_step(adapt, config.adapt, t, flip.outcome.accepted);

    SwapStatus swap = SwapStatus::NotAttempted;
    if (config.swap_enabled) {
      try {
        const SwapDraw sd = sample_swap(scorer, xi, *graph, config.lambda_move, rng);
        if (sd.possible) {
          const MoveOutcome mo = mh_accept_swap(scorer, xi, sd, *graph, config.lambda_move, rng);
          if (mo.failed) ++trace.swap_failures;
          swap = mo.accepted ? SwapStatus::Accepted : SwapStatus::Rejected;
          if (mo.accepted) {
            xi = sd.proposed;
            log_post = scorer.log_posterior(xi);
          }
        }
      } catch (const std::exception& e) {
        log_warning(std::string("swap move rejected: ") + e.what());
        ++trace.swap_failures;
        swap = SwapStatus::Rejected;
      }
    }

    trace.configs.push(xi);
    trace.flip_accepted.push_back(flip.outcome.accepted ? 1 : 0);
    trace.swap.push_back(swap);
    trace.d_h.push_back(static_cast<std::uint8_t>(hamming(before, xi)));
    trace.lambda.push_back(lambda);
    trace.log_post.push_back(log_post);
    trace.model_size.push_back(static_cast<std::uint32_t>(xi.popcount()));
  }
  return trace;
}

ChainTrace run_chain(const LinearProblem& problem, const SamplerConfig& config,
                     const DependencyGraph* graph) {
  const LinearScorer scorer(problem, config.kind);
  return run_chain(scorer, config, graph);
}

double flip_acceptance_rate(const ChainTrace& trace, std::size_t from, std::size_t to) {
  if (to > trace.iterations() || from >= to) throw DomainError("empty acceptance range");
  std::size_t acc = 0;
  for (std::size_t t = from; t < to; ++t) acc += trace.flip_accepted[t];
  return static_cast<double>(acc) / static_cast<double>(to - from);
}

double swap_acceptance_rate(const ChainTrace& trace, std::size_t from, std::size_t to) {
  if (to > trace.iterations() || from > to) throw DomainError("invalid acceptance range");
  std::size_t acc = 0;
  std::size_t tried = 0;
  for (std::size_t t = from; t < to; ++t) {
    if (trace.swap[t] == SwapStatus::NotAttempted) continue;
    ++tried;
    if (trace.swap[t] == SwapStatus::Accepted) ++acc;
  }
  return tried == 0 ? 0.0 : static_cast<double>(acc) / static_cast<double>(tried);
}

std::vector<SweepPoint> lambda_sweep(const LinearProblem& problem,
                                     const std::vector<double>& lambdas, std::size_t iterations,
                                     std::size_t burn_in, DissimilarityKind kind,
                                     std::uint64_t seed) {
  std::vector<SweepPoint> out;
  out.reserve(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw ConfigError("sweep lambda values must be positive");
    SamplerConfig cfg;
    cfg.iterations = iterations;
    cfg.burn_in = burn_in;
    cfg.kind = kind;
    cfg.adapt.enabled = false;
    cfg.adapt.lambda_min = std::min(cfg.adapt.lambda_min, lambdas[i]);
    cfg.adapt.lambda_max = std::max(cfg.adapt.lambda_max, lambdas[i]);
    cfg.adapt.initial_lambda = lambdas[i];
    cfg.swap_enabled = false;
    cfg.seed = derive_seed(seed, i);
    const ChainTrace trace = run_chain(problem, cfg);
    out.push_back({lambdas[i], flip_acceptance_rate(trace, burn_in, iterations)});
  }
  return out;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  v[n - 1] = b;
  return v;
}

}  // namespace sdmh

#pragma once

// Variable-selection chain for the conjugate linear model. One iteration is
// an adaptive similarity-driven flip followed, when enabled, by one
// graph-guided swap.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "sdmh/adapt.hpp"
#include "sdmh/conjlinear.hpp"
#include "sdmh/inclusion.hpp"
#include "sdmh/localmove.hpp"
#include "sdmh/scorer.hpp"

namespace sdmh {

struct SamplerConfig {
  std::size_t iterations = 20000;
  std::size_t burn_in = 10000;
  DissimilarityKind kind = DissimilarityKind::F;
  /// With adapt.enabled == false, adapt.initial_lambda is used throughout.
  AdaptConfig adapt{};
  bool swap_enabled = true;
  double lambda_move = 1.25;
  std::optional<InclusionVector> initial;
  std::uint64_t seed = 1;

  void validate(std::size_t predictors) const;
};

enum class SwapStatus : std::uint8_t { NotAttempted = 0, Rejected = 1, Accepted = 2 };

/// Per-iteration record. Entry t of the per-iteration vectors describes
/// iteration t + 1; configs holds the initial state followed by the state
/// after every iteration.
struct ChainTrace {
  ConfigTrace configs;
  double initial_log_post = 0.0;
  std::vector<std::uint8_t> flip_accepted;
  std::vector<SwapStatus> swap;
  std::vector<std::uint8_t> d_h;
  std::vector<double> lambda;
  std::vector<double> log_post;
  std::vector<std::uint32_t> model_size;
  std::size_t flip_failures = 0;
  std::size_t swap_failures = 0;

  std::size_t iterations() const { return flip_accepted.size(); }
};

/// Runs the chain. `graph` is required when swaps are enabled.
ChainTrace run_chain(const ModelScorer& scorer, const SamplerConfig& config,
                     const DependencyGraph* graph = nullptr);
ChainTrace run_chain(const LinearProblem& problem, const SamplerConfig& config,
                     const DependencyGraph* graph = nullptr);

/// Fraction of accepted flips over iterations [from, to) (0-based).
double flip_acceptance_rate(const ChainTrace& trace, std::size_t from, std::size_t to);
/// Fraction of accepted swaps among attempted swaps over [from, to); 0 if none.
double swap_acceptance_rate(const ChainTrace& trace, std::size_t from, std::size_t to);

struct SweepPoint {
  double lambda = 0.0;
  double acceptance = 0.0;
};

/// One non-adaptive chain per lambda (no swaps); post-burn-in flip
/// acceptance. Chain i is seeded with derive_seed(seed, i).
std::vector<SweepPoint> lambda_sweep(const LinearProblem& problem,
                                     const std::vector<double>& lambdas, std::size_t iterations,
                                     std::size_t burn_in, DissimilarityKind kind,
                                     std::uint64_t seed);

/// n equally spaced values from a to b inclusive.
std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace sdmh

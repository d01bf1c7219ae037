#pragma once

// Post-hoc chain analysis. Everything here is a pure function of stored
// traces, so recomputing from files reproduces run-time summaries exactly.

#include <array>
#include <cstddef>
#include <vector>

#include "sdmh/inclusion.hpp"
#include "sdmh/linalg.hpp"
#include "sdmh/localmove.hpp"
#include "sdmh/scorer.hpp"

namespace sdmh {

/// Per-bit inclusion frequency over records [from, length).
std::vector<double> pip(const ConfigTrace& trace, std::size_t from);

struct FDRSelection {
  std::vector<std::size_t> selected;  // ascending index order
  double threshold = 1.0;             // smallest selected PIP; 1 when nothing is selected
};

/// Largest PIP-ranked prefix whose mean (1 - PIP) stays at or below alpha.
/// Ties in PIP are ranked by index.
FDRSelection bayes_fdr_threshold(const std::vector<double>& pips, double alpha);

/// Indices with PIP strictly above the cutoff.
std::vector<std::size_t> cutoff_selection(const std::vector<double>& pips, double cutoff = 0.5);

/// Counts of jump distances 0, 1, 2 and 3 or more.
using HammingHistogram = std::array<std::size_t, 4>;
HammingHistogram hamming_histogram(const std::vector<std::uint8_t>& distances);
/// Recount from consecutive stored configurations.
HammingHistogram hamming_histogram(const ConfigTrace& trace);

struct ACF {
  std::vector<double> values;  // lags 0..max_lag
  bool constant = false;       // series has zero variance; values are NaN
};

ACF autocorrelation(const std::vector<double>& series, std::size_t max_lag);

/// Popcount of every record.
std::vector<double> model_sizes(const ConfigTrace& trace);

/// Exact posterior over all 2^P configurations (bit p of the index is
/// predictor p). P <= 20.
std::vector<double> exact_posterior(const ModelScorer& scorer);

/// Visit frequencies of records [from, length) over all 2^bits states.
std::vector<double> empirical_distribution(const ConfigTrace& trace, std::size_t from);

double tv_distance(const std::vector<double>& a, const std::vector<double>& b);

InclusionVector state_from_index(std::size_t predictors, std::size_t index);
std::size_t state_index(const InclusionVector& xi);

/// Exact one-step transition matrices on all 2^P states, P <= 12.
MatrixXd flip_kernel_matrix(const ModelScorer& scorer, double lambda);
MatrixXd swap_kernel_matrix(const ModelScorer& scorer, const DependencyGraph& graph,
                            double lambda_move);

struct BalanceReport {
  double max_flow_gap = 0.0;     // max |pi(a) T(a,b) - pi(b) T(b,a)|
  double stationarity_gap = 0.0; // || pi T - pi ||_inf
};

BalanceReport detailed_balance(const MatrixXd& kernel, const std::vector<double>& pi);

}  // namespace sdmh

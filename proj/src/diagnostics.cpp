#include "sdmh/diagnostics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "sdmh/errors.hpp"
#include "sdmh/proposal.hpp"
#include "sdmh/special.hpp"

namespace sdmh {

using Index = Eigen::Index;

std::vector<double> pip(const ConfigTrace& trace, std::size_t from) {
  if (from >= trace.length()) throw DomainError("burn-in must be shorter than the trace");
  std::vector<std::size_t> counts(trace.bits(), 0);
  for (std::size_t t = from; t < trace.length(); ++t) {
    for (std::size_t b = 0; b < trace.bits(); ++b) counts[b] += trace.test(t, b) ? 1 : 0;
  }
  const auto m = static_cast<double>(trace.length() - from);
  std::vector<double> out(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) out[b] = static_cast<double>(counts[b]) / m;
  return out;
}

FDRSelection bayes_fdr_threshold(const std::vector<double>& pips, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("FDR level must lie in (0, 1)");
  std::vector<std::size_t> order(pips.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pips[a] > pips[b]; });
  std::size_t best = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    sum += 1.0 - pips[order[k]];
    if (sum / static_cast<double>(k + 1) <= alpha) best = k + 1;
  }
  FDRSelection s;
  s.selected.assign(order.begin(), order.begin() + static_cast<long>(best));
  if (best > 0) s.threshold = pips[order[best - 1]];
  std::sort(s.selected.begin(), s.selected.end());
  return s;
}

std::vector<std::size_t> cutoff_selection(const std::vector<double>& pips, double cutoff) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pips.size(); ++i) {
    if (pips[i] > cutoff) out.push_back(i);
  }
  return out;
}

HammingHistogram hamming_histogram(const std::vector<std::uint8_t>& distances) {
  HammingHistogram h{};
  for (std::uint8_t d : distances) ++h[std::min<std::size_t>(d, 3)];
  return h;
}

HammingHistogram hamming_histogram(const ConfigTrace& trace) {
  HammingHistogram h{};
  for (std::size_t t = 1; t < trace.length(); ++t) {
    ++h[std::min<std::size_t>(hamming(trace.at(t - 1), trace.at(t)), 3)];
  }
  return h;
}

ACF autocorrelation(const std::vector<double>& series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n <= max_lag) throw DomainError("series must be longer than the maximum lag");
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(series.size());
  for (std::size_t i = 0; i < n; ++i) c[i] = series[i] - mean;
  double c0 = 0.0;
  for (double v : c) c0 += v * v;
  ACF acf;
  acf.values.resize(max_lag + 1);
  if (!(c0 > 0.0)) {
    acf.constant = true;
    std::fill(acf.values.begin(), acf.values.end(), std::numeric_limits<double>::quiet_NaN());
    return acf;
  }
  acf.values[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += c[i] * c[i + k];
    acf.values[k] = s / c0;
  }
  return acf;
}

std::vector<double> model_sizes(const ConfigTrace& trace) {
  std::vector<double> out(trace.length());
  for (std::size_t t = 0; t < trace.length(); ++t) out[t] = static_cast<double>(trace.popcount(t));
  return out;
}

InclusionVector state_from_index(std::size_t predictors, std::size_t index) {
  InclusionVector xi(predictors);
  for (std::size_t p = 0; p < predictors; ++p) {
    if ((index >> p) & 1U) xi.set(p, true);
  }
  return xi;
}

std::size_t state_index(const InclusionVector& xi) {
  if (xi.size() > 63) throw DomainError("state index needs at most 63 predictors");
  return xi.size() == 0 ? 0 : static_cast<std::size_t>(xi.words()[0]);
}

std::vector<double> exact_posterior(const ModelScorer& scorer) {
  const std::size_t p = scorer.dimension();
  if (p > 20) throw DomainError("exact enumeration is limited to 20 predictors");
  const std::size_t m = std::size_t{1} << p;
  std::vector<double> lp(m);
  for (std::size_t s = 0; s < m; ++s) lp[s] = scorer.log_posterior(state_from_index(p, s));
  const double z = log_sum_exp(lp);
  for (double& v : lp) v = std::exp(v - z);
  return lp;
}

std::vector<double> empirical_distribution(const ConfigTrace& trace, std::size_t from) {
  if (trace.bits() > 20) throw DomainError("empirical distribution is limited to 20 bits");
  if (from >= trace.length()) throw DomainError("burn-in must be shorter than the trace");
  std::vector<double> out(std::size_t{1} << trace.bits(), 0.0);
  for (std::size_t t = from; t < trace.length(); ++t) out[state_index(trace.at(t))] += 1.0;
  const auto m = static_cast<double>(trace.length() - from);
  for (double& v : out) v /= m;
  return out;
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DomainError("distributions have different supports");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

MatrixXd flip_kernel_matrix(const ModelScorer& scorer, double lambda) {
  const std::size_t p = scorer.dimension();
  if (p > 12) throw DomainError("exact kernels are limited to 12 predictors");
  const std::size_t m = std::size_t{1} << p;
  std::vector<SimilarityProposal> props;
  std::vector<double> lp(m);
  props.reserve(m);
  for (std::size_t s = 0; s < m; ++s) {
    const InclusionVector xi = state_from_index(p, s);
    props.push_back(build_flip_proposal(scorer, xi, lambda));
    lp[s] = scorer.log_posterior(xi);
  }
  MatrixXd t = MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(m));
  for (std::size_t s = 0; s < m; ++s) {
    double stay = 1.0;
    for (std::size_t f = 0; f < p; ++f) {
      const std::size_t s2 = s ^ (std::size_t{1} << f);
      const double la = flip_log_acceptance(props[s], f, props[s2], lp[s], lp[s2]);
      const double move = props[s].probabilities[f] * std::exp(std::min(0.0, la));
      t(static_cast<Index>(s), static_cast<Index>(s2)) = move;
      stay -= move;
    }
    t(static_cast<Index>(s), static_cast<Index>(s)) = stay;
  }
  return t;
}

MatrixXd swap_kernel_matrix(const ModelScorer& scorer, const DependencyGraph& graph,
                            double lambda_move) {
  const std::size_t p = scorer.dimension();
  if (p > 12) throw DomainError("exact kernels are limited to 12 predictors");
  if (graph.size() != p) throw DomainError("graph size does not match the model dimension");
  const std::size_t m = std::size_t{1} << p;
  std::vector<double> lp(m);
  for (std::size_t s = 0; s < m; ++s) lp[s] = scorer.log_posterior(state_from_index(p, s));
  MatrixXd t = MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(m));
  for (std::size_t s = 0; s < m; ++s) {
    const InclusionVector xi = state_from_index(p, s);
    const SwapProposal q = build_swap_proposal(scorer, xi, graph, lambda_move);
    double stay = 1.0;
    for (std::size_t c = 0; c < q.candidates.size(); ++c) {
      const InclusionVector to = apply_swap(xi, q.candidates[c]);
      const std::size_t s2 = state_index(to);
      const SwapCandidate back{q.candidates[c].activate, q.candidates[c].deactivate};
      const double lrev = swap_log_probability(scorer, to, graph, back, lambda_move);
      const double la = lp[s2] - lp[s] + lrev - q.log_probabilities[c];
      const double move = std::exp(q.log_probabilities[c] + std::min(0.0, la));
      t(static_cast<Index>(s), static_cast<Index>(s2)) += move;
      stay -= move;
    }
    t(static_cast<Index>(s), static_cast<Index>(s)) += stay;
  }
  return t;
}

BalanceReport detailed_balance(const MatrixXd& kernel, const std::vector<double>& pi) {
  const Index m = kernel.rows();
  if (kernel.cols() != m || static_cast<Index>(pi.size()) != m) {
    throw DomainError("kernel and distribution sizes differ");
  }
  BalanceReport r;
  for (Index a = 0; a < m; ++a) {
    for (Index b = a + 1; b < m; ++b) {
      const double gap = std::abs(pi[static_cast<std::size_t>(a)] * kernel(a, b) -
                                  pi[static_cast<std::size_t>(b)] * kernel(b, a));
      r.max_flow_gap = std::max(r.max_flow_gap, gap);
    }
  }
  for (Index b = 0; b < m; ++b) {
    double s = 0.0;
    for (Index a = 0; a < m; ++a) s += pi[static_cast<std::size_t>(a)] * kernel(a, b);
    r.stationarity_gap = std::max(r.stationarity_gap, std::abs(s - pi[static_cast<std::size_t>(b)]));
  }
  return r;
}

}  // namespace sdmh

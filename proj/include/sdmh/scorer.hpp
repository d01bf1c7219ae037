#pragma once

#include <cstddef>

#include "sdmh/inclusion.hpp"

namespace sdmh {

/// What a discrete-space sampler needs to know about a model space: the
/// unnormalised log posterior of a configuration and its dissimilarity to
/// the data. Dissimilarities are nonpositive; values far below zero mark
/// configurations whose implied summaries resemble the data.
class ModelScorer {
 public:
  virtual ~ModelScorer() = default;

  virtual std::size_t dimension() const = 0;
  virtual double log_posterior(const InclusionVector& xi) const = 0;
  virtual double dissimilarity(const InclusionVector& xi) const = 0;
};

}  // namespace sdmh

#pragma once

#include <cstdint>
#include <vector>

#include "fact/tensor.hpp"

namespace fact {

// One minibatch of pooled events with within-batch risk sets. The risk set
// of item i is every item j with duration_j >= duration_i; ties are
// mutually inclusive.
struct RiskSetBatch {
  ad::TensorPtr risks;  // shape [B], log-risk scores
  std::vector<double> durations;
  std::vector<uint8_t> events;
};

// Negative log partial likelihood over the batch, computed with a
// cumulative log-sum-exp over the descending-duration order. Differentiable
// w.r.t. the risk tensor. A batch with no uncensored events yields 0 with
// zero gradient.
ad::TensorPtr cox_nll(const RiskSetBatch& batch);

// O(B^2) double-loop oracle used by tests; deliberately independent of the
// sorted implementation above.
double cox_nll_naive(const std::vector<double>& risks,
                     const std::vector<double>& durations,
                     const std::vector<uint8_t>& events);

}  // namespace fact

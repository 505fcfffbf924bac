#pragma once

#include <cstddef>

#include "distrittrl/matrix.hpp"
#include "distrittrl/rollout.hpp"

namespace distrittrl {

struct ConfidenceParams {
  std::size_t tail_window = 2048;  // trailing token positions used
  std::size_t top_k = 5;           // log-probs per position
  // Flips the sign of batch_confidence output so that downstream code, which
  // always treats larger values as more confident, sees the opposite ordering.
  bool negate_confidence = false;
};

void validate(const ConfidenceParams& params);

// Mean negated log-probability over the top-k entries of the last
// min(tail_window, N) positions. A position storing fewer than k entries
// contributes only those; the normalizer counts terms actually summed.
double trajectory_confidence(const RolloutRecord& record, const ConfidenceParams& params);

// B x G matrix in StepBatch order, sign-flipped when negate_confidence is set.
Matrix batch_confidence(const StepBatch& batch, const ConfidenceParams& params);

// Same orientation as one row of batch_confidence.
std::vector<double> group_confidence(const QueryGroup& group, const ConfidenceParams& params);

}  // namespace distrittrl

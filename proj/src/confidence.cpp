#include "distrittrl/confidence.hpp"

#include <algorithm>

#include "distrittrl/error.hpp"

namespace distrittrl {

void validate(const ConfidenceParams& params) {
  if (params.tail_window < 1) fail(ErrorCategory::kArgument, "tail_window must be >= 1");
  if (params.top_k < 1) fail(ErrorCategory::kArgument, "top_k must be >= 1");
}

double trajectory_confidence(const RolloutRecord& record, const ConfidenceParams& params) {
  validate(params);
  const auto& positions = record.token_logprobs;
  if (positions.empty()) {
    fail(ErrorCategory::kValidation, "empty token_logprobs for (" + record.query_id + ", sample " +
                                         std::to_string(record.sample_index) + ")");
  }
  const std::size_t used = std::min(params.tail_window, positions.size());
  double sum = 0.0;
  std::size_t terms = 0;
  for (std::size_t p = positions.size() - used; p < positions.size(); ++p) {
    const auto& top = positions[p];
    if (top.empty()) {
      fail(ErrorCategory::kValidation, "position " + std::to_string(p) + " of (" + record.query_id + ", sample " +
                                           std::to_string(record.sample_index) + ") has no log-probabilities");
    }
    const std::size_t k = std::min(params.top_k, top.size());
    for (std::size_t j = 0; j < k; ++j) sum += top[j];
    terms += k;
  }
  // Normalize -0.0 to 0.0.
  return sum == 0.0 ? 0.0 : -sum / static_cast<double>(terms);
}

std::vector<double> group_confidence(const QueryGroup& group, const ConfidenceParams& params) {
  std::vector<double> out;
  out.reserve(group.size());
  for (const auto& rec : group.rollouts) {
    const double c = trajectory_confidence(rec, params);
    out.push_back(params.negate_confidence ? -c : c);
  }
  return out;
}

Matrix batch_confidence(const StepBatch& batch, const ConfidenceParams& params) {
  const std::size_t rows = batch.groups.size();
  const std::size_t cols = batch.group_size();
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& group = batch.groups[i];
    if (group.size() != cols) {
      fail(ErrorCategory::kStructural, "step " + std::to_string(batch.step) + ": unequal group sizes");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      try {
        const double c = trajectory_confidence(group.rollouts[j], params);
        out(i, j) = params.negate_confidence ? -c : c;
      } catch (const Error& e) {
        fail(e.category(), "query " + group.query_id + ", sample_index " +
                               std::to_string(group.rollouts[j].sample_index) + ": " + e.what());
      }
    }
  }
  return out;
}

}  // namespace distrittrl

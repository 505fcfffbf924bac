#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <vector>

#include "distrittrl/gmm.hpp"
#include "distrittrl/matrix.hpp"

namespace distrittrl {

struct StoreConfig {
  EmConfig em;
  // Oldest steps are evicted once more than this many are retained.
  std::optional<std::size_t> max_retained_steps;
};

struct StepEntry {
  std::int64_t step = 0;
  Matrix confidences;
  LabeledGmm2 fit;
};

struct AggregatedConfidences {
  std::int64_t step = 0;
  std::vector<double> values;
  std::vector<std::int64_t> provenance;  // originating step per value
};

// Location offset that moves a step-s distribution onto the step-k one:
// difference of the pos/neg midpoints.
double shift_offset(const LabeledGmm2& fit_s, const LabeledGmm2& fit_k);

Matrix correct_confidences(const Matrix& conf_s, double delta);

// Global per-rollout confidence history. Writes are single-threaded; const
// access is safe to share.
class ConfidenceStore {
 public:
  explicit ConfidenceStore(StoreConfig config = {});

  // Stores conf for a new step (strictly greater than any stored step) and
  // caches its labeled fit.
  void record_step(std::int64_t step, Matrix conf);

  // Step k raw, every retained earlier step shift-corrected onto step k.
  AggregatedConfidences aggregate(std::int64_t k) const;

  bool contains(std::int64_t step) const;
  const StepEntry& entry(std::int64_t step) const;
  const std::deque<StepEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t fit_count() const noexcept { return fit_count_; }
  const StoreConfig& config() const noexcept { return config_; }

  // Structured-text snapshot, see docs/store_snapshot.md.
  void save(std::ostream& sink) const;
  static ConfidenceStore load(std::istream& source);

 private:
  StoreConfig config_;
  std::deque<StepEntry> entries_;
  std::size_t fit_count_ = 0;
};

}  // namespace distrittrl

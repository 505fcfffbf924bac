#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "distrittrl/advantage.hpp"
#include "distrittrl/confidence.hpp"
#include "distrittrl/distribution_store.hpp"
#include "distrittrl/pseudo_label.hpp"
#include "distrittrl/synthetic.hpp"

namespace distrittrl {

enum class LabelMode { kGroundTruth, kTtrlMajority, kDistriTtrl };

std::string_view to_string(LabelMode mode);
LabelMode parse_label_mode(std::string_view name);

struct ExperimentConfig {
  LabelMode label_mode = LabelMode::kDistriTtrl;
  bool penalty_on = true;
  int steps = 100;
  std::size_t batch_size = 8;     // B queries per step
  std::size_t group_size = 32;    // G rollouts per query used for the update
  std::size_t vote_samples = 64;  // rollouts drawn per query for labeling, >= G
  double lr = 0.5;
  double tau = 0.1;
  GrpoConfig grpo;
  TaskSpec task;
  ConfidenceParams confidence;
  PseudoLabelOptions pseudo_label;
  std::optional<std::size_t> store_cap;
  double divergence_limit = 50.0;
  std::uint64_t seed = 0;
};

void validate(const ExperimentConfig& config);

// JSON config; see docs/experiment_config.md for keys. Unknown keys are an error.
ExperimentConfig parse_experiment_config(std::istream& source);
ExperimentConfig load_experiment_config(const std::string& path);

// Rollouts of one update batch, in the form the surrogate needs.
struct PolicyBatch {
  std::vector<std::size_t> queries;                // task query index per row
  std::vector<std::vector<std::size_t>> actions;   // B x G candidate indices
  Matrix advantages;                               // B x G, already diversity weighted
  std::vector<std::vector<double>> old_probs;      // sampling policy, per row
  std::vector<std::vector<double>> ref_probs;      // KL reference policy, per row
};

// Clipped GRPO surrogate for the categorical policy: each rollout is one
// token with ratio p_theta(a) / p_old(a) and KL against ref_probs.
double categorical_surrogate(const CategoricalPolicy& policy, const PolicyBatch& batch, const GrpoConfig& config);

// Exact gradient of categorical_surrogate with respect to the logits of each
// batch row (row order matches batch.queries).
std::vector<std::vector<double>> analytic_grpo_gradient(const CategoricalPolicy& policy, const PolicyBatch& batch,
                                                        const GrpoConfig& config);

struct TraceRow {
  std::int64_t step = 0;
  double majority_ratio = 0.0;
  double accuracy = 0.0;
  double diversity = 0.0;
  double objective = 0.0;
  double pseudo_label_accuracy = 0.0;
  double mean_weight = 1.0;
};

struct TrainingTrace {
  std::vector<TraceRow> rows;
  bool diverged = false;
};

void write_trace_csv(std::ostream& sink, const TrainingTrace& trace);

struct StepReport {
  TraceRow row;
  std::vector<std::size_t> queries;
  std::vector<std::string> labels;
  DiversityWeights weights;
  Matrix rewards;
  Matrix advantages;
  Matrix weighted;
};

class Trainer {
 public:
  explicit Trainer(ExperimentConfig config);

  // One iteration of sample, label, weight, update. Steps count from 1.
  StepReport step();
  TrainingTrace run();

  const CategoricalPolicy& policy() const noexcept { return policy_; }
  const SyntheticTask& task() const noexcept { return task_; }
  const ConfidenceStore& store() const noexcept { return store_; }
  bool diverged() const noexcept { return diverged_; }
  std::int64_t steps_done() const noexcept { return step_; }

 private:
  ExperimentConfig config_;
  SyntheticTask task_;
  CategoricalPolicy policy_;
  CategoricalPolicy reference_;
  ConfidenceStore store_;
  std::int64_t step_ = 0;
  bool diverged_ = false;
};

TrainingTrace run_experiment(const ExperimentConfig& config);

// Area under the majority-ratio curve, one unit per step.
double majority_ratio_area(const TrainingTrace& trace);
// Mean majority ratio over the last `window` steps.
double final_majority_ratio(const TrainingTrace& trace, std::size_t window = 10);
// First step at which the majority ratio reaches `fraction` of its final value.
std::int64_t plateau_step(const TrainingTrace& trace, double fraction = 0.95, std::size_t window = 10);

}  // namespace distrittrl

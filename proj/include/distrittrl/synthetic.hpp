#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "distrittrl/confidence.hpp"
#include "distrittrl/random.hpp"
#include "distrittrl/rollout.hpp"

namespace distrittrl {

// Confidence offset added at training step s: initial_offset * max(0, 1 - s / horizon).
struct DriftSchedule {
  double initial_offset = -1.0;
  double horizon = 100.0;

  double at(std::int64_t step) const;
};

struct SyntheticConfidenceModel {
  double separation = 2.0;  // correct-answer rollouts sit this far toward "more confident"
  double noise_sd = 0.5;
  DriftSchedule drift;
};

struct SyntheticQuery {
  std::string query_id;
  std::vector<std::string> candidates;
  std::size_t truth = 0;
  std::vector<double> base_quality;  // per candidate
};

struct SyntheticTask {
  std::vector<SyntheticQuery> queries;
  SyntheticConfidenceModel confidence;
};

void validate(const SyntheticTask& task);

// Softmax policy over each query's candidates.
struct CategoricalPolicy {
  std::vector<std::vector<double>> logits;  // one vector per query, length M
  double temperature = 1.0;

  std::vector<double> probabilities(std::size_t query) const;
};

// Shape of a generated task and of the policy it starts from.
struct TaskSpec {
  std::size_t num_queries = 8;
  std::size_t num_candidates = 4;
  // Initial probability of the true answer, uniform per query in [min, max].
  double truth_prob_min = 0.15;
  double truth_prob_max = 0.45;
  double base_quality = 3.0;
  double base_quality_jitter = 0.25;  // uniform +/- per candidate
  double temperature = 1.0;
  SyntheticConfidenceModel confidence;
  std::uint64_t seed = 0;
};

struct SyntheticSetup {
  SyntheticTask task;
  CategoricalPolicy policy;
};

SyntheticSetup make_synthetic(const TaskSpec& spec);

// A single top-k position whose trajectory confidence equals `confidence`
// (clamped at 0) for that top_k.
std::vector<TokenLogprobs> synthesize_token_logprobs(double confidence, std::size_t top_k);

// Target confidence of a rollout that produced `candidate` at `step`, before
// noise. Orientation follows negate_confidence so that, after batch_confidence,
// correct rollouts always read `separation` higher.
double mean_confidence(const SyntheticTask& task, std::size_t query, std::size_t candidate, std::int64_t step,
                       bool negate_confidence);

struct SampledGroup {
  QueryGroup group;
  std::vector<std::size_t> actions;  // candidate index per rollout
};

// G i.i.d. draws from the policy for one query, with synthesized log-probs.
SampledGroup sample_rollouts(const CategoricalPolicy& policy, const SyntheticTask& task, std::size_t query,
                             std::size_t group_size, std::int64_t step, Rng& rng, const ConfidenceParams& params);

struct CorpusSpec {
  TaskSpec task;
  std::size_t group_size = 256;
  std::size_t num_steps = 1;
  ConfidenceParams confidence;
  std::uint64_t seed = 0;
};

// Fixed-policy evaluation corpus with `correct` flags, steps 0..num_steps-1.
std::vector<StepBatch> generate_corpus(const CorpusSpec& spec);

}  // namespace distrittrl

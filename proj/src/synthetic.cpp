#include "distrittrl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "distrittrl/error.hpp"

namespace distrittrl {

double DriftSchedule::at(std::int64_t step) const {
  if (horizon <= 0.0) return 0.0;
  return initial_offset * std::max(0.0, 1.0 - static_cast<double>(step) / horizon);
}

void validate(const SyntheticTask& task) {
  if (!(task.confidence.noise_sd > 0.0)) fail(ErrorCategory::kArgument, "noise_sd must be positive");
  for (const auto& q : task.queries) {
    if (q.candidates.size() < 2) fail(ErrorCategory::kArgument, "query " + q.query_id + " needs >= 2 candidates");
    if (q.truth >= q.candidates.size()) fail(ErrorCategory::kArgument, "query " + q.query_id + ": truth out of range");
    if (q.base_quality.size() != q.candidates.size()) {
      fail(ErrorCategory::kArgument, "query " + q.query_id + ": base_quality length mismatch");
    }
  }
}

std::vector<double> CategoricalPolicy::probabilities(std::size_t query) const {
  const auto& z = logits.at(query);
  const double hi = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t m = 0; m < z.size(); ++m) {
    p[m] = std::exp((z[m] - hi) / temperature);
    sum += p[m];
  }
  for (double& v : p) v /= sum;
  return p;
}

SyntheticSetup make_synthetic(const TaskSpec& spec) {
  if (spec.num_queries < 1) fail(ErrorCategory::kArgument, "num_queries must be >= 1");
  if (spec.num_candidates < 2) fail(ErrorCategory::kArgument, "num_candidates must be >= 2");
  if (!(spec.truth_prob_min > 0.0 && spec.truth_prob_min <= spec.truth_prob_max && spec.truth_prob_max <= 1.0)) {
    fail(ErrorCategory::kArgument, "truth probability range must satisfy 0 < min <= max <= 1");
  }
  if (!(spec.temperature > 0.0)) fail(ErrorCategory::kArgument, "temperature must be positive");

  Rng rng(derive_seed(spec.seed, {0x7a5c}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticSetup out;
  out.task.confidence = spec.confidence;
  out.policy.temperature = spec.temperature;
  const std::size_t m_count = spec.num_candidates;
  for (std::size_t q = 0; q < spec.num_queries; ++q) {
    SyntheticQuery query;
    char id[32];
    std::snprintf(id, sizeof id, "q%04zu", q);
    query.query_id = id;
    for (std::size_t m = 0; m < m_count; ++m) query.candidates.push_back("a" + std::to_string(m));
    query.truth = std::uniform_int_distribution<std::size_t>(0, m_count - 1)(rng);
    for (std::size_t m = 0; m < m_count; ++m) {
      query.base_quality.push_back(spec.base_quality + spec.base_quality_jitter * (2.0 * unit(rng) - 1.0));
    }

    // Truth mass p, the rest split by a flat Dirichlet over wrong candidates.
    const double p_truth = spec.truth_prob_min + (spec.truth_prob_max - spec.truth_prob_min) * unit(rng);
    std::vector<double> wrong(m_count - 1);
    double wrong_sum = 0.0;
    for (double& w : wrong) {
      w = -std::log(1.0 - unit(rng));
      wrong_sum += w;
    }
    std::vector<double> logits(m_count);
    std::size_t k = 0;
    for (std::size_t m = 0; m < m_count; ++m) {
      const double p = m == query.truth ? p_truth : (1.0 - p_truth) * wrong[k++] / wrong_sum;
      logits[m] = spec.temperature * std::log(std::max(p, 1e-12));
    }
    // Zero-mean logits; softmax is shift invariant.
    double mean = 0.0;
    for (double z : logits) mean += z;
    mean /= static_cast<double>(m_count);
    for (double& z : logits) z -= mean;

    out.task.queries.push_back(std::move(query));
    out.policy.logits.push_back(std::move(logits));
  }
  validate(out.task);
  return out;
}

std::vector<TokenLogprobs> synthesize_token_logprobs(double confidence, std::size_t top_k) {
  if (top_k < 1) fail(ErrorCategory::kArgument, "top_k must be >= 1");
  const double c = std::max(confidence, 0.0);
  // Entries -c * 2j / (k + 1), j = 1..k: descending, mean of negations = c.
  TokenLogprobs top(top_k);
  const double scale = 2.0 / static_cast<double>(top_k + 1);
  for (std::size_t j = 0; j < top_k; ++j) top[j] = -c * scale * static_cast<double>(j + 1);
  return {std::move(top)};
}

double mean_confidence(const SyntheticTask& task, std::size_t query, std::size_t candidate, std::int64_t step,
                       bool negate_confidence) {
  const auto& q = task.queries.at(query);
  const double sign = negate_confidence ? -1.0 : 1.0;
  double c = q.base_quality.at(candidate) + task.confidence.drift.at(step);
  if (candidate == q.truth) c += sign * task.confidence.separation;
  return c;
}

SampledGroup sample_rollouts(const CategoricalPolicy& policy, const SyntheticTask& task, std::size_t query,
                             std::size_t group_size, std::int64_t step, Rng& rng, const ConfidenceParams& params) {
  if (group_size < 1) fail(ErrorCategory::kArgument, "group_size must be >= 1");
  const auto probs = policy.probabilities(query);
  std::discrete_distribution<std::size_t> draw(probs.begin(), probs.end());
  std::normal_distribution<double> noise(0.0, task.confidence.noise_sd);
  const auto& q = task.queries.at(query);

  SampledGroup out;
  out.group.query_id = q.query_id;
  out.group.step = step;
  out.group.rollouts.reserve(group_size);
  out.actions.reserve(group_size);
  for (std::size_t j = 0; j < group_size; ++j) {
    const std::size_t a = draw(rng);
    const double c = mean_confidence(task, query, a, step, params.negate_confidence) + noise(rng);
    RolloutRecord rec;
    rec.query_id = q.query_id;
    rec.step = step;
    rec.sample_index = static_cast<std::int64_t>(j);
    rec.answer = q.candidates[a];
    rec.token_logprobs = synthesize_token_logprobs(c, params.top_k);
    rec.correct = a == q.truth;
    out.group.rollouts.push_back(std::move(rec));
    out.actions.push_back(a);
  }
  return out;
}

std::vector<StepBatch> generate_corpus(const CorpusSpec& spec) {
  validate(spec.confidence);
  TaskSpec task_spec = spec.task;
  task_spec.seed = derive_seed(spec.seed, {0x7a5c});
  const SyntheticSetup setup = make_synthetic(task_spec);
  std::vector<StepBatch> corpus;
  for (std::size_t s = 0; s < spec.num_steps; ++s) {
    StepBatch batch{static_cast<std::int64_t>(s), {}};
    for (std::size_t q = 0; q < setup.task.queries.size(); ++q) {
      Rng rng(derive_seed(spec.seed, {s, q}));
      batch.groups.push_back(sample_rollouts(setup.policy, setup.task, q, spec.group_size,
                                             static_cast<std::int64_t>(s), rng, spec.confidence)
                                 .group);
    }
    corpus.push_back(std::move(batch));
  }
  return corpus;
}

}  // namespace distrittrl

#include "distrittrl/sim_trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "distrittrl/error.hpp"
#include "distrittrl/parallel.hpp"
#include "distrittrl/random.hpp"
#include "distrittrl/report.hpp"

namespace distrittrl {

using nlohmann::json;

std::string_view to_string(LabelMode mode) {
  switch (mode) {
    case LabelMode::kGroundTruth: return "ground_truth";
    case LabelMode::kTtrlMajority: return "ttrl_majority";
    case LabelMode::kDistriTtrl: return "distrittrl";
  }
  return "unknown";
}

LabelMode parse_label_mode(std::string_view name) {
  for (LabelMode m : {LabelMode::kGroundTruth, LabelMode::kTtrlMajority, LabelMode::kDistriTtrl}) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCategory::kArgument, "unknown label_mode '" + std::string(name) + "'");
}

void validate(const ExperimentConfig& c) {
  if (c.steps < 0) fail(ErrorCategory::kArgument, "steps must be >= 0");
  if (c.batch_size < 1) fail(ErrorCategory::kArgument, "B must be >= 1");
  if (c.batch_size > c.task.num_queries) fail(ErrorCategory::kArgument, "B exceeds the number of task queries");
  if (c.group_size < 1) fail(ErrorCategory::kArgument, "G must be >= 1");
  if (c.vote_samples < c.group_size) fail(ErrorCategory::kArgument, "vote_samples must be >= G");
  if (!(c.tau > 0.0 && c.tau < 1.0)) fail(ErrorCategory::kArgument, "tau must lie in (0, 1)");
  if (!(c.grpo.epsilon > 0.0)) fail(ErrorCategory::kArgument, "epsilon must be positive");
  if (!(c.grpo.beta >= 0.0)) fail(ErrorCategory::kArgument, "beta must be >= 0");
  if (!std::isfinite(c.lr)) fail(ErrorCategory::kArgument, "lr must be finite");
  if (!(c.task.confidence.noise_sd > 0.0)) fail(ErrorCategory::kArgument, "noise_sd must be positive");
  validate(c.confidence);
}

ExperimentConfig parse_experiment_config(std::istream& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    fail(ErrorCategory::kParse, std::string("experiment config: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCategory::kParse, "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "steps") c.steps = v.get<int>();
      else if (key == "B") c.batch_size = v.get<std::size_t>();
      else if (key == "G") c.group_size = v.get<std::size_t>();
      else if (key == "vote_samples") c.vote_samples = v.get<std::size_t>();
      else if (key == "M") c.task.num_candidates = v.get<std::size_t>();
      else if (key == "num_queries") c.task.num_queries = v.get<std::size_t>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "tau") c.tau = v.get<double>();
      else if (key == "epsilon") c.grpo.epsilon = v.get<double>();
      else if (key == "beta") c.grpo.beta = v.get<double>();
      else if (key == "separation") c.task.confidence.separation = v.get<double>();
      else if (key == "noise_sd") c.task.confidence.noise_sd = v.get<double>();
      else if (key == "drift") c.task.confidence.drift.initial_offset = v.get<double>();
      else if (key == "drift_horizon") c.task.confidence.drift.horizon = v.get<double>();
      else if (key == "truth_prob_min") c.task.truth_prob_min = v.get<double>();
      else if (key == "truth_prob_max") c.task.truth_prob_max = v.get<double>();
      else if (key == "temperature") c.task.temperature = v.get<double>();
      else if (key == "top_k") c.confidence.top_k = v.get<std::size_t>();
      else if (key == "negate_confidence") c.confidence.negate_confidence = v.get<bool>();
      else if (key == "vote_method") {
        const auto m = v.get<std::string>();
        if (m == "majority") c.pseudo_label.method = VoteMethod::kMajority;
        else if (m == "weighted") c.pseudo_label.method = VoteMethod::kWeighted;
        else fail(ErrorCategory::kArgument, "vote_method must be 'majority' or 'weighted'");
      }
      else if (key == "store_cap") c.store_cap = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "label_mode") c.label_mode = parse_label_mode(v.get<std::string>());
      else if (key == "penalty_on") c.penalty_on = v.get<bool>();
      else fail(ErrorCategory::kArgument, "experiment config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCategory::kParse, std::string("experiment config: ") + e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::kIo, "cannot open config '" + path + "'");
  return parse_experiment_config(in);
}

double categorical_surrogate(const CategoricalPolicy& policy, const PolicyBatch& batch, const GrpoConfig& config) {
  std::vector<RolloutTerms> terms;
  for (std::size_t i = 0; i < batch.queries.size(); ++i) {
    const auto p = policy.probabilities(batch.queries[i]);
    for (std::size_t j = 0; j < batch.actions[i].size(); ++j) {
      const std::size_t a = batch.actions[i][j];
      RolloutTerms t;
      t.ratios = {p[a] / batch.old_probs[i][a]};
      t.kl_terms = {kl_estimate(std::log(p[a]), std::log(batch.ref_probs[i][a]), config.kl_estimator)};
      t.advantage = batch.advantages(i, j);
      terms.push_back(std::move(t));
    }
  }
  return grpo_objective(terms, config);
}

std::vector<std::vector<double>> analytic_grpo_gradient(const CategoricalPolicy& policy, const PolicyBatch& batch,
                                                        const GrpoConfig& config) {
  std::size_t total = 0;
  for (const auto& row : batch.actions) total += row.size();
  if (total == 0) fail(ErrorCategory::kArgument, "gradient over an empty batch");
  const double norm = 1.0 / static_cast<double>(total);
  const double inv_t = 1.0 / policy.temperature;

  std::vector<std::vector<double>> grad(batch.queries.size());
  for (std::size_t i = 0; i < batch.queries.size(); ++i) {
    const auto p = policy.probabilities(batch.queries[i]);
    auto& g = grad[i];
    g.assign(p.size(), 0.0);
    for (std::size_t j = 0; j < batch.actions[i].size(); ++j) {
      const std::size_t a = batch.actions[i][j];
      const double adv = batch.advantages(i, j);
      const double r = p[a] / batch.old_probs[i][a];
      const double clipped = std::clamp(r, 1.0 - config.epsilon, 1.0 + config.epsilon);
      // d(min term)/dr: the unclipped branch carries the gradient when it is the min.
      const double dterm_dr = r * adv <= clipped * adv ? adv : 0.0;
      // d(KL)/d(log r_ref) with log r_ref = log p_ref(a) - log p(a).
      double dkl = 0.0;
      if (config.beta != 0.0) {
        const double log_r = std::log(batch.ref_probs[i][a]) - std::log(p[a]);
        switch (config.kl_estimator) {
          case KlEstimator::kK3: dkl = std::expm1(log_r); break;
          case KlEstimator::kK2: dkl = log_r; break;
          case KlEstimator::kK1: dkl = -1.0; break;
        }
      }
      // d r / d z_b = r (1[a=b] - p_b) / T ; d log_r / d z_b = -(1[a=b] - p_b) / T.
      const double coeff = (dterm_dr * r + config.beta * dkl) * inv_t * norm;
      for (std::size_t b = 0; b < p.size(); ++b) g[b] -= coeff * p[b];
      g[a] += coeff;
    }
  }
  return grad;
}

void write_trace_csv(std::ostream& sink, const TrainingTrace& trace) {
  sink << "step,majority_ratio,accuracy,diversity,objective,pseudo_label_accuracy,mean_weight\n";
  for (const auto& r : trace.rows) {
    sink << r.step << ',' << format_double(r.majority_ratio) << ',' << format_double(r.accuracy) << ','
         << format_double(r.diversity) << ',' << format_double(r.objective) << ','
         << format_double(r.pseudo_label_accuracy) << ',' << format_double(r.mean_weight) << '\n';
  }
  if (!sink) fail(ErrorCategory::kIo, "failed writing training trace");
}

Trainer::Trainer(ExperimentConfig config)
    : config_(std::move(config)), store_(StoreConfig{config_.pseudo_label.em, config_.store_cap}) {
  validate(config_);
  TaskSpec spec = config_.task;
  spec.seed = derive_seed(config_.seed, {0x7a51});
  SyntheticSetup setup = make_synthetic(spec);
  task_ = std::move(setup.task);
  policy_ = std::move(setup.policy);
  reference_ = policy_;
}

StepReport Trainer::step() {
  if (diverged_) fail(ErrorCategory::kState, "trainer halted after divergence");
  const std::int64_t k = ++step_;
  const std::size_t batch_size = config_.batch_size;
  const std::size_t g = config_.group_size;

  // Batch: B distinct queries.
  std::vector<std::size_t> queries(task_.queries.size());
  std::iota(queries.begin(), queries.end(), 0);
  if (batch_size < queries.size()) {
    Rng rng(derive_seed(config_.seed, {static_cast<std::uint64_t>(k), 0xba7c}));
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, queries.size() - 1);
      std::swap(queries[i], queries[pick(rng)]);
    }
    queries.resize(batch_size);
    std::sort(queries.begin(), queries.end());
  }

  // Sampling: one RNG stream per (step, query) keeps results order independent.
  std::vector<SampledGroup> voted(batch_size);
  std::vector<SampledGroup> train(batch_size);
  parallel_for(batch_size, [&](std::size_t i) {
    Rng rng(derive_seed(config_.seed, {static_cast<std::uint64_t>(k), queries[i]}));
    voted[i] = sample_rollouts(policy_, task_, queries[i], config_.vote_samples, k, rng, config_.confidence);
    const auto sub_seed = derive_seed(config_.seed, {static_cast<std::uint64_t>(k), queries[i], 0xd5});
    SampledGroup t;
    t.group = config_.vote_samples == g ? voted[i].group : downsample_rollouts(voted[i].group, g, sub_seed);
    // Recover the candidate index of each kept rollout from its answer.
    const auto& cands = task_.queries[queries[i]].candidates;
    for (const auto& rec : t.group.rollouts) {
      t.actions.push_back(static_cast<std::size_t>(std::find(cands.begin(), cands.end(), rec.answer) - cands.begin()));
    }
    train[i] = std::move(t);
  });

  StepBatch vote_batch{k, {}};
  for (const auto& s : voted) vote_batch.groups.push_back(s.group);
  const Matrix conf = batch_confidence(vote_batch, config_.confidence);

  StepReport report;
  report.queries = queries;
  report.labels.resize(batch_size);
  if (config_.label_mode == LabelMode::kDistriTtrl) {
    store_.record_step(k, conf);
    const AggregatedConfidences agg = store_.aggregate(k);
    const LabeledGmm2 global = fit_labeled(agg.values, config_.pseudo_label.em);
    for (std::size_t i = 0; i < batch_size; ++i) {
      report.labels[i] =
          estimate_pseudo_label(vote_batch.groups[i], conf.row(i), global, config_.pseudo_label).final_answer;
    }
  } else {
    for (std::size_t i = 0; i < batch_size; ++i) {
      const auto& q = task_.queries[queries[i]];
      report.labels[i] = config_.label_mode == LabelMode::kGroundTruth ? q.candidates[q.truth]
                                                                        : majority_answer(vote_batch.groups[i]);
    }
  }

  report.rewards = Matrix(batch_size, g);
  std::vector<int> diversity(batch_size);
  TraceRow row;
  row.step = k;
  for (std::size_t i = 0; i < batch_size; ++i) {
    const auto& grp = train[i].group;
    for (std::size_t j = 0; j < g; ++j) report.rewards(i, j) = grp.rollouts[j].answer == report.labels[i] ? 1.0 : 0.0;
    diversity[i] = answer_diversity(grp);
    const auto& vote_group = vote_batch.groups[i];
    const auto& q = task_.queries[queries[i]];
    row.majority_ratio += majority_ratio(vote_group, majority_answer(vote_group));
    row.accuracy += majority_ratio(vote_group, q.candidates[q.truth]);
    row.diversity += diversity[i];
    row.pseudo_label_accuracy += report.labels[i] == q.candidates[q.truth] ? 1.0 : 0.0;
  }
  const double inv_b = 1.0 / static_cast<double>(batch_size);
  row.majority_ratio *= inv_b;
  row.accuracy *= inv_b;
  row.diversity *= inv_b;
  row.pseudo_label_accuracy *= inv_b;

  report.weights = config_.penalty_on ? diversity_weights(diversity, g, config_.tau)
                                      : neutral_weights(diversity, config_.tau);
  report.advantages = group_advantage(report.rewards);
  report.weighted = weighted_advantage(report.advantages, report.weights);
  row.mean_weight = std::accumulate(report.weights.final_weights.begin(), report.weights.final_weights.end(), 0.0) *
                    inv_b;

  PolicyBatch pb;
  pb.queries = queries;
  pb.advantages = report.weighted;
  for (std::size_t i = 0; i < batch_size; ++i) {
    pb.actions.push_back(train[i].actions);
    pb.old_probs.push_back(policy_.probabilities(queries[i]));
    pb.ref_probs.push_back(reference_.probabilities(queries[i]));
  }
  const auto grad = analytic_grpo_gradient(policy_, pb, config_.grpo);
  for (std::size_t i = 0; i < batch_size; ++i) {
    auto& z = policy_.logits[queries[i]];
    for (std::size_t m = 0; m < z.size(); ++m) {
      z[m] += config_.lr * grad[i][m];
      if (!(std::abs(z[m]) <= config_.divergence_limit)) diverged_ = true;
    }
  }
  // A diverged policy can underflow probabilities to zero; no objective then.
  row.objective = diverged_ ? std::numeric_limits<double>::quiet_NaN() : categorical_surrogate(policy_, pb, config_.grpo);
  report.row = row;
  return report;
}

TrainingTrace Trainer::run() {
  TrainingTrace trace;
  while (step_ < config_.steps && !diverged_) trace.rows.push_back(step().row);
  trace.diverged = diverged_;
  return trace;
}

TrainingTrace run_experiment(const ExperimentConfig& config) { return Trainer(config).run(); }

double majority_ratio_area(const TrainingTrace& trace) {
  double area = 0.0;
  for (const auto& r : trace.rows) area += r.majority_ratio;
  return area;
}

double final_majority_ratio(const TrainingTrace& trace, std::size_t window) {
  if (trace.rows.empty()) return 0.0;
  const std::size_t n = std::min(window, trace.rows.size());
  double sum = 0.0;
  for (std::size_t i = trace.rows.size() - n; i < trace.rows.size(); ++i) sum += trace.rows[i].majority_ratio;
  return sum / static_cast<double>(n);
}

std::int64_t plateau_step(const TrainingTrace& trace, double fraction, std::size_t window) {
  const double target = fraction * final_majority_ratio(trace, window);
  for (const auto& r : trace.rows) {
    if (r.majority_ratio >= target) return r.step;
  }
  return trace.rows.empty() ? 0 : trace.rows.back().step;
}

}  // namespace distrittrl

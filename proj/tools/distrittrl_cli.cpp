// distrittrl: command-line front end for rollout scoring, voting, budget
// sweeps, the training simulator, and synthetic corpus generation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "distrittrl/confidence.hpp"
#include "distrittrl/error.hpp"
#include "distrittrl/harness.hpp"
#include "distrittrl/pseudo_label.hpp"
#include "distrittrl/report.hpp"
#include "distrittrl/rollout.hpp"
#include "distrittrl/sim_trainer.hpp"
#include "distrittrl/synthetic.hpp"

namespace dt = distrittrl;

namespace {

int exit_code(dt::ErrorCategory c) {
  switch (c) {
    case dt::ErrorCategory::kParse: return 2;
    case dt::ErrorCategory::kStructural: return 3;
    case dt::ErrorCategory::kValidation: return 4;
    case dt::ErrorCategory::kArgument: return 5;
    case dt::ErrorCategory::kState: return 6;
    case dt::ErrorCategory::kIo: return 7;
  }
  return 1;
}

// Output goes to --out when given, stdout otherwise. Files are written only
// after the command has succeeded.
class Sink {
 public:
  explicit Sink(std::string path) : path_(std::move(path)) {}
  std::ostream& stream() { return path_.empty() ? std::cout : buffer_; }
  void commit() {
    if (path_.empty()) {
      std::cout.flush();
      return;
    }
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) dt::fail(dt::ErrorCategory::kIo, "cannot open output '" + path_ + "'");
    out << buffer_.str();
    out.flush();
    if (!out) dt::fail(dt::ErrorCategory::kIo, "failed writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ostringstream buffer_;
};

std::vector<dt::Strategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<dt::Strategy> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.assign(std::begin(dt::kAllStrategies), std::end(dt::kAllStrategies));
      continue;
    }
    out.push_back(dt::parse_strategy(n));
  }
  return out;
}

struct ConfidenceFlags {
  std::size_t tail_window = dt::ConfidenceParams{}.tail_window;
  std::size_t top_k = dt::ConfidenceParams{}.top_k;
  bool negate = false;

  void add_to(CLI::App* app) {
    app->add_option("--tail-window", tail_window, "Trailing token positions used for confidence");
    app->add_option("--top-k", top_k, "Top-k log-probabilities per position");
    app->add_flag("--negate-confidence", negate, "Treat smaller confidence values as more confident");
  }
  dt::ConfidenceParams params() const { return {tail_window, top_k, negate}; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidence-distribution pseudo-labeling and diversity-penalized GRPO toolkit"};
  app.require_subcommand(1);

  std::string corpus_path;
  std::string out_path;
  std::string config_path;

  // confidence
  auto* conf_cmd = app.add_subcommand("confidence", "Per-rollout trajectory confidence as CSV");
  ConfidenceFlags conf_flags;
  conf_cmd->add_option("--corpus", corpus_path, "Rollout corpus (JSONL)")->required();
  conf_cmd->add_option("--out", out_path, "Output path (default stdout)");
  conf_flags.add_to(conf_cmd);

  // vote
  auto* vote_cmd = app.add_subcommand("vote", "Run voting strategies per query");
  std::vector<std::string> vote_strategies{"sc"};
  ConfidenceFlags vote_conf;
  vote_cmd->add_option("--corpus", corpus_path, "Rollout corpus (JSONL)")->required();
  vote_cmd->add_option("--strategies", vote_strategies, "Comma-separated strategies or 'all'")->delimiter(',');
  vote_cmd->add_option("--out", out_path, "Output path (default stdout)");
  vote_conf.add_to(vote_cmd);

  // budget-sweep
  auto* sweep_cmd = app.add_subcommand("budget-sweep", "Accuracy of each strategy across sampling budgets");
  dt::BudgetSweepConfig sweep;
  std::vector<std::string> sweep_strategies{"all"};
  std::string format_name = "csv";
  std::string truth_path;
  ConfidenceFlags sweep_conf;
  sweep_cmd->add_option("--corpus", corpus_path, "Rollout corpus (JSONL)")->required();
  sweep_cmd->add_option("--budgets", sweep.budgets, "Comma-separated budgets")->delimiter(',');
  sweep_cmd->add_option("--strategies", sweep_strategies, "Comma-separated strategies or 'all'")->delimiter(',');
  sweep_cmd->add_option("--repeats", sweep.repeats, "Repetitions per budget");
  sweep_cmd->add_option("--seed", sweep.seed, "Master seed");
  sweep_cmd->add_option("--format", format_name, "csv or json");
  sweep_cmd->add_option("--truth", truth_path, "CSV sidecar query_id,answer (else use correct flags)");
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads (0 = all cores)");
  sweep_cmd->add_option("--out", out_path, "Output path (default stdout)");
  sweep_conf.add_to(sweep_cmd);

  // train-sim
  auto* train_cmd = app.add_subcommand("train-sim", "Run the synthetic training loop and emit its trace");
  std::optional<std::uint64_t> train_seed;
  std::optional<std::string> label_mode;
  std::optional<bool> penalty_on;
  train_cmd->add_option("--config", config_path, "Experiment config (JSON); defaults when omitted");
  train_cmd->add_option("--seed", train_seed, "Override the config seed");
  train_cmd->add_option("--label-mode", label_mode, "ground_truth, ttrl_majority or distrittrl");
  train_cmd->add_option("--penalty", penalty_on, "Diversity penalty on/off (true/false)");
  train_cmd->add_option("--out", out_path, "Output path (default stdout)");

  // gen-synthetic
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic rollout corpus with correct flags");
  dt::CorpusSpec corpus_spec;
  corpus_spec.task.num_queries = 30;
  double correct_rate = 0.6;
  double spread = 0.4;
  gen_cmd->add_option("--queries", corpus_spec.task.num_queries, "Number of queries");
  gen_cmd->add_option("--samples", corpus_spec.group_size, "Rollouts per query");
  gen_cmd->add_option("--steps", corpus_spec.num_steps, "Number of steps");
  gen_cmd->add_option("--candidates", corpus_spec.task.num_candidates, "Candidate answers per query");
  gen_cmd->add_option("--correct-rate", correct_rate, "Mean probability of the true answer");
  gen_cmd->add_option("--spread", spread, "Half-width of the per-query correct-rate range");
  gen_cmd->add_option("--separation", corpus_spec.task.confidence.separation, "Correct vs incorrect confidence gap");
  gen_cmd->add_option("--noise-sd", corpus_spec.task.confidence.noise_sd, "Confidence noise");
  gen_cmd->add_option("--drift", corpus_spec.task.confidence.drift.initial_offset, "Initial drift offset");
  gen_cmd->add_option("--top-k", corpus_spec.confidence.top_k, "Log-probabilities per synthesized position");
  gen_cmd->add_option("--seed", corpus_spec.seed, "Master seed");
  gen_cmd->add_option("--out", out_path, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    Sink sink(out_path);
    auto& out = sink.stream();
    if (*conf_cmd) {
      const auto params = conf_flags.params();
      dt::validate(params);
      const auto corpus = dt::load_rollout_corpus(corpus_path);
      out << "query_id,step,sample_index,confidence\n";
      for (const auto& batch : corpus) {
        const auto m = dt::batch_confidence(batch, params);
        for (std::size_t i = 0; i < batch.groups.size(); ++i) {
          for (std::size_t j = 0; j < m.cols(); ++j) {
            const auto& r = batch.groups[i].rollouts[j];
            out << r.query_id << ',' << r.step << ',' << r.sample_index << ',' << dt::format_double(m(i, j)) << '\n';
          }
        }
      }
    } else if (*vote_cmd) {
      const auto params = vote_conf.params();
      dt::validate(params);
      const auto strategies = parse_strategies(vote_strategies);
      const auto corpus = dt::load_rollout_corpus(corpus_path);
      bool has_flags = !corpus.empty();
      for (const auto& b : corpus)
        for (const auto& g : b.groups)
          for (const auto& r : g.rollouts) has_flags = has_flags && r.correct.has_value();
      out << "query_id,strategy,answer,majority_ratio" << (has_flags ? ",correct" : "") << '\n';
      for (const auto& batch : corpus) {
        for (const auto& group : batch.groups) {
          const auto conf = dt::group_confidence(group, params);
          for (auto s : strategies) {
            const auto answer = dt::baseline_vote(group, conf, s);
            out << group.query_id << ',' << dt::to_string(s) << ',' << answer << ','
                << dt::format_double(dt::majority_ratio(group, answer));
            if (has_flags) {
              bool correct = false;
              for (const auto& r : group.rollouts) correct = correct || (r.answer == answer && *r.correct);
              out << ',' << (correct ? 1 : 0);
            }
            out << '\n';
          }
        }
      }
    } else if (*sweep_cmd) {
      sweep.strategies = parse_strategies(sweep_strategies);
      sweep.confidence = sweep_conf.params();
      dt::validate(sweep.confidence);
      const auto format = dt::parse_report_format(format_name);
      const auto corpus = dt::load_rollout_corpus(corpus_path);
      std::optional<dt::TruthTable> truth;
      if (!truth_path.empty()) truth = dt::load_truth_table(truth_path);
      const auto table = dt::run_budget_sweep(corpus, sweep, truth ? &*truth : nullptr);
      dt::emit_report(table, format, out);
    } else if (*train_cmd) {
      dt::ExperimentConfig config = config_path.empty() ? dt::ExperimentConfig{} : dt::load_experiment_config(config_path);
      if (train_seed) config.seed = *train_seed;
      if (label_mode) config.label_mode = dt::parse_label_mode(*label_mode);
      if (penalty_on) config.penalty_on = *penalty_on;
      const auto trace = dt::run_experiment(config);
      dt::write_trace_csv(out, trace);
      if (trace.diverged) std::cerr << "warning: training halted by the divergence guard\n";
    } else if (*gen_cmd) {
      corpus_spec.task.truth_prob_min = std::max(correct_rate - spread, 1e-3);
      corpus_spec.task.truth_prob_max = std::min(correct_rate + spread, 1.0);
      const auto corpus = dt::generate_corpus(corpus_spec);
      dt::write_rollout_corpus(out, corpus);
    }
    sink.commit();
  } catch (const dt::Error& e) {
    std::cerr << "error: " << e.tagged() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: [internal] " << e.what() << '\n';
    return 1;
  }
  return 0;
}

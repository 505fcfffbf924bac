#include "distrittrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "distrittrl/error.hpp"
#include "distrittrl/parallel.hpp"
#include "distrittrl/random.hpp"

namespace distrittrl {

TruthTable load_truth_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::kIo, "cannot open truth table '" + path + "'");
  TruthTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      fail(ErrorCategory::kParse, "truth table line " + std::to_string(line_no) + ": expected query_id,answer");
    }
    table[line.substr(0, comma)] = canonicalize_answer(line.substr(comma + 1));
  }
  return table;
}

namespace {

struct EvalItem {
  const QueryGroup* group = nullptr;
  std::vector<double> conf;
  std::map<std::string, bool> answer_correct;
};

EvalItem make_item(const QueryGroup& group, const ConfidenceParams& params, const TruthTable* truth) {
  EvalItem item;
  item.group = &group;
  item.conf = group_confidence(group, params);
  if (truth) {
    const auto it = truth->find(group.query_id);
    if (it == truth->end()) fail(ErrorCategory::kArgument, "no ground truth for query " + group.query_id);
    for (const auto& r : group.rollouts) item.answer_correct[r.answer] = r.answer == it->second;
    return item;
  }
  for (const auto& r : group.rollouts) {
    if (!r.correct) {
      fail(ErrorCategory::kArgument, "query " + group.query_id + " lacks correct flags and no truth table was given");
    }
    auto [pos, inserted] = item.answer_correct.emplace(r.answer, *r.correct);
    if (!inserted && pos->second != *r.correct) {
      fail(ErrorCategory::kStructural, "query " + group.query_id + ": answer '" + r.answer +
                                           "' has inconsistent correct flags");
    }
  }
  return item;
}

}  // namespace

SweepTable run_budget_sweep(std::span<const StepBatch> corpus, const BudgetSweepConfig& config,
                            const TruthTable* truth) {
  if (config.repeats < 1) fail(ErrorCategory::kArgument, "repeats must be >= 1");
  if (config.budgets.empty() || config.strategies.empty()) {
    fail(ErrorCategory::kArgument, "budget sweep needs at least one budget and one strategy");
  }
  std::vector<EvalItem> items;
  for (const auto& batch : corpus) {
    for (const auto& group : batch.groups) items.push_back(make_item(group, config.confidence, truth));
  }
  if (items.empty()) fail(ErrorCategory::kArgument, "budget sweep over an empty corpus");
  for (std::size_t budget : config.budgets) {
    if (budget < 1) fail(ErrorCategory::kArgument, "budgets must be positive");
    for (const auto& item : items) {
      if (budget > item.group->size()) {
        fail(ErrorCategory::kArgument, "budget " + std::to_string(budget) + " exceeds the " +
                                           std::to_string(item.group->size()) + " rollouts of query " +
                                           item.group->query_id + " at step " + std::to_string(item.group->step));
      }
    }
  }

  const std::size_t n_strat = config.strategies.size();
  const std::size_t n_budget = config.budgets.size();
  // hits[(b * R + r) * S + s]: items answered correctly in one repeat.
  std::vector<std::size_t> hits(n_budget * config.repeats * n_strat, 0);
  parallel_for(
      n_budget * config.repeats,
      [&](std::size_t job) {
        const std::size_t b = job / config.repeats;
        const std::size_t r = job % config.repeats;
        const std::size_t budget = config.budgets[b];
        for (std::size_t q = 0; q < items.size(); ++q) {
          const auto& item = items[q];
          const auto seed = derive_seed(config.seed, {budget, r, q});
          const auto kept = downsample_indices(*item.group, budget, seed);
          QueryGroup sub{item.group->query_id, item.group->step, {}};
          std::vector<double> conf(budget);
          for (std::size_t j = 0; j < budget; ++j) {
            sub.rollouts.push_back(item.group->rollouts[kept[j]]);
            sub.rollouts.back().sample_index = static_cast<std::int64_t>(j);
            conf[j] = item.conf[kept[j]];
          }
          for (std::size_t s = 0; s < n_strat; ++s) {
            const std::string answer = baseline_vote(sub, conf, config.strategies[s], config.baseline);
            if (item.answer_correct.at(answer)) ++hits[job * n_strat + s];
          }
        }
      },
      config.threads);

  SweepTable table;
  for (std::size_t s = 0; s < n_strat; ++s) {
    for (std::size_t b = 0; b < n_budget; ++b) {
      // Statistics on integer counts so identical repeats give exactly zero spread.
      const double reps = static_cast<double>(config.repeats);
      const double scale = 100.0 / static_cast<double>(items.size());
      std::size_t total = 0;
      for (std::size_t r = 0; r < config.repeats; ++r) total += hits[(b * config.repeats + r) * n_strat + s];
      const double mean_hits = static_cast<double>(total) / reps;
      double ss = 0.0;
      for (std::size_t r = 0; r < config.repeats; ++r) {
        const double d = static_cast<double>(hits[(b * config.repeats + r) * n_strat + s]) - mean_hits;
        ss += d * d;
      }
      const double mean = mean_hits * scale;
      const double se = config.repeats > 1 ? scale * std::sqrt(ss / (reps - 1.0)) / std::sqrt(reps) : 0.0;
      table.cells.push_back({config.strategies[s], config.budgets[b], mean, se, config.repeats * items.size()});
    }
  }
  return table;
}

}  // namespace distrittrl

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "distrittrl/confidence.hpp"
#include "distrittrl/pseudo_label.hpp"
#include "distrittrl/report.hpp"
#include "distrittrl/rollout.hpp"

namespace distrittrl {

struct BudgetSweepConfig {
  std::vector<std::size_t> budgets{8, 16, 32, 64, 128, 256};
  std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  std::size_t repeats = 64;
  std::uint64_t seed = 0;
  ConfidenceParams confidence;
  BaselineOptions baseline;
  std::size_t threads = 0;  // 0: hardware concurrency
};

// query_id -> canonical ground-truth answer.
using TruthTable = std::map<std::string, std::string>;

TruthTable load_truth_table(const std::string& path);  // CSV: query_id,answer

// Every (step, query) group is one evaluation item. An answer is correct if
// the truth table says so or, without a table, if its rollouts carry
// correct = true.
SweepTable run_budget_sweep(std::span<const StepBatch> corpus, const BudgetSweepConfig& config,
                            const TruthTable* truth = nullptr);

}  // namespace distrittrl

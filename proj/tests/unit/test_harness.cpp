#include <cstdio>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "distrittrl/harness.hpp"
#include "distrittrl/report.hpp"
#include "distrittrl/synthetic.hpp"
#include "helpers.hpp"

using namespace distrittrl;
using testutil::category_of;

namespace {

std::vector<StepBatch> synthetic_corpus(std::size_t queries, std::size_t g, std::uint64_t seed, double lo = 0.2,
                                        double hi = 1.0) {
  CorpusSpec spec;
  spec.task.num_queries = queries;
  spec.task.truth_prob_min = lo;
  spec.task.truth_prob_max = hi;
  spec.group_size = g;
  spec.seed = seed;
  return generate_corpus(spec);
}

BudgetSweepConfig sweep_config(std::vector<std::size_t> budgets, std::size_t repeats, std::uint64_t seed) {
  BudgetSweepConfig c;
  c.budgets = std::move(budgets);
  c.repeats = repeats;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(BudgetSweep, BudgetOneColumnsCoincide) {
  const auto corpus = synthetic_corpus(20, 32, 1);
  const auto t = run_budget_sweep(corpus, sweep_config({1}, 16, 3));
  for (Strategy s : kAllStrategies) {
    EXPECT_EQ(t.at(s, 1).mean, t.at(Strategy::kSC, 1).mean) << to_string(s);
    EXPECT_EQ(t.at(s, 1).std_error, t.at(Strategy::kSC, 1).std_error);
  }
}

TEST(BudgetSweep, FullBudgetHasNoSpread) {
  const auto corpus = synthetic_corpus(10, 16, 2);
  const auto t = run_budget_sweep(corpus, sweep_config({16}, 8, 3));
  for (const auto& c : t.cells) EXPECT_EQ(c.std_error, 0.0);
}

TEST(BudgetSweep, GridShapeAndRanges) {
  const auto corpus = synthetic_corpus(10, 256, 3);
  const auto t = run_budget_sweep(corpus, sweep_config({8, 16, 32, 64, 128, 256}, 4, 1));
  ASSERT_EQ(t.cells.size(), 36u);
  for (const auto& c : t.cells) {
    EXPECT_GE(c.mean, 0.0);
    EXPECT_LE(c.mean, 100.0);
    EXPECT_GE(c.std_error, 0.0);
    EXPECT_EQ(c.n, 40u);
  }
  EXPECT_EQ(t.cells[0].strategy, Strategy::kSC);
  EXPECT_EQ(t.cells[5].budget, 256u);
  std::ostringstream out;
  emit_report(t, ReportFormat::kCsv, out);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 37);
}

TEST(BudgetSweep, SameSeedSameTable) {
  const auto corpus = synthetic_corpus(8, 64, 4);
  auto c = sweep_config({4, 32}, 6, 11);
  c.threads = 1;
  const auto a = run_budget_sweep(corpus, c);
  c.threads = 4;
  EXPECT_EQ(run_budget_sweep(corpus, c), a);
  c.seed = 12;
  EXPECT_NE(run_budget_sweep(corpus, c), a);
}

TEST(BudgetSweep, MajorityGainsWithBudget) {
  // 60% mean truth probability, confidence separation 2.
  const auto corpus = synthetic_corpus(100, 256, 5);
  auto c = sweep_config({8, 256}, 64, 1);
  c.strategies = {Strategy::kSC};
  const auto t = run_budget_sweep(corpus, c);
  EXPECT_GE(t.at(Strategy::kSC, 256).mean - t.at(Strategy::kSC, 8).mean, 5.0);
}

TEST(BudgetSweep, MonotoneWithinOneStderr) {
  // Budgets stay below G: at the full budget every repeat sees the same rollouts,
  // the stderr collapses to 0 and a single query flip breaks the tolerance.
  const auto corpus = synthetic_corpus(40, 256, 6);
  const auto t = run_budget_sweep(corpus, sweep_config({8, 16, 32, 64, 128}, 256, 2));
  for (Strategy s : kAllStrategies) {
    for (std::size_t b : {16u, 32u, 64u, 128u}) {
      const auto& lo = t.at(s, b / 2);
      const auto& hi = t.at(s, b);
      EXPECT_GE(hi.mean, lo.mean - std::max(lo.std_error, hi.std_error) - 1e-9) << to_string(s) << " @" << b;
    }
  }
}

TEST(BudgetSweep, Errors) {
  const auto corpus = synthetic_corpus(3, 8, 1);
  try {
    run_budget_sweep(corpus, sweep_config({9}, 1, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kArgument);
    EXPECT_NE(std::string(e.what()).find("q0000"), std::string::npos);
  }
  EXPECT_EQ(category_of([&] { run_budget_sweep(corpus, sweep_config({2}, 0, 0)); }), ErrorCategory::kArgument);
  auto unflagged = corpus;
  unflagged[0].groups[0].rollouts[0].correct.reset();
  EXPECT_EQ(category_of([&] { run_budget_sweep(unflagged, sweep_config({2}, 1, 0)); }), ErrorCategory::kArgument);
}

TEST(BudgetSweep, TruthTableMatchesFlags) {
  const auto corpus = synthetic_corpus(6, 16, 7);
  TruthTable truth;
  auto stripped = corpus;
  for (auto& g : stripped[0].groups) {
    for (auto& r : g.rollouts) {
      if (*r.correct) truth[g.query_id] = r.answer;
      r.correct.reset();
    }
    if (!truth.count(g.query_id)) truth[g.query_id] = "never-sampled";
  }
  const auto c = sweep_config({4, 16}, 8, 1);
  EXPECT_EQ(run_budget_sweep(stripped, c, &truth), run_budget_sweep(corpus, c));

  const std::string path = ::testing::TempDir() + "truth.csv";
  {
    std::ofstream out(path);
    for (const auto& [q, a] : truth) out << q << ',' << a << '\n';
  }
  EXPECT_EQ(load_truth_table(path), truth);
  std::remove(path.c_str());
}

TEST(Report, SingleCell) {
  SweepTable t{{{Strategy::kWSC, 8, 62.5, 1.25, 64}}};
  std::ostringstream out;
  emit_report(t, ReportFormat::kCsv, out);
  EXPECT_EQ(out.str(), "strategy,budget,mean,stderr,n\nwsc,8,62.5,1.25,64\n");
}

TEST(Report, RoundTrip) {
  SweepTable t;
  for (Strategy s : kAllStrategies) {
    for (std::size_t b : {8u, 256u}) t.cells.push_back({s, b, 100.0 / 3.0 + b, 0.1 + 1e-17 * b, b * 3});
  }
  for (auto f : {ReportFormat::kCsv, ReportFormat::kJson}) {
    std::stringstream buf;
    emit_report(t, f, buf);
    EXPECT_EQ(parse_report(buf, f), t);
  }
}

TEST(Report, Errors) {
  std::ostringstream out;
  EXPECT_EQ(category_of([&] { emit_report({}, ReportFormat::kCsv, out); }), ErrorCategory::kArgument);
  std::istringstream bad("strategy,budget\n");
  EXPECT_EQ(category_of([&] { parse_report(bad, ReportFormat::kCsv); }), ErrorCategory::kParse);
  EXPECT_EQ(category_of([] { parse_report_format("xml"); }), ErrorCategory::kArgument);
  std::ofstream closed;
  SweepTable t{{{Strategy::kSC, 1, 0.0, 0.0, 1}}};
  EXPECT_EQ(category_of([&] { emit_report(t, ReportFormat::kCsv, closed); }), ErrorCategory::kIo);
}

TEST(Report, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 73.33333333333334, 1e-300, 12345678.9}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(55.0), "55");
}

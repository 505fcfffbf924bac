#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "distrittrl/advantage.hpp"
#include "distrittrl/confidence.hpp"
#include "distrittrl/synthetic.hpp"
#include "helpers.hpp"

using namespace distrittrl;
using testutil::category_of;

namespace {

SyntheticTask one_query_task(std::size_t m, double separation = 2.0, double noise = 0.5) {
  SyntheticTask t;
  SyntheticQuery q{"q0", {}, 0, {}};
  for (std::size_t c = 0; c < m; ++c) {
    q.candidates.push_back("c" + std::to_string(c));
    q.base_quality.push_back(3.0);
  }
  t.queries.push_back(q);
  t.confidence.separation = separation;
  t.confidence.noise_sd = noise;
  t.confidence.drift = {0.0, 100.0};
  return t;
}

}  // namespace

TEST(Drift, Schedule) {
  const DriftSchedule d{-1.0, 100.0};
  EXPECT_EQ(d.at(0), -1.0);
  EXPECT_DOUBLE_EQ(d.at(50), -0.5);
  EXPECT_EQ(d.at(100), 0.0);
  EXPECT_EQ(d.at(250), 0.0);
}

TEST(Synthesize, HitsTargetConfidence) {
  for (std::size_t k : {1u, 2u, 5u, 8u}) {
    for (double c : {0.0, 0.3, 2.0, 7.5}) {
      const auto lps = synthesize_token_logprobs(c, k);
      RolloutRecord r{"q", 0, 0, "a", lps, std::nullopt};
      EXPECT_NO_THROW(validate_record(r));
      EXPECT_NEAR(trajectory_confidence(r, {2048, k, false}), c, 1e-12);
    }
  }
  RolloutRecord r{"q", 0, 0, "a", synthesize_token_logprobs(-3.0, 5), std::nullopt};
  EXPECT_EQ(trajectory_confidence(r, {}), 0.0);
}

TEST(MakeSynthetic, ShapesAndInvariants) {
  TaskSpec spec;
  spec.num_queries = 20;
  spec.seed = 3;
  const auto s = make_synthetic(spec);
  EXPECT_NO_THROW(validate(s.task));
  ASSERT_EQ(s.task.queries.size(), 20u);
  for (std::size_t q = 0; q < 20; ++q) {
    const auto p = s.policy.probabilities(q);
    double sum = 0.0;
    for (double x : p) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    const double pt = p[s.task.queries[q].truth];
    EXPECT_GE(pt, spec.truth_prob_min - 1e-9);
    EXPECT_LE(pt, spec.truth_prob_max + 1e-9);
  }
  const auto again = make_synthetic(spec);
  EXPECT_EQ(again.policy.logits, s.policy.logits);
}

TEST(MakeSynthetic, InvalidTask) {
  auto t = one_query_task(1);
  EXPECT_EQ(category_of([&] { validate(t); }), ErrorCategory::kArgument);
  t = one_query_task(3, 2.0, 0.0);
  EXPECT_EQ(category_of([&] { validate(t); }), ErrorCategory::kArgument);
}

TEST(SampleRollouts, ColdLimitPicksArgmax) {
  const auto task = one_query_task(4);
  CategoricalPolicy policy{{{0.0, 1.0, 0.2, -0.5}}, 1e-4};
  Rng rng(1);
  const auto s = sample_rollouts(policy, task, 0, 64, 0, rng, {});
  EXPECT_EQ(answer_diversity(s.group), 1);
  EXPECT_EQ(s.group.rollouts[0].answer, "c1");
}

TEST(SampleRollouts, UniformFrequencies) {
  const auto task = one_query_task(4);
  CategoricalPolicy policy{{{0.0, 0.0, 0.0, 0.0}}, 1.0};
  Rng rng(2);
  const auto s = sample_rollouts(policy, task, 0, 4000, 0, rng, {});
  std::map<std::string, int> counts;
  for (const auto& r : s.group.rollouts) ++counts[r.answer];
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [a, n] : counts) EXPECT_NEAR(n / 4000.0, 0.25, 0.02) << a;
  EXPECT_NO_THROW(validate_group(s.group));
}

TEST(SampleRollouts, SeparationBetweenCorrectAndIncorrect) {
  for (bool negate : {false, true}) {
    const auto task = one_query_task(2);
    CategoricalPolicy policy{{{0.0, 0.0}}, 1.0};
    Rng rng(3);
    const ConfidenceParams params{2048, 5, negate};
    const auto s = sample_rollouts(policy, task, 0, 10000, 0, rng, params);
    const auto conf = group_confidence(s.group, params);
    double sum_c = 0.0, sum_w = 0.0;
    int nc = 0, nw = 0;
    for (std::size_t j = 0; j < conf.size(); ++j) {
      if (s.actions[j] == task.queries[0].truth) {
        sum_c += conf[j];
        ++nc;
      } else {
        sum_w += conf[j];
        ++nw;
      }
      EXPECT_EQ(*s.group.rollouts[j].correct, s.actions[j] == task.queries[0].truth);
    }
    EXPECT_NEAR(sum_c / nc - sum_w / nw, 2.0, 0.1) << "negate=" << negate;
  }
}

TEST(SampleRollouts, DeterministicGivenRngState) {
  TaskSpec spec;
  spec.seed = 1;
  const auto s = make_synthetic(spec);
  Rng a(9), b(9);
  EXPECT_EQ(sample_rollouts(s.policy, s.task, 2, 32, 5, a, {}).group,
            sample_rollouts(s.policy, s.task, 2, 32, 5, b, {}).group);
}

TEST(GenerateCorpus, ShapeAndFlags) {
  CorpusSpec spec;
  spec.task.num_queries = 5;
  spec.group_size = 16;
  spec.num_steps = 2;
  spec.seed = 4;
  const auto corpus = generate_corpus(spec);
  ASSERT_EQ(corpus.size(), 2u);
  for (const auto& b : corpus) {
    EXPECT_EQ(b.groups.size(), 5u);
    EXPECT_EQ(b.group_size(), 16u);
    for (const auto& g : b.groups) {
      for (const auto& r : g.rollouts) EXPECT_TRUE(r.correct.has_value());
    }
  }
  EXPECT_EQ(generate_corpus(spec), corpus);
}

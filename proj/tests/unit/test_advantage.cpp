#include <cmath>
#include <random>
#include <span>

#include <gtest/gtest.h>

#include "distrittrl/advantage.hpp"
#include "helpers.hpp"

using namespace distrittrl;
using testutil::category_of;
using testutil::group_of;

TEST(AnswerDiversity, Counts) {
  EXPECT_EQ(answer_diversity(group_of({"a", "a", "a"})), 1);
  EXPECT_EQ(answer_diversity(group_of({"1", "2", "3", "4", "5", "6", "7", "8"})), 8);
  std::vector<std::string> raw{"a", "A", " a ", "b"};
  for (auto& s : raw) s = canonicalize_answer(s);
  EXPECT_EQ(answer_diversity(group_of(raw)), 2);
}

TEST(DiversityWeights, SymmetricPair) {
  const std::vector<int> d{1, 1};
  const auto w = diversity_weights(d, 32, 0.1);
  EXPECT_DOUBLE_EQ(w.softmax_weights[0], 0.5);
  EXPECT_EQ(w.final_weights, (std::vector<double>{0.5, 0.5}));
}

TEST(DiversityWeights, LowDiversityIsPenalized) {
  const std::vector<int> d{1, 10};
  const auto w = diversity_weights(d, 32, 0.1);
  const double expected = std::exp(1.0) / (std::exp(1.0) + std::exp(10.0));
  EXPECT_NEAR(w.final_weights[0], expected, 1e-15);
  EXPECT_NEAR(w.final_weights[0], 1.234e-4, 1e-7);
  EXPECT_EQ(w.final_weights[1], 1.0);
}

TEST(DiversityWeights, AllAboveThresholdAreNeutral) {
  const std::vector<int> d{4, 5, 9};
  EXPECT_EQ(diversity_weights(d, 32, 0.1).final_weights, std::vector<double>(3, 1.0));
  EXPECT_EQ(neutral_weights(d, 0.1).final_weights, std::vector<double>(3, 1.0));
}

TEST(DiversityWeights, NoOverflowForLargeGroups) {
  const std::vector<int> d{2000, 1, 1999};
  const auto w = diversity_weights(d, 4096, 0.5);
  double sum = 0.0;
  for (double s : w.softmax_weights) {
    EXPECT_TRUE(std::isfinite(s));
    sum += s;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(DiversityWeights, Properties) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t b = 1 + rng() % 12;
    const std::size_t g = 1 + rng() % 64;
    std::vector<int> d(b);
    for (auto& x : d) x = 1 + static_cast<int>(rng() % g);
    const auto w = diversity_weights(d, g, 0.1);
    double sum = 0.0;
    for (double s : w.softmax_weights) sum += s;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        if (d[i] < d[j]) EXPECT_LE(w.final_weights[i], w.final_weights[j]);
      }
    }
  }
}

TEST(DiversityWeights, BadInput) {
  const std::vector<int> zero{0};
  EXPECT_EQ(category_of([&] { diversity_weights(zero, 4, 0.1); }), ErrorCategory::kArgument);
  const std::vector<int> big{5};
  EXPECT_EQ(category_of([&] { diversity_weights(big, 4, 0.1); }), ErrorCategory::kArgument);
  EXPECT_EQ(category_of([] { diversity_weights({}, 4, 0.1); }), ErrorCategory::kArgument);
}

TEST(GroupAdvantage, HandCases) {
  EXPECT_EQ(group_advantage(Matrix::from_rows({{1.0, 0.0}})), Matrix::from_rows({{1.0, -1.0}}));
  EXPECT_EQ(group_advantage(Matrix::from_rows({{0.1, 0.1, 0.1}})), Matrix(1, 3, 0.0));
  EXPECT_EQ(group_advantage(Matrix::from_rows({{1.0}})), Matrix(1, 1, 0.0));
}

TEST(GroupAdvantage, NormalizedRows) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.3, 2.0);
  for (int t = 0; t < 500; ++t) {
    Matrix r(3, 2 + rng() % 30);
    for (auto& x : r.flat()) x = z(rng);
    const auto a = group_advantage(r);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double mean = 0.0, var = 0.0;
      for (double x : a.row(i)) mean += x;
      mean /= static_cast<double>(a.cols());
      for (double x : a.row(i)) var += (x - mean) * (x - mean);
      var /= static_cast<double>(a.cols());
      EXPECT_NEAR(mean, 0.0, 1e-9);
      EXPECT_NEAR(var, 1.0, 1e-6);
    }
  }
}

TEST(WeightedAdvantage, Scaling) {
  const auto adv = Matrix::from_rows({{1.0, -1.0}, {0.5, 2.0}});
  const std::vector<int> d{5, 5};
  EXPECT_EQ(weighted_advantage(adv, neutral_weights(d, 0.1)), adv);
  DiversityWeights w = neutral_weights(d, 0.1);
  w.final_weights = {0.25, 0.5};
  const auto out = weighted_advantage(adv, w);
  EXPECT_EQ(out, Matrix::from_rows({{0.25, -0.25}, {0.25, 1.0}}));
  w.final_weights = {1.0};
  EXPECT_EQ(category_of([&] { weighted_advantage(adv, w); }), ErrorCategory::kArgument);
}

TEST(WeightedAdvantage, PreservesArgmaxAndSigns) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int t = 0; t < 300; ++t) {
    Matrix adv(4, 7);
    for (auto& x : adv.flat()) x = z(rng);
    DiversityWeights w;
    for (int i = 0; i < 4; ++i) w.final_weights.push_back(u(rng));
    const auto out = weighted_advantage(adv, w);
    for (std::size_t i = 0; i < 4; ++i) {
      const std::span<const double> a = adv.row(i), o = out.row(i);
      EXPECT_EQ(std::max_element(a.begin(), a.end()) - a.begin(), std::max_element(o.begin(), o.end()) - o.begin());
      for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(std::signbit(a[j]), std::signbit(o[j]));
    }
  }
}

TEST(KlEstimate, ClosedForms) {
  EXPECT_EQ(kl_estimate(-1.3, -1.3), 0.0);
  EXPECT_NEAR(kl_estimate(std::log(0.25), std::log(0.5)), 0.306852819, 1e-9);
  EXPECT_NEAR(kl_estimate(std::log(0.25), std::log(0.5), KlEstimator::kK2), 0.5 * std::log(2.0) * std::log(2.0),
              1e-15);
  EXPECT_NEAR(kl_estimate(std::log(0.25), std::log(0.5), KlEstimator::kK1), -std::log(2.0), 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-20.0, 0.0);
  for (int t = 0; t < 10000; ++t) {
    EXPECT_GE(kl_estimate(u(rng), u(rng)), 0.0);
    EXPECT_GE(kl_estimate(u(rng), u(rng), KlEstimator::kK2), 0.0);
  }
}

TEST(GrpoObjective, Clip) {
  const GrpoConfig cfg;
  const std::vector<RolloutTerms> pos{{{2.0}, {}, 1.0}};
  EXPECT_DOUBLE_EQ(grpo_objective(pos, cfg), 1.2);
  const std::vector<RolloutTerms> neg{{{2.0}, {}, -1.0}};
  EXPECT_DOUBLE_EQ(grpo_objective(neg, cfg), -2.0);
  const std::vector<RolloutTerms> low{{{0.5}, {}, -1.0}};
  EXPECT_DOUBLE_EQ(grpo_objective(low, cfg), -0.8);
}

TEST(GrpoObjective, LengthNormalizedMean) {
  const GrpoConfig cfg;
  const std::vector<RolloutTerms> ro{{{1.0, 1.0, 1.0}, {}, 0.6}, {{1.0}, {}, -0.2}};
  EXPECT_DOUBLE_EQ(grpo_objective(ro, cfg), 0.2);
}

TEST(GrpoObjective, OnPolicyIdentityAndBetaMonotonicity) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> ur(0.5, 1.5), uk(0.0, 0.3);
  for (int t = 0; t < 1000; ++t) {
    std::vector<RolloutTerms> ones, random;
    double sum = 0.0;
    for (int i = 0; i < 6; ++i) {
      const double a = z(rng);
      sum += a;
      ones.push_back({std::vector<double>(1 + i, 1.0), {}, a});
      RolloutTerms r{{}, {}, a};
      for (int k = 0; k < 3; ++k) {
        r.ratios.push_back(ur(rng));
        r.kl_terms.push_back(uk(rng));
      }
      random.push_back(r);
    }
    const double mean = sum / 6.0;
    EXPECT_NEAR(grpo_objective(ones, {}), mean, 1e-12);
    double prev = grpo_objective(random, {0.2, 0.0});
    for (double beta : {0.01, 0.1, 1.0}) {
      const double cur = grpo_objective(random, {0.2, beta});
      EXPECT_LE(cur, prev);
      prev = cur;
    }
  }
}

TEST(GrpoObjective, BadInput) {
  const std::vector<RolloutTerms> zero{{{0.0}, {}, 1.0}};
  EXPECT_EQ(category_of([&] { grpo_objective(zero, {}); }), ErrorCategory::kArgument);
  EXPECT_EQ(category_of([] { grpo_objective({}, {}); }), ErrorCategory::kArgument);
}

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "distrittrl/matrix.hpp"
#include "distrittrl/rollout.hpp"

namespace distrittrl {

// Number of distinct canonical answers in the group.
int answer_diversity(const QueryGroup& group);

struct DiversityWeights {
  std::vector<int> raw_diversity;
  std::vector<double> softmax_weights;
  std::vector<double> final_weights;
  double tau = 0.1;
};

// Batch softmax over diversities; queries with D <= tau * G keep their
// softmax weight, all others get 1.
DiversityWeights diversity_weights(std::span<const int> diversities, std::size_t group_size, double tau);

// Weights of exactly 1 for every query (penalty disabled).
DiversityWeights neutral_weights(std::span<const int> diversities, double tau);

// Per row: (R - mean) / population std, or all zeros when std is zero.
Matrix group_advantage(const Matrix& rewards);

Matrix weighted_advantage(const Matrix& adv, const DiversityWeights& weights);

enum class KlEstimator {
  kK3,  // r - log r - 1 with r = p_ref / p_new; nonnegative
  kK2,  // (log r)^2 / 2; nonnegative
  kK1,  // -log r; unbiased but signed
};

double kl_estimate(double logprob_new, double logprob_ref, KlEstimator estimator = KlEstimator::kK3);

struct GrpoConfig {
  double epsilon = 0.2;
  double beta = 0.0;
  KlEstimator kl_estimator = KlEstimator::kK3;
};

// Token-level terms of one rollout. Every token shares `advantage`.
struct RolloutTerms {
  std::vector<double> ratios;
  std::vector<double> kl_terms;  // empty means zero KL
  double advantage = 0.0;
};

// Mean over rollouts of the length-normalized token sum of
// min(r A, clip(r, 1 - eps, 1 + eps) A) - beta * KL.
double grpo_objective(std::span<const RolloutTerms> rollouts, const GrpoConfig& config);

}  // namespace distrittrl

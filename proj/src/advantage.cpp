#include "distrittrl/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "distrittrl/error.hpp"

namespace distrittrl {

int answer_diversity(const QueryGroup& group) {
  std::set<std::string_view> unique;
  for (const auto& r : group.rollouts) unique.insert(r.answer);
  return static_cast<int>(unique.size());
}

DiversityWeights diversity_weights(std::span<const int> diversities, std::size_t group_size, double tau) {
  if (diversities.empty()) fail(ErrorCategory::kArgument, "diversity_weights needs at least one query");
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorCategory::kArgument, "tau must lie in (0, 1)");
  for (int d : diversities) {
    if (d < 1 || static_cast<std::size_t>(d) > group_size) {
      fail(ErrorCategory::kArgument, "diversity " + std::to_string(d) + " outside [1, G]");
    }
  }
  DiversityWeights w;
  w.tau = tau;
  w.raw_diversity.assign(diversities.begin(), diversities.end());
  const int max_d = *std::max_element(diversities.begin(), diversities.end());
  double denom = 0.0;
  w.softmax_weights.reserve(diversities.size());
  for (int d : diversities) {
    w.softmax_weights.push_back(std::exp(static_cast<double>(d - max_d)));
    denom += w.softmax_weights.back();
  }
  for (double& s : w.softmax_weights) s /= denom;

  const double threshold = tau * static_cast<double>(group_size);
  w.final_weights.reserve(diversities.size());
  for (std::size_t i = 0; i < diversities.size(); ++i) {
    w.final_weights.push_back(static_cast<double>(diversities[i]) <= threshold ? w.softmax_weights[i] : 1.0);
  }
  return w;
}

DiversityWeights neutral_weights(std::span<const int> diversities, double tau) {
  DiversityWeights w;
  w.tau = tau;
  w.raw_diversity.assign(diversities.begin(), diversities.end());
  w.softmax_weights.assign(diversities.size(), diversities.empty() ? 0.0 : 1.0 / static_cast<double>(diversities.size()));
  w.final_weights.assign(diversities.size(), 1.0);
  return w;
}

Matrix group_advantage(const Matrix& rewards) {
  Matrix adv(rewards.rows(), rewards.cols());
  const double g = static_cast<double>(rewards.cols());
  for (std::size_t i = 0; i < rewards.rows(); ++i) {
    const auto row = rewards.row(i);
    // Constant rows are zero exactly; the rounded mean could leave a tiny std.
    if (std::all_of(row.begin(), row.end(), [&](double r) { return r == row[0]; })) continue;
    double mean = 0.0;
    for (double r : row) mean += r;
    mean /= g;
    double ss = 0.0;
    for (double r : row) ss += (r - mean) * (r - mean);
    const double sd = std::sqrt(ss / g);
    if (sd == 0.0) continue;
    auto out = adv.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean) / sd;
  }
  return adv;
}

Matrix weighted_advantage(const Matrix& adv, const DiversityWeights& weights) {
  if (weights.final_weights.size() != adv.rows()) {
    fail(ErrorCategory::kArgument, "weighted_advantage: " + std::to_string(weights.final_weights.size()) +
                                       " weights for " + std::to_string(adv.rows()) + " rows");
  }
  Matrix out = adv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (double& v : out.row(i)) v *= weights.final_weights[i];
  }
  return out;
}

double kl_estimate(double logprob_new, double logprob_ref, KlEstimator estimator) {
  const double log_r = logprob_ref - logprob_new;
  switch (estimator) {
    case KlEstimator::kK3:
      // expm1 keeps precision when the policies nearly agree.
      return std::max(0.0, std::expm1(log_r) - log_r);
    case KlEstimator::kK2:
      return 0.5 * log_r * log_r;
    case KlEstimator::kK1:
      return -log_r;
  }
  return 0.0;
}

double grpo_objective(std::span<const RolloutTerms> rollouts, const GrpoConfig& config) {
  if (rollouts.empty()) fail(ErrorCategory::kArgument, "grpo_objective over no rollouts");
  double total = 0.0;
  for (const auto& ro : rollouts) {
    if (ro.ratios.empty()) fail(ErrorCategory::kArgument, "rollout with no tokens");
    if (!ro.kl_terms.empty() && ro.kl_terms.size() != ro.ratios.size()) {
      fail(ErrorCategory::kArgument, "kl_terms length does not match token count");
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < ro.ratios.size(); ++t) {
      const double r = ro.ratios[t];
      if (!(r > 0.0)) fail(ErrorCategory::kArgument, "non-positive probability ratio");
      const double clipped = std::clamp(r, 1.0 - config.epsilon, 1.0 + config.epsilon);
      double term = std::min(r * ro.advantage, clipped * ro.advantage);
      if (!ro.kl_terms.empty()) term -= config.beta * ro.kl_terms[t];
      sum += term;
    }
    total += sum / static_cast<double>(ro.ratios.size());
  }
  return total / static_cast<double>(rollouts.size());
}

}  // namespace distrittrl

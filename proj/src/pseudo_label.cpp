#include "distrittrl/pseudo_label.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include "distrittrl/error.hpp"

namespace distrittrl {

std::string vote(std::span<const VoteBallot> ballots, VoteMethod method) {
  if (ballots.empty()) fail(ErrorCategory::kArgument, "vote over an empty ballot list");
  std::map<std::string, double> tally;
  for (const auto& b : ballots) {
    if (!std::isfinite(b.weight)) fail(ErrorCategory::kArgument, "non-finite ballot weight");
    tally[b.answer] += method == VoteMethod::kMajority ? 1.0 : b.weight;
  }
  // Map order is lexicographic; strict comparison keeps the smallest on ties.
  auto best = tally.begin();
  for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

SampleAssignment assign_samples(std::span<const double> conf, const LabeledGmm2& global_fit) {
  SampleAssignment out;
  if (global_fit.degenerate) {
    out.pos_set.resize(conf.size());
    std::iota(out.pos_set.begin(), out.pos_set.end(), 0);
    out.degenerate = true;
    return out;
  }
  for (std::size_t j = 0; j < conf.size(); ++j) {
    const auto d = component_likelihood(global_fit, conf[j]);
    (d.pos > d.neg ? out.pos_set : out.neg_set).push_back(j);
  }
  return out;
}

namespace {

std::vector<VoteBallot> ballots_for(const QueryGroup& group, std::span<const double> conf,
                                    std::span<const std::size_t> indices, double weight_sign) {
  std::vector<VoteBallot> ballots;
  ballots.reserve(indices.size());
  for (std::size_t j : indices) ballots.push_back({group.rollouts[j].answer, weight_sign * conf[j]});
  return ballots;
}

}  // namespace

PseudoLabelResult estimate_pseudo_label(const QueryGroup& group, std::span<const double> conf,
                                        const LabeledGmm2& global_fit, const PseudoLabelOptions& options) {
  if (conf.size() != group.size()) {
    fail(ErrorCategory::kArgument, "query " + group.query_id + ": confidence length " + std::to_string(conf.size()) +
                                       " does not match group size " + std::to_string(group.size()));
  }
  if (group.size() == 0) fail(ErrorCategory::kArgument, "query " + group.query_id + ": empty group");

  PseudoLabelResult result;
  SampleAssignment split = assign_samples(conf, global_fit);
  result.pos_set = std::move(split.pos_set);
  result.neg_set = std::move(split.neg_set);
  result.degenerate_fit = split.degenerate;

  if (!result.neg_set.empty()) {
    // Low-confidence ballots weigh -C; only the weighted method uses them.
    const auto neg_ballots = ballots_for(group, conf, result.neg_set, -1.0);
    result.neg_answer = vote(neg_ballots, options.method);
    for (std::size_t j : result.pos_set) {
      if (group.rollouts[j].answer != *result.neg_answer) result.filtered_pos_set.push_back(j);
    }
  } else {
    result.filtered_pos_set = result.pos_set;
  }

  if (result.filtered_pos_set.empty()) {
    std::vector<std::size_t> all(group.size());
    std::iota(all.begin(), all.end(), 0);
    result.final_answer = vote(ballots_for(group, conf, all, 1.0), VoteMethod::kMajority);
    result.fallback_used = FallbackKind::kAllMajority;
  } else {
    result.final_answer = vote(ballots_for(group, conf, result.filtered_pos_set, 1.0), options.method);
  }

  result.positive_mask.resize(group.size());
  for (std::size_t j = 0; j < group.size(); ++j) {
    result.positive_mask[j] = group.rollouts[j].answer == result.final_answer;
  }
  return result;
}

PseudoLabelResult estimate_pseudo_label(const QueryGroup& group, std::span<const double> conf,
                                        const AggregatedConfidences& agg, const PseudoLabelOptions& options) {
  return estimate_pseudo_label(group, conf, fit_labeled(agg.values, options.em), options);
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kSC: return "sc";
    case Strategy::kWSC: return "wsc";
    case Strategy::kBoN: return "bon";
    case Strategy::kMoB: return "mob";
    case Strategy::kDeepConf: return "deepconf";
    case Strategy::kDistriVoting: return "distrivoting";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == lower) return s;
  }
  fail(ErrorCategory::kArgument, "unknown strategy '" + std::string(name) + "'");
}

namespace {

// Indices sorted by confidence descending, index ascending on ties.
std::vector<std::size_t> by_confidence(std::span<const double> conf) {
  std::vector<std::size_t> order(conf.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return conf[a] > conf[b]; });
  return order;
}

}  // namespace

std::string baseline_vote(const QueryGroup& group, std::span<const double> conf, Strategy strategy,
                          const BaselineOptions& options) {
  const std::size_t n = group.size();
  if (n == 0) fail(ErrorCategory::kArgument, "query " + group.query_id + ": empty group");
  if (conf.size() != n) fail(ErrorCategory::kArgument, "query " + group.query_id + ": confidence length mismatch");

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  switch (strategy) {
    case Strategy::kSC:
      return vote(ballots_for(group, conf, all, 1.0), VoteMethod::kMajority);
    case Strategy::kWSC:
      return vote(ballots_for(group, conf, all, 1.0), VoteMethod::kWeighted);
    case Strategy::kBoN:
      return group.rollouts[by_confidence(conf).front()].answer;
    case Strategy::kMoB: {
      auto order = by_confidence(conf);
      const auto keep = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::ceil(options.mob_keep_fraction * static_cast<double>(n))), 1, n);
      order.resize(keep);
      return vote(ballots_for(group, conf, order, 1.0), VoteMethod::kMajority);
    }
    case Strategy::kDeepConf: {
      auto order = by_confidence(conf);
      const auto drop = static_cast<std::size_t>(std::floor(options.deepconf_drop_fraction * static_cast<double>(n)));
      order.resize(std::max<std::size_t>(n - std::min(drop, n), 1));
      return vote(ballots_for(group, conf, order, 1.0), VoteMethod::kWeighted);
    }
    case Strategy::kDistriVoting:
      return estimate_pseudo_label(group, conf, fit_labeled(conf, options.distri.em), options.distri).final_answer;
  }
  fail(ErrorCategory::kArgument, "unhandled strategy");
}

double majority_ratio(const QueryGroup& group, std::string_view label) {
  if (group.size() == 0) fail(ErrorCategory::kArgument, "majority_ratio of an empty group");
  const auto hits = std::count_if(group.rollouts.begin(), group.rollouts.end(),
                                  [&](const RolloutRecord& r) { return r.answer == label; });
  return static_cast<double>(hits) / static_cast<double>(group.size());
}

std::string majority_answer(const QueryGroup& group) {
  std::vector<VoteBallot> ballots;
  ballots.reserve(group.size());
  for (const auto& r : group.rollouts) ballots.push_back({r.answer, 1.0});
  return vote(ballots, VoteMethod::kMajority);
}

}  // namespace distrittrl

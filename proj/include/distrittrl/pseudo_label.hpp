#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "distrittrl/distribution_store.hpp"
#include "distrittrl/gmm.hpp"
#include "distrittrl/rollout.hpp"

namespace distrittrl {

struct VoteBallot {
  std::string answer;
  double weight = 1.0;
};

enum class VoteMethod { kMajority, kWeighted };

// Highest count (majority) or highest summed weight (weighted). Ties go to
// the lexicographically smallest answer.
std::string vote(std::span<const VoteBallot> ballots, VoteMethod method);

struct SampleAssignment {
  std::vector<std::size_t> pos_set;
  std::vector<std::size_t> neg_set;
  bool degenerate = false;  // degenerate fit, everything placed in pos_set
};

// j goes to pos_set iff the weighted positive density strictly exceeds the
// weighted negative density at conf[j].
SampleAssignment assign_samples(std::span<const double> conf, const LabeledGmm2& global_fit);

enum class FallbackKind { kNone, kAllMajority };

struct PseudoLabelResult {
  std::string final_answer;
  std::vector<std::size_t> pos_set;
  std::vector<std::size_t> neg_set;
  std::optional<std::string> neg_answer;  // unset when neg_set is empty
  std::vector<std::size_t> filtered_pos_set;
  std::vector<bool> positive_mask;
  FallbackKind fallback_used = FallbackKind::kNone;
  bool degenerate_fit = false;
};

struct PseudoLabelOptions {
  VoteMethod method = VoteMethod::kMajority;
  EmConfig em;
};

// Fits the global mixture on the aggregated confidences, then runs the
// reject-then-vote cascade on this group.
PseudoLabelResult estimate_pseudo_label(const QueryGroup& group, std::span<const double> conf,
                                        const AggregatedConfidences& agg,
                                        const PseudoLabelOptions& options = {});

// Same cascade with a global fit computed by the caller (shared by a batch).
PseudoLabelResult estimate_pseudo_label(const QueryGroup& group, std::span<const double> conf,
                                        const LabeledGmm2& global_fit,
                                        const PseudoLabelOptions& options = {});

enum class Strategy { kSC, kWSC, kBoN, kMoB, kDeepConf, kDistriVoting };

inline constexpr Strategy kAllStrategies[] = {Strategy::kSC,      Strategy::kWSC,
                                                Strategy::kBoN,     Strategy::kMoB,
                                                Strategy::kDeepConf, Strategy::kDistriVoting};

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view name);  // case-insensitive; kArgument on unknown

struct BaselineOptions {
  double mob_keep_fraction = 0.5;       // MoB votes over this top share by confidence
  double deepconf_drop_fraction = 0.1;  // DeepConf discards this lowest share
  PseudoLabelOptions distri;
};

std::string baseline_vote(const QueryGroup& group, std::span<const double> conf, Strategy strategy,
                          const BaselineOptions& options = {});

double majority_ratio(const QueryGroup& group, std::string_view label);

// Answer with the highest count (ties lexicographic).
std::string majority_answer(const QueryGroup& group);

}  // namespace distrittrl

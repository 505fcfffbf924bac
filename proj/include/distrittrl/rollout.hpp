#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace distrittrl {

// One position's top-k log-probabilities, sorted descending.
using TokenLogprobs = std::vector<double>;

struct RolloutRecord {
  std::string query_id;
  std::int64_t step = 0;
  std::int64_t sample_index = 0;
  std::string answer;  // canonical form, may be empty (extraction failure)
  std::vector<TokenLogprobs> token_logprobs;
  std::optional<bool> correct;

  bool operator==(const RolloutRecord&) const = default;
};

struct QueryGroup {
  std::string query_id;
  std::int64_t step = 0;
  std::vector<RolloutRecord> rollouts;  // ordered by sample_index

  std::size_t size() const noexcept { return rollouts.size(); }
  bool operator==(const QueryGroup&) const = default;
};

struct StepBatch {
  std::int64_t step = 0;
  std::vector<QueryGroup> groups;  // ordered by query_id

  std::size_t group_size() const noexcept { return groups.empty() ? 0 : groups.front().size(); }
  bool operator==(const StepBatch&) const = default;
};

// Trims ASCII whitespace and lowercases. Two answers are equal iff their
// canonical forms are byte-equal.
std::string canonicalize_answer(std::string_view raw);

// Throws kValidation if the record breaks a RolloutRecord invariant.
void validate_record(const RolloutRecord& record);

// Reads a line-delimited corpus (one JSON object per line; blank lines are
// skipped). Answers are canonicalized on read.
std::vector<StepBatch> parse_rollout_corpus(std::istream& source);
std::vector<StepBatch> parse_rollout_corpus(std::string_view text);
std::vector<StepBatch> load_rollout_corpus(const std::string& path);

// Inverse of parse_rollout_corpus for already-canonical corpora.
void write_rollout_corpus(std::ostream& sink, std::span<const StepBatch> batches);
std::string serialize_record(const RolloutRecord& record);

// Uniform seeded subset without replacement. The result keeps the original
// sample_index order and its indices are re-ranked to [0, target).
QueryGroup downsample_rollouts(const QueryGroup& group, std::size_t target, std::uint64_t seed);

// Positions in group.rollouts chosen by downsample_rollouts, in output order.
std::vector<std::size_t> downsample_indices(const QueryGroup& group, std::size_t target, std::uint64_t seed);

// Checks the QueryGroup invariants; throws kStructural.
void validate_group(const QueryGroup& group);

}  // namespace distrittrl

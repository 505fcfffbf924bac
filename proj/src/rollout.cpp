#include "distrittrl/rollout.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "distrittrl/error.hpp"
#include "distrittrl/random.hpp"

namespace distrittrl {

using nlohmann::json;

std::string canonicalize_answer(std::string_view raw) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end && is_space(raw[begin])) ++begin;
  while (end > begin && is_space(raw[end - 1])) --end;
  std::string out(raw.substr(begin, end - begin));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void validate_record(const RolloutRecord& record) {
  const std::string where = "record (" + record.query_id + ", step " + std::to_string(record.step) +
                            ", sample " + std::to_string(record.sample_index) + ")";
  if (record.step < 0) fail(ErrorCategory::kValidation, where + ": negative step");
  if (record.sample_index < 0) fail(ErrorCategory::kValidation, where + ": negative sample_index");
  if (record.token_logprobs.empty()) fail(ErrorCategory::kValidation, where + ": empty token_logprobs");
  for (std::size_t pos = 0; pos < record.token_logprobs.size(); ++pos) {
    const auto& top = record.token_logprobs[pos];
    if (top.empty()) {
      fail(ErrorCategory::kValidation, where + ": position " + std::to_string(pos) + " has no log-probabilities");
    }
    for (std::size_t j = 0; j < top.size(); ++j) {
      if (!std::isfinite(top[j])) {
        fail(ErrorCategory::kValidation, where + ": non-finite log-probability at position " + std::to_string(pos));
      }
      if (top[j] > 0.0) {
        fail(ErrorCategory::kValidation, where + ": positive log-probability at position " + std::to_string(pos));
      }
      if (j > 0 && top[j] > top[j - 1]) {
        fail(ErrorCategory::kValidation, where + ": top-k list not descending at position " + std::to_string(pos));
      }
    }
  }
}

void validate_group(const QueryGroup& group) {
  for (std::size_t j = 0; j < group.rollouts.size(); ++j) {
    const auto& r = group.rollouts[j];
    if (r.query_id != group.query_id || r.step != group.step) {
      fail(ErrorCategory::kStructural, "group " + group.query_id + ": rollout from another query or step");
    }
    if (r.sample_index != static_cast<std::int64_t>(j)) {
      fail(ErrorCategory::kStructural, "group " + group.query_id + " at step " + std::to_string(group.step) +
                                           ": sample_index values must be distinct and cover [0, G)");
    }
  }
}

namespace {

RolloutRecord record_from_json(const json& obj, std::size_t line_no) {
  auto parse_error = [line_no](const std::string& msg) {
    fail(ErrorCategory::kParse, "line " + std::to_string(line_no) + ": " + msg);
  };
  if (!obj.is_object()) parse_error("expected a JSON object");
  for (const char* key : {"query_id", "step", "sample_index", "answer", "token_logprobs"}) {
    if (!obj.contains(key)) parse_error(std::string("missing key '") + key + "'");
  }
  RolloutRecord rec;
  const auto& qid = obj.at("query_id");
  if (!qid.is_string()) parse_error("query_id must be a string");
  rec.query_id = qid.get<std::string>();

  const auto& step = obj.at("step");
  if (!step.is_number_integer()) parse_error("step must be an integer");
  rec.step = step.get<std::int64_t>();

  const auto& idx = obj.at("sample_index");
  if (!idx.is_number_integer()) parse_error("sample_index must be an integer");
  rec.sample_index = idx.get<std::int64_t>();

  const auto& ans = obj.at("answer");
  if (!ans.is_string()) parse_error("answer must be a string");
  rec.answer = canonicalize_answer(ans.get<std::string>());

  const auto& toks = obj.at("token_logprobs");
  if (!toks.is_array()) parse_error("token_logprobs must be an array");
  rec.token_logprobs.reserve(toks.size());
  for (const auto& pos : toks) {
    if (!pos.is_array()) parse_error("token_logprobs entries must be arrays");
    TokenLogprobs top;
    top.reserve(pos.size());
    for (const auto& v : pos) {
      if (!v.is_number()) parse_error("log-probabilities must be numbers");
      top.push_back(v.get<double>());
    }
    rec.token_logprobs.push_back(std::move(top));
  }

  if (auto it = obj.find("correct"); it != obj.end() && !it->is_null()) {
    if (!it->is_boolean()) parse_error("correct must be a boolean");
    rec.correct = it->get<bool>();
  }

  try {
    validate_record(rec);
  } catch (const Error& e) {
    fail(ErrorCategory::kValidation, "line " + std::to_string(line_no) + ": " + e.what());
  }
  return rec;
}

}  // namespace

std::vector<StepBatch> parse_rollout_corpus(std::istream& source) {
  // (step, query_id) -> records; std::map gives the required ordering.
  std::map<std::pair<std::int64_t, std::string>, std::vector<RolloutRecord>> grouped;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; })) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorCategory::kParse, "line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    RolloutRecord rec = record_from_json(obj, line_no);
    grouped[{rec.step, rec.query_id}].push_back(std::move(rec));
  }
  if (source.bad()) fail(ErrorCategory::kIo, "read failure after line " + std::to_string(line_no));

  std::vector<StepBatch> batches;
  for (auto& [key, records] : grouped) {
    std::sort(records.begin(), records.end(),
              [](const RolloutRecord& a, const RolloutRecord& b) { return a.sample_index < b.sample_index; });
    QueryGroup group{key.second, key.first, std::move(records)};
    validate_group(group);
    if (batches.empty() || batches.back().step != key.first) batches.push_back(StepBatch{key.first, {}});
    StepBatch& batch = batches.back();
    if (!batch.groups.empty() && batch.groups.front().size() != group.size()) {
      fail(ErrorCategory::kStructural, "step " + std::to_string(batch.step) + ": query " + group.query_id + " has " +
                                           std::to_string(group.size()) + " rollouts, expected " +
                                           std::to_string(batch.groups.front().size()));
    }
    batch.groups.push_back(std::move(group));
  }
  return batches;
}

std::vector<StepBatch> parse_rollout_corpus(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_rollout_corpus(in);
}

std::vector<StepBatch> load_rollout_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::kIo, "cannot open corpus '" + path + "'");
  return parse_rollout_corpus(in);
}

std::string serialize_record(const RolloutRecord& record) {
  json obj;
  obj["query_id"] = record.query_id;
  obj["step"] = record.step;
  obj["sample_index"] = record.sample_index;
  obj["answer"] = record.answer;
  obj["token_logprobs"] = record.token_logprobs;
  if (record.correct) obj["correct"] = *record.correct;
  return obj.dump();
}

void write_rollout_corpus(std::ostream& sink, std::span<const StepBatch> batches) {
  for (const auto& batch : batches) {
    for (const auto& group : batch.groups) {
      for (const auto& rec : group.rollouts) sink << serialize_record(rec) << '\n';
    }
  }
  if (!sink) fail(ErrorCategory::kIo, "failed writing rollout corpus");
}

std::vector<std::size_t> downsample_indices(const QueryGroup& group, std::size_t target, std::uint64_t seed) {
  const std::size_t n = group.size();
  if (target < 1 || target > n) {
    fail(ErrorCategory::kArgument, "downsample target " + std::to_string(target) + " outside [1, " +
                                       std::to_string(n) + "] for query " + group.query_id);
  }
  auto by_index = [&](std::size_t a, std::size_t b) {
    return group.rollouts[a].sample_index < group.rollouts[b].sample_index;
  };
  // Canonical order first so the draw depends only on the seed and the set.
  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), 0);
  std::stable_sort(pick.begin(), pick.end(), by_index);

  // Partial Fisher-Yates.
  Rng rng(seed);
  for (std::size_t i = 0; i < target; ++i) {
    std::uniform_int_distribution<std::size_t> dist(i, n - 1);
    std::swap(pick[i], pick[dist(rng)]);
  }
  pick.resize(target);
  std::sort(pick.begin(), pick.end(), by_index);
  return pick;
}

QueryGroup downsample_rollouts(const QueryGroup& group, std::size_t target, std::uint64_t seed) {
  const auto pick = downsample_indices(group, target, seed);
  QueryGroup out{group.query_id, group.step, {}};
  out.rollouts.reserve(target);
  for (std::size_t i = 0; i < target; ++i) {
    RolloutRecord rec = group.rollouts[pick[i]];
    rec.sample_index = static_cast<std::int64_t>(i);
    out.rollouts.push_back(std::move(rec));
  }
  return out;
}

}  // namespace distrittrl

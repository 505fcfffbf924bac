#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "distrittrl/error.hpp"
#include "distrittrl/rollout.hpp"

namespace testutil {

inline distrittrl::RolloutRecord record(std::string qid, std::int64_t step, std::int64_t idx, std::string answer,
                                        std::vector<std::vector<double>> lps = {{-1.0}}) {
  distrittrl::RolloutRecord r;
  r.query_id = std::move(qid);
  r.step = step;
  r.sample_index = idx;
  r.answer = std::move(answer);
  r.token_logprobs = std::move(lps);
  return r;
}

// Group whose rollouts carry the given answers, single position each.
inline distrittrl::QueryGroup group_of(const std::vector<std::string>& answers, std::string qid = "q",
                                       std::int64_t step = 0) {
  distrittrl::QueryGroup g{qid, step, {}};
  for (std::size_t j = 0; j < answers.size(); ++j) {
    g.rollouts.push_back(record(qid, step, static_cast<std::int64_t>(j), answers[j]));
  }
  return g;
}

inline distrittrl::ErrorCategory category_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const distrittrl::Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "expected a distrittrl::Error";
  return distrittrl::ErrorCategory::kState;
}

}  // namespace testutil

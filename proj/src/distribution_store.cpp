#include "distrittrl/distribution_store.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "distrittrl/error.hpp"

namespace distrittrl {

using nlohmann::json;

double shift_offset(const LabeledGmm2& fit_s, const LabeledGmm2& fit_k) { return fit_k.midpoint() - fit_s.midpoint(); }

Matrix correct_confidences(const Matrix& conf_s, double delta) {
  if (!std::isfinite(delta)) fail(ErrorCategory::kArgument, "shift offset must be finite");
  Matrix out = conf_s;
  for (double& v : out.flat()) v += delta;
  return out;
}

ConfidenceStore::ConfidenceStore(StoreConfig config) : config_(std::move(config)) {
  if (config_.max_retained_steps && *config_.max_retained_steps == 0) {
    fail(ErrorCategory::kArgument, "max_retained_steps must be positive");
  }
}

void ConfidenceStore::record_step(std::int64_t step, Matrix conf) {
  if (!entries_.empty() && step <= entries_.back().step) {
    fail(ErrorCategory::kState, "step " + std::to_string(step) + " recorded after step " +
                                    std::to_string(entries_.back().step));
  }
  if (conf.empty()) fail(ErrorCategory::kArgument, "step " + std::to_string(step) + ": empty confidence matrix");
  LabeledGmm2 fit = fit_labeled(conf.flat(), config_.em);
  ++fit_count_;
  entries_.push_back(StepEntry{step, std::move(conf), fit});
  if (config_.max_retained_steps) {
    while (entries_.size() > *config_.max_retained_steps) entries_.pop_front();
  }
}

bool ConfidenceStore::contains(std::int64_t step) const {
  return std::any_of(entries_.begin(), entries_.end(), [step](const StepEntry& e) { return e.step == step; });
}

const StepEntry& ConfidenceStore::entry(std::int64_t step) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), step,
                             [](const StepEntry& e, std::int64_t s) { return e.step < s; });
  if (it == entries_.end() || it->step != step) {
    fail(ErrorCategory::kState, "step " + std::to_string(step) + " is not in the store");
  }
  return *it;
}

AggregatedConfidences ConfidenceStore::aggregate(std::int64_t k) const {
  const StepEntry& current = entry(k);
  AggregatedConfidences agg;
  agg.step = k;
  std::size_t total = current.confidences.size();
  for (const auto& e : entries_) {
    if (e.step < k) total += e.confidences.size();
  }
  agg.values.reserve(total);
  agg.provenance.reserve(total);

  const auto raw = current.confidences.flat();
  agg.values.insert(agg.values.end(), raw.begin(), raw.end());
  agg.provenance.insert(agg.provenance.end(), raw.size(), k);
  for (const auto& e : entries_) {
    if (e.step >= k) break;
    const double delta = shift_offset(e.fit, current.fit);
    for (double v : e.confidences.flat()) agg.values.push_back(v + delta);
    agg.provenance.insert(agg.provenance.end(), e.confidences.size(), e.step);
  }
  return agg;
}

namespace {

json component_to_json(const GaussianComponent& c) { return {{"mean", c.mean}, {"var", c.var}, {"weight", c.weight}}; }

GaussianComponent component_from_json(const json& j) {
  return {j.at("mean").get<double>(), j.at("var").get<double>(), j.at("weight").get<double>()};
}

}  // namespace

void ConfidenceStore::save(std::ostream& sink) const {
  json doc;
  doc["format"] = "distrittrl-confidence-store";
  doc["version"] = 1;
  doc["em"] = {{"tol", config_.em.tol}, {"max_iter", config_.em.max_iter}};
  doc["max_retained_steps"] = config_.max_retained_steps ? json(*config_.max_retained_steps) : json(nullptr);
  doc["fit_count"] = fit_count_;
  json steps = json::array();
  for (const auto& e : entries_) {
    json s;
    s["step"] = e.step;
    s["rows"] = e.confidences.rows();
    s["cols"] = e.confidences.cols();
    s["values"] = std::vector<double>(e.confidences.flat().begin(), e.confidences.flat().end());
    s["fit"] = {{"pos", component_to_json(e.fit.pos)},
                {"neg", component_to_json(e.fit.neg)},
                {"degenerate", e.fit.degenerate}};
    steps.push_back(std::move(s));
  }
  doc["steps"] = std::move(steps);
  sink << doc.dump() << '\n';
  if (!sink) fail(ErrorCategory::kIo, "failed writing store snapshot");
}

ConfidenceStore ConfidenceStore::load(std::istream& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    fail(ErrorCategory::kParse, std::string("store snapshot: ") + e.what());
  }
  try {
    if (doc.at("format") != "distrittrl-confidence-store" || doc.at("version") != 1) {
      fail(ErrorCategory::kParse, "store snapshot: unsupported format or version");
    }
    StoreConfig config;
    config.em.tol = doc.at("em").at("tol").get<double>();
    config.em.max_iter = doc.at("em").at("max_iter").get<int>();
    if (!doc.at("max_retained_steps").is_null()) {
      config.max_retained_steps = doc.at("max_retained_steps").get<std::size_t>();
    }
    ConfidenceStore store(config);
    for (const auto& s : doc.at("steps")) {
      const auto rows = s.at("rows").get<std::size_t>();
      const auto cols = s.at("cols").get<std::size_t>();
      const auto values = s.at("values").get<std::vector<double>>();
      if (values.size() != rows * cols) fail(ErrorCategory::kParse, "store snapshot: matrix size mismatch");
      Matrix m(rows, cols);
      std::copy(values.begin(), values.end(), m.flat().begin());
      const auto& f = s.at("fit");
      LabeledGmm2 fit{component_from_json(f.at("pos")), component_from_json(f.at("neg")),
                      f.at("degenerate").get<bool>()};
      const auto step = s.at("step").get<std::int64_t>();
      if (!store.entries_.empty() && step <= store.entries_.back().step) {
        fail(ErrorCategory::kParse, "store snapshot: steps not strictly increasing");
      }
      store.entries_.push_back(StepEntry{step, std::move(m), fit});
    }
    store.fit_count_ = doc.at("fit_count").get<std::size_t>();
    return store;
  } catch (const json::exception& e) {
    fail(ErrorCategory::kParse, std::string("store snapshot: ") + e.what());
  }
}

}  // namespace distrittrl

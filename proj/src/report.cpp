#include "distrittrl/report.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "distrittrl/error.hpp"

namespace distrittrl {

using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

const SweepCell& SweepTable::at(Strategy strategy, std::size_t budget) const {
  for (const auto& c : cells) {
    if (c.strategy == strategy && c.budget == budget) return c;
  }
  fail(ErrorCategory::kArgument, "no sweep cell for " + std::string(to_string(strategy)) + " at budget " +
                                     std::to_string(budget));
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  fail(ErrorCategory::kArgument, "format must be csv or json, got '" + std::string(name) + "'");
}

void emit_report(const SweepTable& results, ReportFormat format, std::ostream& sink) {
  if (results.cells.empty()) fail(ErrorCategory::kArgument, "empty report");
  if (format == ReportFormat::kCsv) {
    sink << "strategy,budget,mean,stderr,n\n";
    for (const auto& c : results.cells) {
      sink << to_string(c.strategy) << ',' << c.budget << ',' << format_double(c.mean) << ','
           << format_double(c.std_error) << ',' << c.n << '\n';
    }
  } else {
    // Hand-written so the key order is fixed.
    sink << "[\n";
    for (std::size_t i = 0; i < results.cells.size(); ++i) {
      const auto& c = results.cells[i];
      sink << "  {\"strategy\": \"" << to_string(c.strategy) << "\", \"budget\": " << c.budget
           << ", \"mean\": " << format_double(c.mean) << ", \"stderr\": " << format_double(c.std_error)
           << ", \"n\": " << c.n << '}' << (i + 1 < results.cells.size() ? ",\n" : "\n");
    }
    sink << "]\n";
  }
  sink.flush();
  if (!sink) fail(ErrorCategory::kIo, "failed writing report");
}

namespace {

double parse_number(const std::string& field, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    fail(ErrorCategory::kParse, "report line " + std::to_string(line_no) + ": bad number '" + field + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& field, std::size_t line_no) {
  std::size_t v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    fail(ErrorCategory::kParse, "report line " + std::to_string(line_no) + ": bad integer '" + field + "'");
  }
  return v;
}

}  // namespace

SweepTable parse_report(std::istream& source, ReportFormat format) {
  SweepTable table;
  if (format == ReportFormat::kCsv) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(source, line) || line != "strategy,budget,mean,stderr,n") {
      fail(ErrorCategory::kParse, "report: missing or unexpected CSV header");
    }
    ++line_no;
    while (std::getline(source, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
      if (fields.size() != 5) fail(ErrorCategory::kParse, "report line " + std::to_string(line_no) + ": expected 5 fields");
      table.cells.push_back({parse_strategy(fields[0]), parse_count(fields[1], line_no), parse_number(fields[2], line_no),
                             parse_number(fields[3], line_no), parse_count(fields[4], line_no)});
    }
  } else {
    try {
      const json doc = json::parse(source);
      for (const auto& c : doc) {
        table.cells.push_back({parse_strategy(c.at("strategy").get<std::string>()), c.at("budget").get<std::size_t>(),
                               c.at("mean").get<double>(), c.at("stderr").get<double>(), c.at("n").get<std::size_t>()});
      }
    } catch (const json::exception& e) {
      fail(ErrorCategory::kParse, std::string("report: ") + e.what());
    }
  }
  return table;
}

}  // namespace distrittrl

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "distrittrl/pseudo_label.hpp"

namespace distrittrl {

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

struct SweepCell {
  Strategy strategy = Strategy::kSC;
  std::size_t budget = 0;
  double mean = 0.0;       // accuracy in percent
  double std_error = 0.0;  // sample std of per-repeat means / sqrt(repeats)
  std::size_t n = 0;       // scored (repeat, query) pairs

  bool operator==(const SweepCell&) const = default;
};

struct SweepTable {
  std::vector<SweepCell> cells;  // strategy-major, budgets ascending

  const SweepCell& at(Strategy strategy, std::size_t budget) const;
  bool operator==(const SweepTable&) const = default;
};

enum class ReportFormat { kCsv, kJson };

ReportFormat parse_report_format(std::string_view name);

// Columns: strategy, budget, mean, stderr, n.
void emit_report(const SweepTable& results, ReportFormat format, std::ostream& sink);
SweepTable parse_report(std::istream& source, ReportFormat format);

}  // namespace distrittrl

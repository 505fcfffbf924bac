#include "distrittrl/matrix.hpp"

#include <algorithm>

#include "distrittrl/error.hpp"

namespace distrittrl {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) fail(ErrorCategory::kArgument, "ragged rows in Matrix::from_rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

}  // namespace distrittrl

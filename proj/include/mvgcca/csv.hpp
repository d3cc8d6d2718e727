#pragma once

#include "mvgcca/matrix.hpp"

#include <string>
#include <vector>

namespace mvgcca {

/// Fixed-point formatting used for result tables.
std::string format_fixed(double value, int decimals = 6);
/// Shortest form that reads back to the same double.
std::string format_exact(double value);

/// Header "<prefix>0,<prefix>1,..." followed by one row per sample.
void write_matrix_csv(const std::string& path, const Matrix& m, const std::string& prefix);
/// Reads a numeric CSV with a single header row.
Matrix read_matrix_csv(const std::string& path);

void write_labels_csv(const std::string& path, const Labels& labels);
Labels read_labels_csv(const std::string& path);

/// Splits one CSV line on commas (no quoting support; our files never quote).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace mvgcca

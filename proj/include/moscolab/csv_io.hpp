#pragma once

#include <string>
#include <vector>

namespace moscolab {

/// Shortest-round-trip decimal rendering of a double ("%.17g", '.' radix).
std::string format_double(double v);

/// Header-free N x N matrix, comma separated, '.' decimals.
std::vector<std::vector<double>> read_matrix_csv(const std::string& path);
/// Single column of doubles.
std::vector<double> read_column_csv(const std::string& path);

std::string matrix_to_csv(const std::vector<std::vector<double>>& rows);
std::string column_to_csv(const std::vector<double>& values);

/// Writes via a temp file in the same directory plus rename, so readers never
/// observe a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

}  // namespace moscolab

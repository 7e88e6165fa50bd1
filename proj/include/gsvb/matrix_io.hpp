#pragma once

#include <filesystem>
#include <string>

#include "gsvb/graph_model.hpp"

namespace gsvb {

/// Dense matrix CSV: a header line "# rows=R cols=C" followed by R
/// comma-separated rows of C values, each printed with 17 significant
/// digits so that reading back is exact.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Shortest decimal form that round-trips ("%.17g").
std::string format_double(double x);

}  // namespace gsvb

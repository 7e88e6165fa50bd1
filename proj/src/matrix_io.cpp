#include "gsvb/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gsvb/error.hpp"

namespace gsvb {

std::string format_double(double x) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << "# rows=" << m.rows() << " cols=" << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  long rows = -1, cols = -1;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# rows=%ld cols=%ld", &rows, &cols) != 2 || rows < 0 ||
      cols < 0)
    fail(ErrorCode::ParseError, path.string() + ": missing '# rows=R cols=C' header");

  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      fail(ErrorCode::ParseError, path.string() + ": expected " + std::to_string(rows) + " rows");
    std::stringstream ss(line);
    std::string cell;
    for (long j = 0; j < cols; ++j) {
      if (!std::getline(ss, cell, ','))
        fail(ErrorCode::ParseError, path.string() + ": row " + std::to_string(i + 1) +
                                        " has fewer than " + std::to_string(cols) + " columns");
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        fail(ErrorCode::ParseError, path.string() + ": row " + std::to_string(i + 1) +
                                        ", column " + std::to_string(j + 1) + ": bad number '" +
                                        cell + "'");
      m(i, j) = v;
    }
  }
  return m;
}

}  // namespace gsvb

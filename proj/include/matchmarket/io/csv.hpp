#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "matchmarket/error.hpp"
#include "matchmarket/matrix.hpp"

namespace matchmarket::io {

/// Significant digits for report CSVs. Instance files use round-trip precision.
inline constexpr int kReportDigits = 9;
inline constexpr int kRoundTripDigits = 17;

inline std::string format_double(double v, int digits = kReportDigits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// Row-oriented CSV writer; the file is created on construction.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
            int digits = kReportDigits)
      : out_(path, std::ios::binary), digits_(digits) {
    if (!out_) throw Error(ErrorCode::InvalidParameter, "cannot write " + path.string());
    if (!header.empty()) write_fields(header);
  }

  CsvWriter& cell(const std::string& s) {
    row_.push_back(s);
    return *this;
  }
  CsvWriter& cell(double v) { return cell(format_double(v, digits_)); }
  template <class Int>
    requires std::is_integral_v<Int>
  CsvWriter& cell(Int v) {
    return cell(std::to_string(v));
  }
  void end_row() {
    write_fields(row_);
    row_.clear();
  }

 private:
  void write_fields(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) out_ << ',';
      out_ << fields[k];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  int digits_;
  std::vector<std::string> row_;
};

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                             int digits = kReportDigits) {
  CsvWriter w(path, {}, digits);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) w.cell(m(i, j));
    w.end_row();
  }
}

inline void write_vector_csv(const std::filesystem::path& path, const std::string& name,
                             const std::vector<double>& v) {
  CsvWriter w(path, {"index", name});
  for (std::size_t i = 0; i < v.size(); ++i) {
    w.cell(i).cell(v[i]);
    w.end_row();
  }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Parses a numeric CSV (no header). Blank lines are skipped, rows must have
/// equal width. Errors carry "path:line" diagnostics.
inline Matrix parse_matrix_csv(std::istream& in, const std::string& source = "<input>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = detail::trim(line);
    if (body.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    std::size_t field = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      const std::string_view tok =
          detail::trim(body.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start));
      ++field;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw Error(ErrorCode::Malformed, source + ":" + std::to_string(lineno) + ": field " +
                                              std::to_string(field) + " is not a number: '" +
                                              std::string(tok) + "'");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::Malformed, source + ":" + std::to_string(lineno) + ": expected " +
                                            std::to_string(rows.front().size()) + " fields, got " +
                                            std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::Malformed, source + ": no data rows");
  return Matrix::from_rows(rows);
}

inline Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Malformed, "cannot open " + path.string());
  return parse_matrix_csv(in, path.string());
}

}  // namespace matchmarket::io

#include "ldm/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ldm/errors.hpp"

namespace ldm {
namespace {

std::string loc(const std::filesystem::path& path, std::size_t row, std::size_t col) {
  std::ostringstream os;
  os << path.string() << ": row " << row << ", column " << col;
  return os.str();
}

bool parse_double(std::string_view token, double& out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  if (begin == end) return false;
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

Eigen::MatrixXd load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_cols = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    std::vector<double> values(fields.size());
    bool all_numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], values[c])) {
        all_numeric = false;
        bad_col = c + 1;
        break;
      }
    }
    if (!all_numeric) {
      // A single non-numeric first line is treated as a header.
      if (first_data_line) {
        first_data_line = false;
        continue;
      }
      throw ParseError("unparsable value at " + loc(path, line_no, bad_col));
    }
    first_data_line = false;
    if (expected_cols == 0) {
      expected_cols = values.size();
    } else if (values.size() != expected_cols) {
      std::ostringstream os;
      os << path.string() << ": row " << line_no << " has " << values.size()
         << " fields, expected " << expected_cols;
      throw ParseError(os.str());
    }
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (!std::isfinite(values[c]))
        throw ParseError("non-finite entry at " + loc(path, line_no, c + 1));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data rows");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(expected_cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

void save_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      // 17 significant digits: doubles survive the round trip bitwise.
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      out << buf;
      if (c + 1 < m.cols()) out << ',';
    }
    out << '\n';
  }
  if (!out) throw ParseError("write failure on " + path.string());
}

Eigen::MatrixXd load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw ParseError(path.string() + ": truncated header");
  const auto n = static_cast<Eigen::Index>(dims[0]);
  const auto p = static_cast<Eigen::Index>(dims[1]);
  if (n < 1 || p < 1) throw ParseError(path.string() + ": invalid dimensions");
  Eigen::MatrixXd m(n, p);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double)) * n * p);
  if (!in) throw ParseError(path.string() + ": truncated payload");
  for (Eigen::Index c = 0; c < p; ++c)
    for (Eigen::Index r = 0; r < n; ++r)
      if (!std::isfinite(m(r, c))) {
        std::ostringstream os;
        os << path.string() << ": non-finite entry at row " << (r + 1) << ", column "
           << (c + 1);
        throw ParseError(os.str());
      }
  return m;
}

void save_binary(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()),
                                 static_cast<std::uint64_t>(m.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
  if (!out) throw ParseError("write failure on " + path.string());
}

}  // namespace

MatrixFormat format_from_extension(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return MatrixFormat::Csv;
  if (ext == ".bin") return MatrixFormat::RawBinary;
  throw ConfigError("unknown matrix extension '" + ext + "' (use .csv or .bin)");
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  return format == MatrixFormat::Csv ? load_csv(path) : load_binary(path);
}

void save_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path,
                 MatrixFormat format) {
  if (format == MatrixFormat::Csv)
    save_csv(m, path);
  else
    save_binary(m, path);
}

std::vector<int> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double value = 0.0;
    if (!parse_double(line, value) || value != std::floor(value))
      throw ParseError(path.string() + ": bad label on line " + std::to_string(line_no));
    labels.push_back(static_cast<int>(value));
  }
  if (labels.empty()) throw ParseError(path.string() + ": no labels");
  return labels;
}

void save_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (int v : labels) out << v << '\n';
  if (!out) throw ParseError("write failure on " + path.string());
}

}  // namespace ldm

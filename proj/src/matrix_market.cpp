#include "invit/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "invit/format.hpp"

namespace invit::mm {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void parse_fail(const std::string& what, long line) {
  throw Error(ErrorCode::ParseError, "Matrix Market line " + std::to_string(line) + ": " + what);
}

}  // namespace

SparseMatrix read(std::istream& in) {
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) parse_fail("empty input", 0);
  ++line_no;
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate") {
    parse_fail("expected '%%MatrixMarket matrix coordinate' banner", line_no);
  }
  if (lower(field) != "real" && lower(field) != "double" && lower(field) != "integer") {
    parse_fail("unsupported field '" + field + "'", line_no);
  }
  const std::string sym = lower(symmetry);
  if (sym != "symmetric" && sym != "general") parse_fail("unsupported symmetry '" + symmetry + "'", line_no);
  const bool symmetric = sym == "symmetric";

  long rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> nnz)) parse_fail("bad size line", line_no);
    break;
  }
  if (rows < 1 || cols < 1 || nnz < 0) parse_fail("missing or invalid size line", line_no);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  long read_entries = 0;
  while (read_entries < nnz && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    long i = 0, j = 0;
    std::istringstream entry(line);
    std::string value_text;
    if (!(entry >> i >> j >> value_text)) parse_fail("bad entry", line_no);
    const auto value = parse_double(value_text);
    if (!value) parse_fail("bad value '" + value_text + "'", line_no);
    if (i < 1 || i > rows || j < 1 || j > cols) parse_fail("index out of range", line_no);
    triplets.emplace_back(i - 1, j - 1, *value);
    if (symmetric && i != j) triplets.emplace_back(j - 1, i - 1, *value);
    ++read_entries;
  }
  if (read_entries != nnz) parse_fail("expected " + std::to_string(nnz) + " entries", line_no);
  SparseMatrix out(rows, cols);
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

SparseMatrix read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read(in);
}

void write(std::ostream& out, const SparseMatrix& matrix) {
  std::vector<std::tuple<Index, Index, double>> lower_entries;
  for (Index k = 0; k < matrix.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) {
      if (it.row() >= it.col()) lower_entries.emplace_back(it.row(), it.col(), it.value());
    }
  }
  std::sort(lower_entries.begin(), lower_entries.end(), [](const auto& a, const auto& b) {
    return std::get<1>(a) != std::get<1>(b) ? std::get<1>(a) < std::get<1>(b)
                                            : std::get<0>(a) < std::get<0>(b);
  });
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << lower_entries.size() << '\n';
  for (const auto& [i, j, v] : lower_entries) {
    out << (i + 1) << ' ' << (j + 1) << ' ' << format_double(v) << '\n';
  }
}

void write_file(const std::filesystem::path& path, const SparseMatrix& matrix) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write(out, matrix);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Vector read_vector(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw Error(ErrorCode::ParseError, "empty vector file");
  std::vector<double> values;
  if (text[first] == '[') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("vector JSON: ") + e.what());
    }
    for (const auto& x : j) {
      if (!x.is_number()) throw Error(ErrorCode::ParseError, "vector JSON entries must be numbers");
      values.push_back(x.get<double>());
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    long line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '%' || line[b] == '#') continue;
      const auto e = line.find_last_not_of(" \t\r");
      const auto value = parse_double(line.substr(b, e - b + 1));
      if (!value) throw Error(ErrorCode::ParseError, "vector line " + std::to_string(line_no));
      values.push_back(*value);
    }
  }
  if (values.empty()) throw Error(ErrorCode::ParseError, "vector file has no entries");
  Vector out = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
  require_finite(out, "vector file");
  return out;
}

Vector read_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_vector(in);
}

}  // namespace invit::mm

#include "auglab/csv.hpp"

#include "auglab/types.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace auglab {

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorCode::input, fmt::format("missing CSV column '{}'", name));
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split_record(const std::string& line, const std::string& origin, int lineno) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorCode::input, fmt::format("{}:{}: unterminated quote", origin, lineno));
  cells.push_back(std::move(cur));
  for (auto& s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return cells;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split_record(line, origin, lineno);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw Error(ErrorCode::input, fmt::format("{}:{}: expected {} fields, got {}", origin, lineno,
                                                t.header.size(), cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw Error(ErrorCode::input, fmt::format("{}: missing header row", origin));
  return t;
}

CsvTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot open '{}'", file.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), file.string());
}

double parse_number(const std::string& cell, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::input, fmt::format("{}: '{}' is not a number", what, cell));
  }
  return v;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw Error(ErrorCode::inconsistency, fmt::format("CSV row has {} cells, header has {}", cells.size(), header_.size()));
  }
  rows_.push_back(std::move(cells));
}

std::string CsvWriter::str() const {
  std::string out;
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += quote(r[i]);
    }
    out += '\n';
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
  return out;
}

void CsvWriter::write(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, fmt::format("cannot write '{}'", file.string()));
  out << str();
  if (!out) throw Error(ErrorCode::io, fmt::format("write failed for '{}'", file.string()));
}

}  // namespace auglab

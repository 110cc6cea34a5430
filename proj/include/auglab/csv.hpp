#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace auglab {

// Header row plus string cells. Quoted fields with embedded commas are supported.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws Error(input) if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");
CsvTable read_csv(const std::filesystem::path& file);

double parse_number(const std::string& cell, const std::string& what);

// Shortest round-trip formatting used by every artifact.
std::string format_number(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::string str() const;
  void write(const std::filesystem::path& file) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace auglab

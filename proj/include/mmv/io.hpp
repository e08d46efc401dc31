#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mmv {

// Hex SHA-1 of the git blob encoding "blob <len>\0<bytes>", so hashes line up
// with `git hash-object` on the same content.
std::string content_hash(std::string_view bytes);

// Shortest decimal form that parses back to the same double (printf %.17g
// tightened when fewer digits round-trip); "inf"/"-inf"/"nan" spelled out.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Accumulates a CSV in memory: fixed header first, then rows of the same
// width.  Cells containing commas, quotes, or newlines are quoted.
class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& header);

  void add_row(const std::vector<std::string>& cells);
  const std::string& text() const { return text_; }
  int rows() const { return rows_; }

 private:
  void emit(const std::vector<std::string>& cells);
  std::size_t width_ = 0;
  int rows_ = 0;
  std::string text_;
};

}  // namespace mmv

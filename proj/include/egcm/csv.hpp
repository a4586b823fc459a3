#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace egcm {

// RFC 4180 reader: comma delimiter, double-quote quoting with "" escapes,
// LF or CRLF line ends, quoted fields may span lines. A leading UTF-8 BOM is
// skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}
  // False at end of input.
  bool next(std::vector<std::string>& fields);

 private:
  std::istream& in_;
  bool first_ = true;
};

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void write(std::span<const std::string> fields);

 private:
  std::ostream& out_;
};

}  // namespace egcm

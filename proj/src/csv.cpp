#include "egcm/csv.hpp"

#include <istream>
#include <ostream>

#include "egcm/error.hpp"

namespace egcm {

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  if (first_) {
    first_ = false;
    if (in_.peek() == 0xEF) {
      char bom[3];
      in_.read(bom, 3);
      if (!(static_cast<unsigned char>(bom[1]) == 0xBB && static_cast<unsigned char>(bom[2]) == 0xBF))
        throw InputError("invalid byte order mark");
    }
  }
  int c = in_.get();
  if (c == std::char_traits<char>::eof()) return false;

  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  for (;; c = in_.get()) {
    if (c == std::char_traits<char>::eof()) {
      if (quoted) throw InputError("unterminated quoted CSV field");
      break;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          field.push_back('"');
          in_.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (ch == '\n') {
      break;
    } else if (ch == '\r') {
      if (in_.peek() == '\n') in_.get();
      break;
    } else {
      field.push_back(ch);
    }
  }
  fields.push_back(std::move(field));
  return true;
}

void CsvWriter::write(std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out_ << f;
      continue;
    }
    out_ << '"';
    for (char ch : f) {
      if (ch == '"') out_ << '"';
      out_ << ch;
    }
    out_ << '"';
  }
  out_ << '\n';
}

}  // namespace egcm

#pragma once

// Minimal CSV writer: header row, then numeric or text cells.

#include <fstream>
#include <initializer_list>
#include <ios>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sshphoton/errors.hpp"

namespace sshphoton {

using CsvCell = std::variant<double, long long, std::string, std::optional<double>>;

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::initializer_list<std::string> header) : os_(os), columns_(header.size()) {
    os_.precision(9);
    bool first = true;
    for (const auto& h : header) {
      if (!first) os_ << ',';
      os_ << h;
      first = false;
    }
    os_ << '\n';
  }

  void row(std::initializer_list<CsvCell> cells) {
    if (cells.size() != columns_) throw ConfigError("CSV row has the wrong number of cells");
    bool first = true;
    for (const auto& c : cells) {
      if (!first) os_ << ',';
      first = false;
      if (const auto* d = std::get_if<double>(&c)) {
        os_ << *d;
      } else if (const auto* i = std::get_if<long long>(&c)) {
        os_ << *i;
      } else if (const auto* s = std::get_if<std::string>(&c)) {
        os_ << quote(*s);
      } else if (const auto& o = std::get<std::optional<double>>(c)) {
        os_ << *o;
      }
    }
    os_ << '\n';
  }

  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + '"';
  }

 private:
  std::ostream& os_;
  std::size_t columns_;
};

}  // namespace sshphoton

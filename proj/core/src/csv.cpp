#include "csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <sstream>

#include "ppm/error.hpp"

namespace ppm::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

std::string trim(std::string s) {
  const auto ws = " \t\r";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

}  // namespace

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::vector<std::vector<double>> read_numeric(std::istream& is,
                                              std::initializer_list<std::string_view> header) {
  std::string line;
  if (!(static_cast<bool>(std::getline(is, line)))) {
    throw Error(ErrorKind::Io, "CSV input is empty");
  }
  const auto cols = split(trim(line));
  bool ok = cols.size() == header.size();
  std::size_t k = 0;
  for (auto h : header) {
    if (!ok) {
      break;
    }
    ok = trim(cols[k++]) == h;
  }
  std::string expected;
  for (auto h : header) {
    expected += (expected.empty() ? "" : ",") + std::string(h);
  }
  if (!ok) {
    throw Error(ErrorKind::Io, "CSV header '" + trim(line) + "' does not match '" + expected + "'");
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto cells = split(line);
    if (!(cells.size() == header.size())) {
      throw Error(ErrorKind::Io, "CSV line " + std::to_string(lineno) + " has " +
                                     std::to_string(cells.size()) + " fields, expected " +
                                     std::to_string(header.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      const std::string t = trim(c);
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(t.c_str(), &end);
      if (!(!t.empty() && end == t.c_str() + t.size() && errno == 0)) {
        throw Error(ErrorKind::Io,
                    "CSV line " + std::to_string(lineno) + ": '" + t + "' is not a number");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ppm::csv

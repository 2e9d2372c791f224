#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ppm::csv {

/// Six significant digits, printf %.6g.
std::string num(double x);

/// Parse a header-checked numeric CSV. Blank lines are skipped.
std::vector<std::vector<double>> read_numeric(std::istream& is,
                                              std::initializer_list<std::string_view> header);

}  // namespace ppm::csv

#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

namespace sinkflow::io {

// 17 significant digits, round-trip exact
std::string real(double x);

void write_header(std::ostream& os, std::initializer_list<const char*> cols);
void write_row(std::ostream& os, std::initializer_list<double> cells);
void write_row(std::ostream& os, const std::vector<double>& cells);

}  // namespace sinkflow::io

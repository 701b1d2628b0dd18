#include "sinkflow/io.hpp"

#include <cstdio>
#include <ostream>

namespace sinkflow::io {

std::string real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_header(std::ostream& os, std::initializer_list<const char*> cols) {
    bool first = true;
    for (const char* c : cols) {
        if (!first) os << ',';
        os << c;
        first = false;
    }
    os << '\n';
}

void write_row(std::ostream& os, std::initializer_list<double> cells) {
    write_row(os, std::vector<double>(cells));
}

void write_row(std::ostream& os, const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << real(cells[i]);
    }
    os << '\n';
}

}  // namespace sinkflow::io

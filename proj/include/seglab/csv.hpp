#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace seglab {

/// Fixed 9-significant-digit decimal formatting; all CSV output goes
/// through this so identical configs yield byte-identical files.
inline std::string fmt_g9(double v) {
    if (v == 0.0) v = 0.0; // normalize -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string csv_join(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
    return out;
}

} // namespace seglab

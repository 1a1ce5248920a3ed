#pragma once

#include <array>
#include <charconv>
#include <ostream>
#include <string>
#include <vector>

namespace vop {

/// 17 significant digits, enough to round-trip any double.
inline std::string format_full(double v) {
    std::array<char, 40> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

inline void write_csv_row(std::ostream& out, const std::vector<double>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << format_full(row[i]);
    }
    out << '\n';
}

} // namespace vop

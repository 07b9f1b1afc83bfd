#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace rkhsid {

// Shortest decimal string that round-trips the exact double. Keeps CSV output
// byte-stable across runs and platforms.
inline std::string format_number(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& text, const std::string& context) {
    double out = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc()) {
        throw std::invalid_argument(context + ": cannot parse number from '" + text + "'");
    }
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> comments;  // leading '#' lines, kept verbatim
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    CsvTable table;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        if (line[0] == '#') {
            if (!have_header) table.comments.push_back(line);
            continue;
        }
        auto fields = split_csv_line(line);
        if (!have_header) {
            table.header = fields;
            have_header = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            row.push_back(parse_number(f, path + ":" + std::to_string(lineno)));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows,
                      const std::vector<std::string>& comments = {}) {
    std::ofstream out(path, std::ios::binary);  // binary: no platform newline translation
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (const auto& c : comments) out << c << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ",";
        out << header[i];
    }
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << format_number(row[i]);
        }
        out << "\n";
    }
}

}  // namespace rkhsid

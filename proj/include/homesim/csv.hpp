#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "homesim/error.hpp"

namespace homesim::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ConfigError("missing CSV column '" + name + "'");
    }
};

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n\"");
    const auto last = s.find_last_not_of(" \t\r\n\"");
    if (first == std::string::npos) return {};
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

// Numeric CSV with a mandatory header row.
inline Table read_numeric(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV file '" + path + "'");
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(table.header.size()) + " fields");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) throw std::invalid_argument(c);
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(line_no) + ": non-numeric field '" +
                                  c + "'");
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw ConfigError("CSV file '" + path + "' has no header row");
    return table;
}

} // namespace homesim::csv

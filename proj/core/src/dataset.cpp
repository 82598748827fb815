#include "bayescloud/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "bayescloud/error.hpp"

namespace bayescloud {

std::optional<std::size_t> Dataset::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return i;
    }
    return std::nullopt;
}

namespace {

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::optional<double> as_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* first = s.data();
    if (*first == '+') ++first;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

Dataset read_csv(std::istream& in, const std::vector<Variable>* schema) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) {
            header = split(line);
            break;
        }
    }
    if (header.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no header row");
    std::set<std::string> unique(header.begin(), header.end());
    if (unique.size() != header.size()) throw Error(ErrorCode::DataError, "duplicate column name in header");

    std::vector<std::vector<std::string>> cells;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto row = split(line);
        if (row.size() != header.size()) {
            throw Error(ErrorCode::DataError,
                        "line " + std::to_string(line_no) + " has " + std::to_string(row.size()) + " cells, expected " +
                            std::to_string(header.size()),
                        {{"line", line_no}});
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c].empty()) {
                throw Error(ErrorCode::DataError,
                            "missing value in column '" + header[c] + "' on line " + std::to_string(line_no),
                            {{"line", line_no}, {"column", header[c]}});
            }
        }
        cells.push_back(std::move(row));
    }

    Dataset data;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (schema) {
            auto it = std::find_if(schema->begin(), schema->end(), [&](const Variable& v) { return v.name == header[c]; });
            if (it == schema->end()) {
                throw Error(ErrorCode::DataError, "column '" + header[c] + "' is not a model variable",
                            {{"column", header[c]}});
            }
            data.columns.push_back(*it);
            continue;
        }
        bool numeric = !cells.empty();
        std::set<std::string> states;
        for (const auto& row : cells) {
            numeric = numeric && as_number(row[c]).has_value();
            states.insert(row[c]);
        }
        if (numeric) {
            data.columns.push_back(Variable::continuous(header[c]));
        } else {
            data.columns.push_back(Variable::discrete(header[c], {states.begin(), states.end()}));
        }
    }

    data.rows.reserve(cells.size());
    for (std::size_t r = 0; r < cells.size(); ++r) {
        std::vector<double> row(header.size());
        for (std::size_t c = 0; c < header.size(); ++c) {
            const auto& col = data.columns[c];
            const auto& text = cells[r][c];
            if (col.is_discrete()) {
                auto s = col.state_index(text);
                if (!s) {
                    throw Error(ErrorCode::DataError, "'" + text + "' is not a state of '" + col.name + "'",
                                {{"column", col.name}, {"value", text}});
                }
                row[c] = static_cast<double>(*s);
            } else {
                auto v = as_number(text);
                if (!v) {
                    throw Error(ErrorCode::DataError, "'" + text + "' is not a number (column '" + col.name + "')",
                                {{"column", col.name}, {"value", text}});
                }
                row[c] = *v;
            }
        }
        data.rows.push_back(std::move(row));
    }
    return data;
}

Dataset read_csv_file(const std::string& path, const std::vector<Variable>* schema) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'", {{"path", path}});
    return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& data) {
    for (std::size_t c = 0; c < data.columns.size(); ++c) out << (c ? "," : "") << data.columns[c].name;
    out << "\n";
    for (const auto& row : data.rows) {
        for (std::size_t c = 0; c < data.columns.size(); ++c) {
            if (c) out << ",";
            const auto& col = data.columns[c];
            if (col.is_discrete()) {
                out << col.states[static_cast<std::size_t>(row[c])];
            } else {
                out << script::format_number(row[c]);
            }
        }
        out << "\n";
    }
}

}  // namespace bayescloud

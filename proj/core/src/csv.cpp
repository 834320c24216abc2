#include "gyreplan/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>

#include <fmt/format.h>

#include "gyreplan/errors.hpp"

namespace gyreplan {

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return fmt::format("{:.17g}", v);
}

double parse_number(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (text == "nan" || text == "NaN") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (text == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc{} || ptr != last) {
        throw DomainError(fmt::format("'{}' is not a number", text));
    }
    return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.emplace_back(line.substr(start));
            break;
        }
        cells.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

CsvTable CsvTable::read(std::istream& in) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) {
        throw DomainError("CSV input is empty");
    }
    table.header_ = split_csv_line(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto cells = split_csv_line(line);
        if (cells.size() != table.header_.size()) {
            throw DomainError(fmt::format("CSV line {} has {} cells, header has {}", line_no, cells.size(),
                                          table.header_.size()));
        }
        table.rows_.push_back(std::move(cells));
    }
    return table;
}

std::size_t CsvTable::column(std::string_view name) const {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) {
        throw DomainError(fmt::format("CSV is missing column '{}'", name));
    }
    return static_cast<std::size_t>(it - header_.begin());
}

bool CsvTable::has_column(std::string_view name) const noexcept {
    return std::find(header_.begin(), header_.end(), name) != header_.end();
}

double CsvTable::number(std::size_t row, std::size_t col) const { return parse_number(rows_[row][col]); }

} // namespace gyreplan

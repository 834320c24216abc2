#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gyreplan {

/// Shortest round-trip-safe text for a double: 17 significant digits.
std::string format_number(double v);

/// Parses a decimal number; throws DomainError on trailing garbage. Accepts
/// "nan" and "inf".
double parse_number(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);

/// A header-keyed CSV table held as text cells.
class CsvTable {
  public:
    /// Reads the header and all rows. Throws DomainError on ragged rows.
    static CsvTable read(std::istream& in);

    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t rows() const noexcept { return rows_.size(); }

    /// Column index or throws DomainError naming the missing column.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const noexcept;

    const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
    double number(std::size_t row, std::size_t col) const;

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace gyreplan

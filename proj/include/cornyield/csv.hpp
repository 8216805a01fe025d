#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cornyield::csv {

// Minimal comma-separated reader: header row required, no quoting. Blank
// lines are skipped; a UTF-8 BOM on the header is tolerated. Errors carry
// the file name and 1-based line number.
class Table {
public:
    static Table read(const std::filesystem::path& path, std::string_view module);
    static Table parse(std::string_view text, std::string source, std::string_view module);

    const std::string& source() const noexcept { return source_; }
    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t rows() const noexcept { return rows_.size(); }

    std::optional<std::size_t> column(std::string_view name) const;
    // Throws a schema error naming the column when absent.
    std::size_t require_column(std::string_view name) const;

    std::string_view field(std::size_t row, std::size_t col) const { return rows_[row].fields[col]; }
    std::size_t line(std::size_t row) const { return rows_[row].line; }

    double number(std::size_t row, std::size_t col) const;
    long integer(std::size_t row, std::size_t col) const;
    std::string text(std::size_t row, std::size_t col) const;

    [[noreturn]] void fail(std::size_t row, std::size_t col, std::string_view what) const;

private:
    struct Row {
        std::size_t line;
        std::vector<std::string> fields;
    };

    std::string source_;
    std::string module_;
    std::vector<std::string> header_;
    std::vector<Row> rows_;
};

// Shortest decimal representation that parses back to the same double.
std::string format_exact(double v);

// Fixed number of decimals.
std::string format_fixed(double v, int decimals);

std::vector<std::string> split(std::string_view line, char sep = ',');

}  // namespace cornyield::csv

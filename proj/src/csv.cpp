#include "cornyield/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cornyield/error.hpp"

namespace cornyield::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

}  // namespace

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        const auto piece = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        out.emplace_back(trim(piece));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

Table Table::read(const std::filesystem::path& path, std::string_view module) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, module, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string(), module);
}

Table Table::parse(std::string_view text, std::string source, std::string_view module) {
    Table t;
    t.source_ = std::move(source);
    t.module_ = std::string(module);
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto raw = trim(text.substr(pos, end - pos));
        ++line_no;
        pos = end + 1;
        if (raw.empty()) {
            if (end == text.size()) break;
            continue;
        }
        auto fields = split(raw);
        if (!have_header) {
            t.header_ = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header_.size()) {
            throw Error(ErrorKind::Parse, module,
                        t.source_ + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(t.header_.size()) + " fields, found " + std::to_string(fields.size()));
        }
        t.rows_.push_back(Row{line_no, std::move(fields)});
        if (end == text.size()) break;
    }
    if (!have_header) throw Error(ErrorKind::Schema, module, t.source_ + ": missing header row");
    return t;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw Error(ErrorKind::Schema, module_, source_ + ": missing column \"" + std::string(name) + "\"");
}

void Table::fail(std::size_t row, std::size_t col, std::string_view what) const {
    throw Error(ErrorKind::Parse, module_,
                source_ + ":" + std::to_string(rows_[row].line) + ": column " + header_[col] + " value \"" +
                    rows_[row].fields[col] + "\": " + std::string(what));
}

double Table::number(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row].fields[col];
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        fail(row, col, "not a finite number");
    }
    return v;
}

long Table::integer(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row].fields[col];
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) fail(row, col, "not an integer");
    return v;
}

std::string Table::text(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row].fields[col];
    if (s.empty()) fail(row, col, "empty");
    return s;
}

std::string format_exact(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    std::string out(buf, ptr);
    if (out.starts_with('-') && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
    return out;
}

}  // namespace cornyield::csv

#include "latentstitch/report.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "binary_io.hpp"
#include "latentstitch/error.hpp"

namespace latentstitch::pipeline {

namespace {

std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void append_row(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += quote(fields[i]);
    }
    out += '\n';
}

CsvTable to_table(const MetricGrid& grid) {
    CsvTable t;
    t.header.push_back(grid.corner);
    t.header.insert(t.header.end(), grid.cols.begin(), grid.cols.end());
    for (std::size_t r = 0; r < grid.rows.size(); ++r) {
        std::vector<std::string> row{grid.rows[r]};
        for (std::size_t c = 0; c < grid.cols.size(); ++c) {
            const auto& v = grid.at(r, c);
            row.push_back(v ? format_number(*v) : std::string{});
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace

MetricGrid::MetricGrid(std::string name_, std::string corner_, std::vector<std::string> rows_,
                       std::vector<std::string> cols_)
    : name(std::move(name_)),
      corner(std::move(corner_)),
      rows(std::move(rows_)),
      cols(std::move(cols_)),
      values(rows.size() * cols.size()) {}

std::size_t MetricGrid::count_present() const {
    std::size_t n = 0;
    for (const auto& v : values) n += v.has_value();
    return n;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string format_csv(const CsvTable& table) {
    std::string out;
    append_row(out, table.header);
    for (const auto& row : table.rows) append_row(out, row);
    return out;
}

std::string format_csv(const MetricGrid& grid) { return format_csv(to_table(grid)); }

CsvTable parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        any = true;
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            record.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(record));
            record.clear();
            any = false;
        } else {
            field += c;
        }
    }
    require(!in_quotes, ErrorCode::RaggedRow, "csv: unterminated quoted field");
    if (any || !field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    CsvTable t;
    if (records.empty()) return t;
    t.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        require(records[r].size() == t.header.size(), ErrorCode::RaggedRow,
                "csv: row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                    " fields, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

MetricGrid parse_grid_csv(std::string_view text, std::string name) {
    const CsvTable t = parse_csv(text);
    require(!t.header.empty(), ErrorCode::RaggedRow, "grid csv has no header");
    std::vector<std::string> rows;
    for (const auto& r : t.rows) rows.push_back(r.front());
    MetricGrid g(std::move(name), t.header.front(), rows, {t.header.begin() + 1, t.header.end()});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t c = 0; c < g.cols.size(); ++c) {
            const std::string& f = t.rows[r][c + 1];
            if (f.empty()) continue;
            char* end = nullptr;
            const double v = std::strtod(f.c_str(), &end);
            require(end == f.c_str() + f.size(), ErrorCode::UnknownValue, "grid csv: bad number '" + f + "'");
            g.at(r, c) = v;
        }
    }
    return g;
}

void emit_csv(const CsvTable& table, const std::filesystem::path& path) {
    detail::spit(path, format_csv(table));
}

void emit_csv(const MetricGrid& grid, const std::filesystem::path& path) {
    detail::spit(path, format_csv(grid));
}

}  // namespace latentstitch::pipeline

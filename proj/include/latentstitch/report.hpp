#pragma once

// CSV reports. Output is byte-deterministic: numbers use "%.9g", absent
// values are empty fields, fields are quoted only when they must be.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace latentstitch::pipeline {

/// rows x cols matrix of one metric. Rows are encoders (or map pairs),
/// columns are decoders (or attributes).
struct MetricGrid {
    std::string name;
    std::string corner;  // header of the id column, e.g. "encoder\\decoder"
    std::vector<std::string> rows;
    std::vector<std::string> cols;
    std::vector<std::optional<double>> values;

    MetricGrid() = default;
    MetricGrid(std::string name, std::string corner, std::vector<std::string> rows,
               std::vector<std::string> cols);

    std::optional<double>& at(std::size_t r, std::size_t c) { return values[r * cols.size() + c]; }
    const std::optional<double>& at(std::size_t r, std::size_t c) const {
        return values[r * cols.size() + c];
    }
    std::size_t count_present() const;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string format_number(double v);
std::string format_csv(const CsvTable& table);
std::string format_csv(const MetricGrid& grid);
CsvTable parse_csv(std::string_view text);
MetricGrid parse_grid_csv(std::string_view text, std::string name = {});

void emit_csv(const CsvTable& table, const std::filesystem::path& path);
void emit_csv(const MetricGrid& grid, const std::filesystem::path& path);

}  // namespace latentstitch::pipeline

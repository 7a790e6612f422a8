#pragma once

#include "softproj/linalg.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace softproj::csv {

/// Shortest round-trip decimal representation ('.' separator, locale-free).
std::string format_double(double value);

double parse_double(const std::string& text);

/// Row-major, header-free matrix export.
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// Reads a header-free numeric CSV. All rows must have the same width.
Matrix read_matrix(const std::filesystem::path& path);

/// Table writer with a fixed header; every row must have the header's width.
class Table {
public:
    explicit Table(std::vector<std::string> header);

    Table& row(const std::vector<std::string>& cells);
    Table& row(const std::vector<double>& values);

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    std::string str() const;
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Parses a CSV with a header line into (header, rows of cells).
std::pair<std::vector<std::string>, std::vector<std::vector<std::string>>> read_table(
    const std::filesystem::path& path);

}  // namespace softproj::csv

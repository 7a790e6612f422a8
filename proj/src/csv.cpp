#include "softproj/csv.hpp"

#include "softproj/errors.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace softproj::csv {

std::string format_double(double value)
{
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw IoError("format_double: conversion failed");
    }
    return std::string(buf, end);
}

double parse_double(const std::string& text)
{
    std::string t = text;
    while (!t.empty() && (t.back() == ' ' || t.back() == '\r' || t.back() == '\t')) {
        t.pop_back();
    }
    std::size_t start = t.find_first_not_of(" \t");
    if (start == std::string::npos) {
        throw IoError("parse_double: empty cell");
    }
    t = t.substr(start);
    if (t == "inf" || t == "+inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (t == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    if (t == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double value = 0.0;
    const char* first = t.data();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw IoError("parse_double: not a number: '" + text + "'");
    }
    return value;
}

namespace {

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const Matrix& m)
{
    auto out = open_out(path);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out << ',';
            }
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

Matrix read_matrix(const std::filesystem::path& path)
{
    auto in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<double> values;
        for (const auto& cell : split_line(line)) {
            values.push_back(parse_double(cell));
        }
        if (!rows.empty() && values.size() != rows.front().size()) {
            throw IoError("read_matrix: ragged rows in " + path.string());
        }
        rows.push_back(std::move(values));
    }
    Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        }
    }
    return m;
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

Table& Table::row(const std::vector<std::string>& cells)
{
    if (cells.size() != header_.size()) {
        throw DimensionError("csv::Table: row width does not match header");
    }
    rows_.push_back(cells);
    return *this;
}

Table& Table::row(const std::vector<double>& values)
{
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) {
        cells.push_back(format_double(v));
    }
    return row(cells);
}

std::string Table::str() const
{
    std::ostringstream out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) {
                out << ',';
            }
            out << cells[i];
        }
        out << '\n';
    };
    emit(header_);
    for (const auto& r : rows_) {
        emit(r);
    }
    return out.str();
}

void Table::save(const std::filesystem::path& path) const
{
    auto out = open_out(path);
    out << str();
}

std::pair<std::vector<std::string>, std::vector<std::vector<std::string>>> read_table(
    const std::filesystem::path& path)
{
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("read_table: empty file " + path.string());
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    auto header = split_line(line);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw IoError("read_table: row width mismatch in " + path.string());
        }
        rows.push_back(std::move(cells));
    }
    return {std::move(header), std::move(rows)};
}

}  // namespace softproj::csv

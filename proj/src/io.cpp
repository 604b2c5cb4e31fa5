#include "tascov/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tascov::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

// Plain comma splitting; quoted fields may not contain commas.
std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

struct Line {
    std::size_t number;
    std::string_view text;
};

// Blank lines and '#' comment lines (metadata written by the tool) are skipped.
std::vector<Line> nonblank_lines(std::string_view text) {
    std::vector<Line> out;
    std::size_t number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++number;
        std::string_view line = trim(text.substr(start, end - start));
        if (!line.empty() && line.front() != '#') out.push_back({number, line});
        start = end + 1;
    }
    return out;
}

[[noreturn]] void parse_error(const std::string& source, std::size_t line, std::size_t column,
                              const std::string& what) {
    throw Error(ErrorCode::ParseError,
                source + ":" + std::to_string(line) + ": column " + std::to_string(column) + ": " + what);
}

double parse_cell(std::string_view raw, const std::string& source, std::size_t line, std::size_t column) {
    const std::string cell = unquote(raw);
    if (cell.empty()) parse_error(source, line, column, "missing value");
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        parse_error(source, line, column, "'" + cell + "' is not a number");
    }
    if (!std::isfinite(v)) parse_error(source, line, column, "missing or non-finite value '" + cell + "'");
    return v;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

DataMatrix parse_data_csv(std::string_view text, const std::string& source) {
    const auto lines = nonblank_lines(text);
    if (lines.empty()) throw Error(ErrorCode::ParseError, source + ": empty file");
    std::vector<std::string> labels;
    for (auto f : split_fields(lines.front().text)) labels.push_back(unquote(f));
    const std::size_t p = labels.size();
    const std::size_t n = lines.size() - 1;
    if (n < 2) {
        throw Error(ErrorCode::InsufficientSamples, source + ": need at least 2 sample rows, got " + std::to_string(n));
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const Line& line = lines[r + 1];
        const auto fields = split_fields(line.text);
        if (fields.size() != p) {
            parse_error(source, line.number, fields.size(),
                        "expected " + std::to_string(p) + " fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < p; ++c) {
            x(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) =
                parse_cell(fields[c], source, line.number, c + 1);
        }
    }
    return DataMatrix(std::move(x), std::move(labels), false);
}

DataMatrix read_data_csv(const std::string& path) { return parse_data_csv(read_file(path), path); }

LabeledSymMatrix parse_matrix_csv(std::string_view text, const std::string& source) {
    const auto lines = nonblank_lines(text);
    if (lines.empty()) throw Error(ErrorCode::ParseError, source + ": empty file");
    std::vector<std::string> header;
    for (auto f : split_fields(lines.front().text)) header.push_back(unquote(f));
    const std::size_t rows = lines.size() - 1;
    // With a row-label column the header has one more field than there are rows.
    const bool row_labels = header.size() == rows + 1;
    if (!row_labels && header.size() != rows) {
        throw Error(ErrorCode::ParseError, source + ": matrix is not square (" + std::to_string(rows) +
                                               " rows, header has " + std::to_string(header.size()) +
                                               " fields)");
    }
    if (rows == 0) throw Error(ErrorCode::ParseError, source + ": matrix has no rows");
    std::vector<std::string> labels(header.begin() + (row_labels ? 1 : 0), header.end());
    const auto p = static_cast<Eigen::Index>(rows);
    Eigen::MatrixXd m(p, p);
    for (std::size_t r = 0; r < rows; ++r) {
        const Line& line = lines[r + 1];
        const auto fields = split_fields(line.text);
        if (fields.size() != header.size()) {
            parse_error(source, line.number, fields.size(),
                        "expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
        }
        const std::size_t offset = row_labels ? 1 : 0;
        for (std::size_t c = 0; c < rows; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_cell(fields[c + offset], source, line.number, c + offset + 1);
        }
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorCode::ParseError, source + ": matrix is not symmetric");
    }
    return {std::move(labels), SymMatrix::from_lower(m)};
}

LabeledSymMatrix read_matrix_csv(const std::string& path) { return parse_matrix_csv(read_file(path), path); }

std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& labels) {
    if (labels.size() != static_cast<std::size_t>(m.rows()) || m.rows() != m.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "matrix and label count disagree");
    }
    std::string out = "variable";
    for (const auto& l : labels) out += "," + l;
    out += "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + format_number(m(i, j));
        out += "\n";
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path + "'");
}

}  // namespace tascov::io

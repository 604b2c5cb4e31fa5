#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tascov/linalg.hpp"
#include "tascov/targets.hpp"

namespace tascov::io {

/// Decimal with 17 significant digits; "inf"/"-inf"/"nan" for non-finite.
std::string format_number(double v);

/// Parses a samples-in-rows CSV with a header of variable names and returns
/// the p x n data matrix. Empty cells, NA and non-numeric cells are rejected
/// with a ParseError naming the line and column.
DataMatrix parse_data_csv(std::string_view text, const std::string& source = "<memory>");
DataMatrix read_data_csv(const std::string& path);

struct LabeledSymMatrix {
    std::vector<std::string> labels;
    SymMatrix matrix;
};

/// Square matrix with a header row. A leading row-label column is accepted
/// (the layout written by matrix_to_csv). Asymmetric input is rejected.
LabeledSymMatrix parse_matrix_csv(std::string_view text, const std::string& source = "<memory>");
LabeledSymMatrix read_matrix_csv(const std::string& path);

/// Header "variable,<labels...>", then one labelled row per variable.
std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& labels);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace tascov::io

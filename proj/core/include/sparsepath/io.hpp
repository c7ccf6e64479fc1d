#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sparsepath/path.hpp"

namespace sparsepath {

struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd data;
};

// Comma-separated, first row header, all cells numeric. Throws InputError
// with 1-based row/col diagnostics on ragged rows or non-numeric cells.
CsvTable read_csv(const std::string& path);

// Shortest round-trip representation (17 significant digits).
std::string format_double(double v);

// Generic numeric CSV with format_double cells.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows);

// events.json: array of {kind, rho, index?, detail}.
void write_events_json(const std::string& path, const std::vector<PathEvent>& events);

}  // namespace sparsepath

#include "sparsepath/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sparsepath/errors.hpp"

namespace sparsepath {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    CsvTable table;
    table.header = split_line(line);
    const size_t ncol = table.header.size();
    if (ncol == 0) throw InputError("empty header", 1, 1);

    std::vector<double> values;
    long nrow = 0;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != ncol)
            throw InputError("ragged row: expected " + std::to_string(ncol) + " cells, got " +
                                 std::to_string(cells.size()),
                             lineno, static_cast<long>(cells.size()));
        for (size_t c = 0; c < ncol; ++c) {
            try {
                size_t pos = 0;
                double v = std::stod(cells[c], &pos);
                while (pos < cells[c].size() && std::isspace(static_cast<unsigned char>(cells[c][pos]))) ++pos;
                if (pos != cells[c].size()) throw std::invalid_argument("trailing");
                values.push_back(v);
            } catch (const std::exception&) {
                throw InputError("non-numeric cell '" + cells[c] + "'", lineno,
                                 static_cast<long>(c + 1));
            }
        }
        ++nrow;
    }
    table.data.resize(nrow, static_cast<Eigen::Index>(ncol));
    for (long i = 0; i < nrow; ++i)
        for (size_t c = 0; c < ncol; ++c)
            table.data(i, static_cast<Eigen::Index>(c)) = values[static_cast<size_t>(i) * ncol + c];
    return table;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    for (size_t c = 0; c < header.size(); ++c) {
        if (c) out << ',';
        out << header[c];
    }
    out << '\n';
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            if (c) out << ',';
            out << format_double(rows(i, c));
        }
        out << '\n';
    }
}

void write_events_json(const std::string& path, const std::vector<PathEvent>& events) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : events) {
        nlohmann::json j;
        j["kind"] = to_string(e.kind);
        j["rho"] = e.rho;
        if (e.index >= 0) j["index"] = e.index;
        j["detail"] = e.detail;
        arr.push_back(std::move(j));
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    out << arr.dump(2) << '\n';
}

}  // namespace sparsepath

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "onmf/errors.hpp"
#include "onmf/matrix.hpp"
#include "onmf/online.hpp"

namespace onmf {

namespace detail {
inline std::string fmt12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}
}  // namespace detail

// Checkpoint text format: first line "F K", then F rows of K decimals.
inline void write_matrix(std::ostream& os, const Matrix& m) {
    os << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) os << ' ';
            os << detail::fmt12(m(i, j));
        }
        os << '\n';
    }
}

inline void write_matrix_file(const std::string& path, const Matrix& m) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for writing: " + path);
    write_matrix(os, m);
}

// Reads either the checkpoint format (leading "F K" header) or a bare
// rectangular numeric table; separators may be whitespace or commas.
inline Matrix read_matrix(std::istream& is, const std::string& what = "<stream>") {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        std::vector<double> row;
        double x;
        while (ls >> x) row.push_back(x);
        if (!ls.eof()) throw DataError("non-numeric token in " + what);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("no numeric data in " + what);
    // checkpoint header: two integers announcing the shape of what follows
    if (rows.size() >= 2 && rows.front().size() == 2) {
        const double fr = rows.front()[0];
        const double fc = rows.front()[1];
        if (fr == static_cast<double>(rows.size() - 1) && fc >= 1.0 &&
            fc == static_cast<double>(rows[1].size())) {
            rows.erase(rows.begin());
        }
    }
    const std::size_t cols = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != cols) throw DataError("ragged rows in " + what);
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    return m;
}

inline Matrix read_matrix_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    return read_matrix(is, path);
}

inline void write_trace_csv(std::ostream& os, const LossTrace& trace) {
    os << "t,samples_seen,empirical_loss,eta,stationarity_residual,wall_ms\n";
    for (const TraceRecord& r : trace.records) {
        os << r.t << ',' << r.samples_seen << ',' << detail::fmt12(r.empirical_loss)
           << ',' << detail::fmt12(r.eta) << ',' << detail::fmt12(r.stationarity_residual)
           << ',' << r.wall_ms << '\n';
    }
}

inline void write_trace_csv_file(const std::string& path, const LossTrace& trace) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for writing: " + path);
    write_trace_csv(os, trace);
}

}  // namespace onmf

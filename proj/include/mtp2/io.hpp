#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtp2/assembler.hpp"
#include "mtp2/graph.hpp"
#include "mtp2/matrix.hpp"

namespace mtp2 {

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::string next_data_line(std::istream& in, const std::string& path) {
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find_first_not_of(" \t\r\n");
        if (pos == std::string::npos || line[pos] == '%') continue;
        return line;
    }
    throw FormatError(path + ": unexpected end of file");
}

/// Remaining non-comment content as one token stream; tolerates values split
/// one-per-line or many-per-line.
inline std::string data_body(std::istream& in) {
    std::string all, line;
    while (std::getline(in, line)) {
        const auto pos = line.find_first_not_of(" \t\r\n");
        if (pos == std::string::npos || line[pos] == '%') continue;
        all += line;
        all += '\n';
    }
    return all;
}

}  // namespace detail

/// Dense symmetric matrix in Matrix Market array format (lower triangle,
/// column major, 1-based convention, 17 significant digits).
inline void write_matrix_market_dense(const std::string& path, const SymmetricMatrix& a) {
    std::ofstream out(path);
    if (!out) throw FormatError(path + ": cannot open for writing");
    const int p = a.dim();
    out << "%%MatrixMarket matrix array real symmetric\n" << p << " " << p << "\n";
    for (int j = 0; j < p; ++j)
        for (int i = j; i < p; ++i) out << detail::fmt17(a(i, j)) << "\n";
    if (!out) throw FormatError(path + ": write failed");
}

/// Sparse symmetric matrix in Matrix Market coordinate format. Entries with
/// |value| <= drop_tol are skipped (assembled precision matrices carry exact
/// zeros, so the default writes the true support plus the diagonal).
inline void write_matrix_market_sparse(const std::string& path, const SymmetricMatrix& a,
                                       double drop_tol = 0.0) {
    const int p = a.dim();
    std::vector<std::string> lines;
    for (int j = 0; j < p; ++j)
        for (int i = j; i < p; ++i)
            if (std::abs(a(i, j)) > drop_tol || i == j)
                lines.push_back(std::to_string(i + 1) + " " + std::to_string(j + 1) + " " +
                                detail::fmt17(a(i, j)));
    std::ofstream out(path);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << "%%MatrixMarket matrix coordinate real symmetric\n"
        << p << " " << p << " " << lines.size() << "\n";
    for (const auto& line : lines) out << line << "\n";
    if (!out) throw FormatError(path + ": write failed");
}

/// Off-diagonal-only coordinate file (thresholded matrices, adjacency).
inline void write_matrix_market_sparse(const std::string& path, const ThresholdedMatrix& t) {
    std::ofstream out(path);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << "%%MatrixMarket matrix coordinate real symmetric\n"
        << t.dim() << " " << t.dim() << " " << t.entries().size() << "\n";
    for (const auto& e : t.entries())
        out << e.j + 1 << " " << e.i + 1 << " " << detail::fmt17(e.value) << "\n";
    if (!out) throw FormatError(path + ": write failed");
}

inline void write_matrix_market_graph(const std::string& path, const UndirectedGraph& g) {
    std::ofstream out(path);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << "%%MatrixMarket matrix coordinate real symmetric\n"
        << g.vertex_count() << " " << g.vertex_count() << " " << g.edge_count() << "\n";
    for (const Edge& e : g.edges()) out << e.second + 1 << " " << e.first + 1 << " 1\n";
    if (!out) throw FormatError(path + ": write failed");
}

/// Reads a Matrix Market file (array or coordinate, general or symmetric)
/// into a dense symmetric matrix.
inline SymmetricMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path + ": cannot open");
    std::string header;
    if (!std::getline(in, header) || header.rfind("%%MatrixMarket", 0) != 0)
        throw FormatError(path + ": missing MatrixMarket header");
    std::istringstream hs(header);
    std::string tag, object, format, field, symmetry;
    hs >> tag >> object >> format >> field >> symmetry;
    object = detail::lower(object);
    format = detail::lower(format);
    field = detail::lower(field);
    symmetry = detail::lower(symmetry);
    if (object != "matrix" || (field != "real" && field != "integer"))
        throw FormatError(path + ": unsupported MatrixMarket type");
    if (symmetry != "general" && symmetry != "symmetric")
        throw FormatError(path + ": unsupported symmetry '" + symmetry + "'");

    std::istringstream sizes(detail::next_data_line(in, path));
    long rows = 0, cols = 0, nnz = 0;
    if (format == "array") {
        if (!(sizes >> rows >> cols)) throw FormatError(path + ": bad size line");
    } else if (format == "coordinate") {
        if (!(sizes >> rows >> cols >> nnz)) throw FormatError(path + ": bad size line");
    } else {
        throw FormatError(path + ": unsupported format '" + format + "'");
    }
    if (rows != cols || rows < 1) throw FormatError(path + ": matrix must be square");
    const int p = static_cast<int>(rows);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
    std::istringstream body(detail::data_body(in));

    if (format == "array") {
        const bool sym = symmetry == "symmetric";
        for (int j = 0; j < p; ++j) {
            for (int i = sym ? j : 0; i < p; ++i) {
                double v;
                if (!(body >> v)) throw FormatError(path + ": bad or missing array value");
                m(i, j) = v;
                if (sym) m(j, i) = v;
            }
        }
    } else {
        for (long k = 0; k < nnz; ++k) {
            long i, j;
            double v;
            if (!(body >> i >> j >> v)) throw FormatError(path + ": bad coordinate entry");
            if (i < 1 || j < 1 || i > p || j > p) throw FormatError(path + ": index out of range");
            m(i - 1, j - 1) = v;
            if (symmetry == "symmetric") m(j - 1, i - 1) = v;
        }
    }
    try {
        return SymmetricMatrix::from_dense(std::move(m));
    } catch (const std::invalid_argument& e) {
        throw FormatError(path + ": " + e.what());
    }
}

/// Numeric CSV (or whitespace-separated) table: n rows of p values each.
inline Eigen::MatrixXd read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path + ": cannot open");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!ls.eof()) throw FormatError(path + ": non-numeric value");
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size())
            throw FormatError(path + ": ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError(path + ": no data");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

/// Sample covariance of an n x p data table, centered by the column means.
/// ddof = 0 gives the 1/n normalization the generation protocol uses.
inline SymmetricMatrix covariance_from_data(const Eigen::MatrixXd& data, int ddof = 0) {
    const auto n = data.rows();
    if (n - ddof < 1) throw std::invalid_argument("covariance_from_data: not enough rows");
    const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    return SymmetricMatrix::symmetrize(centered.transpose() * centered /
                                       static_cast<double>(n - ddof));
}

/// One cluster per line, whitespace-separated 1-based vertex indices.
inline std::vector<std::vector<int>> read_partition_file(const std::string& path, int p) {
    std::ifstream in(path);
    if (!in) throw FormatError(path + ": cannot open");
    std::vector<std::vector<int>> clusters;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<int> cluster;
        long v;
        while (ls >> v) {
            if (v < 1 || v > p) throw FormatError(path + ": vertex index out of range");
            cluster.push_back(static_cast<int>(v - 1));
        }
        if (!ls.eof()) throw FormatError(path + ": non-integer vertex index");
        if (!cluster.empty()) clusters.push_back(std::move(cluster));
    }
    if (clusters.empty()) throw FormatError(path + ": no clusters");
    return clusters;
}

inline nlohmann::json report_to_json(const EstimationReport& report) {
    nlohmann::json j;
    j["p"] = report.p;
    j["edges"] = report.edge_count;
    j["bridges"] = report.bridge_count;
    j["clusters"] = report.cluster_count;
    j["cluster_sizes"] = report.cluster_sizes;
    j["cluster_solve_ms"] = report.cluster_solve_ms;
    j["cluster_iterations"] = report.cluster_iterations;
    j["decomposition_ms"] = report.decomposition_ms;
    j["assembly_ms"] = report.assembly_ms;
    j["total_ms"] = report.total_ms;
    j["kkt_residual"] = report.kkt_residual;
    j["objective"] = report.objective;
    j["converged"] = report.converged;
    j["decomposed"] = report.decomposed;
    j["threads"] = report.threads;
    if (!report.config_echo.empty())
        j["config"] = nlohmann::json::parse(report.config_echo, nullptr, false);
    return j;
}

inline std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    std::uint64_t h = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize k = 0; k < in.gcount(); ++k) {
            h ^= static_cast<unsigned char>(buf[k]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

}  // namespace mtp2

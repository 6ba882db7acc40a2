#ifndef VASMG_MATRIX_MARKET_HPP
#define VASMG_MATRIX_MARKET_HPP

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <vasmg/sparse.hpp>

namespace vasmg::io {

namespace detail {

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline std::ifstream open_in(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw error(error_kind::input, "cannot open " + path);
    return in;
}

inline std::ofstream open_out(const std::string &path) {
    std::ofstream out(path);
    if (!out) throw error(error_kind::input, "cannot write " + path);
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
}

} // namespace detail

/// Reads a coordinate real matrix ("general" or "symmetric"; the latter is
/// expanded to the full pattern). Indices are 1-based on disk.
inline SparseMatrix read_matrix_market(std::istream &in) {
    std::string line;
    if (!std::getline(in, line)) throw error(error_kind::input, "matrix market: empty stream");

    std::istringstream banner(detail::lowercase(line));
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%matrixmarket" || object != "matrix" || format != "coordinate")
        throw error(error_kind::input, "matrix market line 1: expected '%%MatrixMarket matrix coordinate ...'");
    if (field != "real" && field != "integer")
        throw error(error_kind::input, "matrix market line 1: unsupported field '" + field + "'");
    if (symmetry != "general" && symmetry != "symmetric")
        throw error(error_kind::input, "matrix market line 1: unsupported symmetry '" + symmetry + "'");
    const bool symmetric = symmetry == "symmetric";

    std::size_t lineno = 1;
    auto next_data_line = [&](std::string &out) {
        while (std::getline(in, out)) {
            ++lineno;
            auto first = out.find_first_not_of(" \t\r");
            if (first == std::string::npos || out[first] == '%') continue;
            return true;
        }
        return false;
    };

    if (!next_data_line(line)) throw error(error_kind::input, "matrix market: missing size line");
    std::size_t n = 0, m = 0, nnz = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> n >> m >> nnz))
            throw error(error_kind::input, "matrix market line " + std::to_string(lineno) + ": bad size line");
    }

    std::vector<Triplet> entries;
    entries.reserve(symmetric ? 2 * nnz : nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
        if (!next_data_line(line))
            throw error(error_kind::input, "matrix market: expected " + std::to_string(nnz) + " entries, got " +
                                               std::to_string(k));
        std::istringstream ss(line);
        std::size_t i = 0, j = 0;
        double v = 0;
        if (!(ss >> i >> j >> v) || i == 0 || j == 0 || i > n || j > m)
            throw error(error_kind::input, "matrix market line " + std::to_string(lineno) + ": bad entry");
        entries.push_back({i - 1, j - 1, v});
        if (symmetric && i != j) entries.push_back({j - 1, i - 1, v});
    }
    return SparseMatrix::from_triplets(n, m, std::move(entries));
}

inline SparseMatrix read_matrix_market(const std::string &path) {
    auto in = detail::open_in(path);
    return read_matrix_market(in);
}

/// Always writes the full pattern as "general".
inline void write_matrix_market(std::ostream &out, const SparseMatrix &A) {
    const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.rows() << ' ' << A.cols() << ' ' << A.nonzeros() << '\n';
    for (index_t i = 0; i < A.rows(); ++i) {
        auto cols = A.row_cols(i);
        auto vals = A.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k) out << i + 1 << ' ' << cols[k] + 1 << ' ' << vals[k] << '\n';
    }
    out.precision(prec);
}

inline void write_matrix_market(const std::string &path, const SparseMatrix &A) {
    auto out = detail::open_out(path);
    write_matrix_market(out, A);
}

/// Plain-text vectors: one value per line, '%' or '#' comment lines allowed.
/// A Matrix Market "array" header is accepted and skipped along with its size line.
inline Vector read_vector(std::istream &in) {
    Vector v;
    std::string line;
    bool skip_size = false;
    while (std::getline(in, line)) {
        if (line.rfind("%%MatrixMarket", 0) == 0) {
            skip_size = true;
            continue;
        }
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '%' || line[first] == '#') continue;
        if (skip_size) {
            skip_size = false;
            continue;
        }
        std::istringstream ss(line);
        double x = 0;
        if (!(ss >> x)) throw error(error_kind::input, "vector file: bad value '" + line + "'");
        v.push_back(x);
    }
    return v;
}

inline Vector read_vector(const std::string &path) {
    auto in = detail::open_in(path);
    return read_vector(in);
}

inline void write_vector(std::ostream &out, std::span<const double> v) {
    const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
    for (double x : v) out << x << '\n';
    out.precision(prec);
}

inline void write_vector(const std::string &path, std::span<const double> v) {
    auto out = detail::open_out(path);
    write_vector(out, v);
}

} // namespace vasmg::io

#endif

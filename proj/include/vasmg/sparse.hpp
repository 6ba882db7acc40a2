#ifndef VASMG_SPARSE_HPP
#define VASMG_SPARSE_HPP

/**
 * \file   vasmg/sparse.hpp
 * \brief  Compressed-row sparse matrices, dense vectors and the dense
 *         Cholesky factorization used on the coarsest level.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <vasmg/error.hpp>

namespace vasmg {

using index_t = std::size_t;
using Vector  = std::vector<double>;

/// One (row, col, value) entry used when assembling a matrix.
struct Triplet {
    index_t row;
    index_t col;
    double  value;
};

/// Compressed sparse row matrix.
///
/// Column indices inside a row are strictly increasing. Values are never NaN.
/// The object is immutable once built; all operations return new matrices.
class SparseMatrix {
  public:
    SparseMatrix() : row_offsets_(1, 0) {}

    /// Takes ownership of raw CSR arrays and validates every invariant.
    SparseMatrix(index_t nrows, index_t ncols, std::vector<index_t> row_offsets,
                 std::vector<index_t> col_indices, std::vector<double> values)
        : nrows_(nrows), ncols_(ncols), row_offsets_(std::move(row_offsets)),
          col_indices_(std::move(col_indices)), values_(std::move(values)) {
        validate();
    }

    /// Builds from unordered triplets; duplicates are summed.
    static SparseMatrix from_triplets(index_t nrows, index_t ncols,
                                      std::vector<Triplet> entries) {
        for (const auto &t : entries)
            detail::require_dims(t.row < nrows && t.col < ncols,
                                 "triplet (" + std::to_string(t.row) + ", " +
                                     std::to_string(t.col) + ") outside " +
                                     std::to_string(nrows) + "x" + std::to_string(ncols));

        std::stable_sort(entries.begin(), entries.end(), [](const Triplet &a, const Triplet &b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });

        std::vector<index_t> ptr(nrows + 1, 0);
        std::vector<index_t> col;
        std::vector<double>  val;
        col.reserve(entries.size());
        val.reserve(entries.size());

        for (std::size_t k = 0; k < entries.size();) {
            const index_t r = entries[k].row, c = entries[k].col;
            double sum = 0;
            for (; k < entries.size() && entries[k].row == r && entries[k].col == c; ++k)
                sum += entries[k].value;
            col.push_back(c);
            val.push_back(sum);
            ++ptr[r + 1];
        }
        std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
        return SparseMatrix(nrows, ncols, std::move(ptr), std::move(col), std::move(val));
    }

    static SparseMatrix identity(index_t n) {
        std::vector<index_t> ptr(n + 1), col(n);
        std::iota(ptr.begin(), ptr.end(), index_t{0});
        std::iota(col.begin(), col.end(), index_t{0});
        return SparseMatrix(n, n, std::move(ptr), std::move(col), Vector(n, 1.0));
    }

    static SparseMatrix zero(index_t nrows, index_t ncols) {
        return SparseMatrix(nrows, ncols, std::vector<index_t>(nrows + 1, 0), {}, {});
    }

    index_t rows() const noexcept { return nrows_; }
    index_t cols() const noexcept { return ncols_; }
    index_t nonzeros() const noexcept { return values_.size(); }

    std::span<const index_t> row_offsets() const noexcept { return row_offsets_; }
    std::span<const index_t> col_indices() const noexcept { return col_indices_; }
    std::span<const double>  values() const noexcept { return values_; }

    std::span<const index_t> row_cols(index_t i) const noexcept {
        return {col_indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
    }
    std::span<const double> row_vals(index_t i) const noexcept {
        return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
    }

    /// Stored value at (i, j), or zero when (i, j) is not in the pattern.
    double at(index_t i, index_t j) const {
        auto cols = row_cols(i);
        auto it   = std::lower_bound(cols.begin(), cols.end(), j);
        if (it == cols.end() || *it != j) return 0.0;
        return values_[row_offsets_[i] + static_cast<index_t>(it - cols.begin())];
    }

    /// Largest absolute stored value.
    double max_abs() const noexcept {
        double m = 0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    bool operator==(const SparseMatrix &) const = default;

  private:
    void validate() const {
        detail::require_dims(row_offsets_.size() == nrows_ + 1, "row_offsets must have nrows+1 entries");
        detail::require_dims(row_offsets_.front() == 0, "row_offsets must start at 0");
        detail::require_dims(row_offsets_.back() == values_.size() &&
                                 col_indices_.size() == values_.size(),
                             "row_offsets/col_indices/values lengths disagree");
        for (index_t i = 0; i < nrows_; ++i) {
            detail::require_dims(row_offsets_[i] <= row_offsets_[i + 1], "row_offsets must be non-decreasing");
            for (index_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
                detail::require_dims(col_indices_[k] < ncols_, "column index out of range in row " + std::to_string(i));
                detail::require_dims(k == row_offsets_[i] || col_indices_[k - 1] < col_indices_[k],
                                     "column indices not strictly increasing in row " + std::to_string(i));
                detail::require(!std::isnan(values_[k]), error_kind::numerical,
                                "NaN stored in row " + std::to_string(i));
            }
        }
    }

    index_t nrows_ = 0;
    index_t ncols_ = 0;
    std::vector<index_t> row_offsets_;
    std::vector<index_t> col_indices_;
    std::vector<double>  values_;
};

//---------------------------------------------------------------------------
// Vector kernels
//---------------------------------------------------------------------------
inline double dot(std::span<const double> x, std::span<const double> y) {
    detail::require_dims(x.size() == y.size(), "dot: size mismatch");
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

/// Returns alpha * x + y.
inline Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
    detail::require_dims(x.size() == y.size(), "axpy: size mismatch");
    Vector z(y.begin(), y.end());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] += alpha * x[i];
    return z;
}

/// y += alpha * x, in place.
inline void axpy_inplace(double alpha, std::span<const double> x, std::span<double> y) {
    detail::require_dims(x.size() == y.size(), "axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

//---------------------------------------------------------------------------
// Matrix kernels
//---------------------------------------------------------------------------

/// y = A x written into caller storage.
inline void spmv(const SparseMatrix &A, std::span<const double> x, std::span<double> y) {
    detail::require_dims(A.cols() == x.size() && A.rows() == y.size(), "spmv: dimension mismatch");
    const auto ptr = A.row_offsets();
    const auto col = A.col_indices();
    const auto val = A.values();
    for (index_t i = 0; i < A.rows(); ++i) {
        double s = 0;
        for (index_t k = ptr[i]; k < ptr[i + 1]; ++k) s += val[k] * x[col[k]];
        y[i] = s;
    }
}

inline Vector spmv(const SparseMatrix &A, std::span<const double> x) {
    Vector y(A.rows());
    spmv(A, x, y);
    return y;
}

inline SparseMatrix transpose(const SparseMatrix &A) {
    const index_t n = A.rows(), m = A.cols();
    const auto ptr = A.row_offsets();
    const auto col = A.col_indices();
    const auto val = A.values();

    std::vector<index_t> tptr(m + 1, 0);
    for (index_t c : col) ++tptr[c + 1];
    std::partial_sum(tptr.begin(), tptr.end(), tptr.begin());

    std::vector<index_t> tcol(A.nonzeros());
    std::vector<double>  tval(A.nonzeros());
    std::vector<index_t> head(tptr.begin(), tptr.end() - 1);

    // Rows are visited in increasing order, so each transposed row comes out sorted.
    for (index_t i = 0; i < n; ++i) {
        for (index_t k = ptr[i]; k < ptr[i + 1]; ++k) {
            const index_t dst = head[col[k]]++;
            tcol[dst] = i;
            tval[dst] = val[k];
        }
    }
    return SparseMatrix(m, n, std::move(tptr), std::move(tcol), std::move(tval));
}

/// Sparse product A * B. Every structural product entry is kept, even if it
/// cancels to zero.
inline SparseMatrix multiply(const SparseMatrix &A, const SparseMatrix &B) {
    detail::require_dims(A.cols() == B.rows(), "multiply: inner dimensions differ");
    const index_t n = A.rows(), m = B.cols();

    std::vector<index_t> ptr(n + 1, 0);
    std::vector<index_t> col;
    std::vector<double>  val;

    std::vector<std::ptrdiff_t> marker(m, -1);
    std::vector<index_t> row_cols;
    for (index_t i = 0; i < n; ++i) {
        row_cols.clear();
        const index_t row_begin = col.size();
        for (index_t ka = A.row_offsets()[i]; ka < A.row_offsets()[i + 1]; ++ka) {
            const index_t j  = A.col_indices()[ka];
            const double  aij = A.values()[ka];
            for (index_t kb = B.row_offsets()[j]; kb < B.row_offsets()[j + 1]; ++kb) {
                const index_t c = B.col_indices()[kb];
                if (marker[c] < 0) {
                    marker[c] = static_cast<std::ptrdiff_t>(col.size());
                    col.push_back(c);
                    val.push_back(aij * B.values()[kb]);
                } else {
                    val[static_cast<index_t>(marker[c])] += aij * B.values()[kb];
                }
            }
        }
        // Sort the freshly produced row by column.
        const index_t len = col.size() - row_begin;
        std::vector<index_t> order(len);
        std::iota(order.begin(), order.end(), row_begin);
        std::sort(order.begin(), order.end(), [&](index_t a, index_t b) { return col[a] < col[b]; });
        std::vector<index_t> sc(len);
        std::vector<double>  sv(len);
        for (index_t k = 0; k < len; ++k) {
            sc[k] = col[order[k]];
            sv[k] = val[order[k]];
        }
        for (index_t k = 0; k < len; ++k) {
            marker[sc[k]]      = -1;
            col[row_begin + k] = sc[k];
            val[row_begin + k] = sv[k];
        }
        ptr[i + 1] = col.size();
    }
    return SparseMatrix(n, m, std::move(ptr), std::move(col), std::move(val));
}

/// Galerkin-style product R * A * P, computed as R * (A * P).
inline SparseMatrix triple_product(const SparseMatrix &R, const SparseMatrix &A, const SparseMatrix &P) {
    detail::require_dims(R.cols() == A.rows() && A.cols() == P.rows(), "triple_product: dimension mismatch");
    return multiply(R, multiply(A, P));
}

/// max |A_ij - A_ji| over the union of both patterns; requires a square matrix.
inline double asymmetry(const SparseMatrix &A) {
    detail::require_dims(A.rows() == A.cols(), "asymmetry: matrix is not square");
    double worst = 0;
    for (index_t i = 0; i < A.rows(); ++i) {
        auto cols = A.row_cols(i);
        auto vals = A.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
            worst = std::max(worst, std::abs(vals[k] - A.at(cols[k], i)));
    }
    return worst;
}

/// Diagonal of a square matrix (zero where no diagonal entry is stored).
inline Vector diagonal(const SparseMatrix &A) {
    Vector d(std::min(A.rows(), A.cols()), 0.0);
    for (index_t i = 0; i < d.size(); ++i) d[i] = A.at(i, i);
    return d;
}

//---------------------------------------------------------------------------
// Dense matrices
//---------------------------------------------------------------------------

/// Square dense matrix stored row-major.
class DenseMatrix {
  public:
    DenseMatrix() = default;
    explicit DenseMatrix(index_t order) : order_(order), a_(order * order, 0.0) {}
    DenseMatrix(index_t order, std::vector<double> entries) : order_(order), a_(std::move(entries)) {
        detail::require_dims(a_.size() == order_ * order_, "dense matrix needs order^2 entries");
    }

    static DenseMatrix from_sparse(const SparseMatrix &A) {
        detail::require_dims(A.rows() == A.cols(), "densify: matrix is not square");
        DenseMatrix D(A.rows());
        for (index_t i = 0; i < A.rows(); ++i) {
            auto cols = A.row_cols(i);
            auto vals = A.row_vals(i);
            for (std::size_t k = 0; k < cols.size(); ++k) D(i, cols[k]) = vals[k];
        }
        return D;
    }

    index_t order() const noexcept { return order_; }
    double &operator()(index_t i, index_t j) { return a_[i * order_ + j]; }
    double  operator()(index_t i, index_t j) const { return a_[i * order_ + j]; }
    std::span<const double> entries() const noexcept { return a_; }

    Vector multiply(std::span<const double> x) const {
        detail::require_dims(x.size() == order_, "dense multiply: dimension mismatch");
        Vector y(order_, 0.0);
        for (index_t i = 0; i < order_; ++i) {
            double s = 0;
            for (index_t j = 0; j < order_; ++j) s += a_[i * order_ + j] * x[j];
            y[i] = s;
        }
        return y;
    }

  private:
    index_t order_ = 0;
    std::vector<double> a_;
};

/// Lower-triangular Cholesky factor L with M = L L^T.
class Cholesky {
  public:
    Cholesky() = default;

    explicit Cholesky(const DenseMatrix &M) : n_(M.order()), l_(M.order() * M.order(), 0.0) {
        for (index_t j = 0; j < n_; ++j) {
            double d = M(j, j);
            for (index_t k = 0; k < j; ++k) d -= l_[j * n_ + k] * l_[j * n_ + k];
            if (!(d > 0.0))
                throw error(error_kind::numerical,
                            "matrix not SPD (non-positive pivot at row " + std::to_string(j) + ")");
            const double ljj = std::sqrt(d);
            l_[j * n_ + j] = ljj;
            for (index_t i = j + 1; i < n_; ++i) {
                double s = M(i, j);
                const double *li = &l_[i * n_];
                const double *lj = &l_[j * n_];
                for (index_t k = 0; k < j; ++k) s -= li[k] * lj[k];
                l_[i * n_ + j] = s / ljj;
            }
        }
    }

    index_t order() const noexcept { return n_; }

    Vector solve(std::span<const double> b) const {
        detail::require_dims(b.size() == n_, "cholesky solve: dimension mismatch");
        Vector x(b.begin(), b.end());
        for (index_t i = 0; i < n_; ++i) {
            double s = x[i];
            for (index_t k = 0; k < i; ++k) s -= l_[i * n_ + k] * x[k];
            x[i] = s / l_[i * n_ + i];
        }
        for (index_t ii = n_; ii-- > 0;) {
            double s = x[ii];
            for (index_t k = ii + 1; k < n_; ++k) s -= l_[k * n_ + ii] * x[k];
            x[ii] = s / l_[ii * n_ + ii];
        }
        return x;
    }

  private:
    index_t n_ = 0;
    std::vector<double> l_;
};

inline Vector dense_cholesky_solve(const DenseMatrix &M, std::span<const double> b) {
    return Cholesky(M).solve(b);
}

} // namespace vasmg

#endif

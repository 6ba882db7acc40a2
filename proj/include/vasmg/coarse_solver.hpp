#ifndef VASMG_COARSE_SOLVER_HPP
#define VASMG_COARSE_SOLVER_HPP

/**
 * \file   vasmg/coarse_solver.hpp
 * \brief  LAPACK-backed dense factorization of the coarsest level.
 *
 * Needs LAPACK and BLAS at link time.
 */

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <vasmg/error.hpp>
#include <vasmg/sparse.hpp>

extern "C" {
void dpotrf_(const char *uplo, const int *n, double *a, const int *lda, int *info);
void dpotrs_(const char *uplo, const int *n, const int *nrhs, const double *a, const int *lda, double *b,
             const int *ldb, int *info);
void dpstrf_(const char *uplo, const int *n, double *a, const int *lda, int *piv, int *rank, const double *tol,
             double *work, int *info);
void dtrsm_(const char *side, const char *uplo, const char *transa, const char *diag, const int *m, const int *n,
            const double *alpha, const double *a, const int *lda, double *b, const int *ldb);
}

namespace vasmg {

/// Cholesky factorization of a symmetric positive semidefinite matrix.
///
/// The plain factorization is tried first. If it fails, a diagonally pivoted
/// factorization finds the numerical rank r: pivots at or below `rel_tol`
/// times the largest diagonal entry are null. solve() then sets the n - r
/// dependent unknowns to zero and solves for the others exactly, which is a
/// solution whenever b lies in the range of M; the map b -> x is symmetric
/// positive semidefinite. If the Schur complement of the kept block has a
/// diagonal entry below -rel_tol times the largest diagonal, M is indefinite
/// and is rejected.
class CoarseSolver {
  public:
    static constexpr double default_rel_tol = 1e-10;

    CoarseSolver() = default;

    explicit CoarseSolver(const DenseMatrix &M, double rel_tol = default_rel_tol)
        : n_(static_cast<int>(M.order())), rank_(n_) {
        if (n_ == 0) return;
        double max_diag = 0;
        for (index_t i = 0; i < M.order(); ++i) max_diag = std::max(max_diag, M(i, i));
        if (!(max_diag > 0)) throw error(error_kind::numerical, "matrix not SPD (non-positive pivot at row 0)");

        // Row-major storage of a symmetric matrix reads as column-major.
        a_.assign(M.entries().begin(), M.entries().end());
        int info = 0;
        dpotrf_("L", &n_, a_.data(), &n_, &info);
        if (info == 0) return;

        a_.assign(M.entries().begin(), M.entries().end());
        piv_.assign(static_cast<std::size_t>(n_), 0);
        std::vector<double> work(2 * static_cast<std::size_t>(n_));
        const double tol = rel_tol * max_diag;
        dpstrf_("L", &n_, a_.data(), &n_, piv_.data(), &rank_, &tol, work.data(), &info);
        if (info < 0) throw error(error_kind::numerical, "dpstrf: illegal argument " + std::to_string(-info));
        check_schur(M, tol);
    }

    index_t order() const noexcept { return static_cast<index_t>(n_); }
    index_t rank() const noexcept { return static_cast<index_t>(rank_); }
    bool semidefinite() const noexcept { return rank_ < n_; }

    /// Unknowns treated as dependent (zero in every solution).
    std::vector<index_t> dependent() const {
        std::vector<index_t> out;
        if (!piv_.empty())
            for (int k = rank_; k < n_; ++k) out.push_back(static_cast<index_t>(piv_[k] - 1));
        std::sort(out.begin(), out.end());
        return out;
    }

    Vector solve(std::span<const double> b) const {
        detail::require_dims(b.size() == static_cast<index_t>(n_), "coarse solve: dimension mismatch");
        if (n_ == 0) return {};
        const int one = 1;
        int info = 0;
        if (piv_.empty()) {
            Vector x(b.begin(), b.end());
            dpotrs_("L", &n_, &one, a_.data(), &n_, x.data(), &n_, &info);
            return x;
        }
        // P^T M P = L L^T on the leading rank_ block.
        Vector y(static_cast<std::size_t>(rank_));
        for (int i = 0; i < rank_; ++i) y[i] = b[static_cast<std::size_t>(piv_[i] - 1)];
        if (rank_ > 0) dpotrs_("L", &rank_, &one, a_.data(), &n_, y.data(), &rank_, &info);
        Vector x(static_cast<std::size_t>(n_), 0.0);
        for (int i = 0; i < rank_; ++i) x[static_cast<std::size_t>(piv_[i] - 1)] = y[i];
        return x;
    }

  private:
    // diag(M22 - W^T W) with W = L11^{-1} M12 over the dropped pivots.
    void check_schur(const DenseMatrix &M, double tol) const {
        const int k = n_ - rank_;
        if (k == 0) return;
        std::vector<double> w(static_cast<std::size_t>(rank_) * static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c)
            for (int i = 0; i < rank_; ++i)
                w[static_cast<std::size_t>(c) * rank_ + i] =
                    M(static_cast<index_t>(piv_[i] - 1), static_cast<index_t>(piv_[rank_ + c] - 1));
        const double one = 1.0;
        if (rank_ > 0) dtrsm_("L", "L", "N", "N", &rank_, &k, &one, a_.data(), &n_, w.data(), &rank_);
        for (int c = 0; c < k; ++c) {
            const auto pk = static_cast<index_t>(piv_[rank_ + c] - 1);
            double s = M(pk, pk);
            for (int i = 0; i < rank_; ++i) s -= w[static_cast<std::size_t>(c) * rank_ + i] * w[static_cast<std::size_t>(c) * rank_ + i];
            if (s < -tol)
                throw error(error_kind::numerical,
                            "matrix not SPD (non-positive pivot at row " + std::to_string(pk) + ")");
        }
    }

    int n_ = 0;
    int rank_ = 0;
    std::vector<double> a_;
    std::vector<int> piv_;
};

} // namespace vasmg

#endif

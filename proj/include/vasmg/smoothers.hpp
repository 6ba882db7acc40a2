#ifndef VASMG_SMOOTHERS_HPP
#define VASMG_SMOOTHERS_HPP

#include <span>
#include <string>
#include <vector>

#include <vasmg/error.hpp>
#include <vasmg/sparse.hpp>

namespace vasmg {

enum class SweepOrder { forward, backward, symmetric };

struct SmootherConfig {
    unsigned sweeps = 3;
    SweepOrder order = SweepOrder::forward;
};

/// Gauss-Seidel relaxation on a fixed matrix. Diagonal positions are looked
/// up once.
class GaussSeidel {
  public:
    explicit GaussSeidel(const SparseMatrix &A) : A_(&A), diag_pos_(A.rows()) {
        detail::require_dims(A.rows() == A.cols(), "Gauss-Seidel needs a square matrix");
        for (index_t i = 0; i < A.rows(); ++i) {
            auto cols = A.row_cols(i);
            auto it = std::lower_bound(cols.begin(), cols.end(), i);
            const bool found = it != cols.end() && *it == i;
            detail::require(found && A.values()[A.row_offsets()[i] + static_cast<index_t>(it - cols.begin())] != 0.0,
                            error_kind::numerical, "Gauss-Seidel: zero diagonal entry in row " + std::to_string(i));
            diag_pos_[i] = A.row_offsets()[i] + static_cast<index_t>(it - cols.begin());
        }
    }

    void forward(std::span<const double> F, std::span<double> U) const {
        for (index_t i = 0; i < A_->rows(); ++i) relax(i, F, U);
    }

    void backward(std::span<const double> F, std::span<double> U) const {
        for (index_t i = A_->rows(); i-- > 0;) relax(i, F, U);
    }

    void apply(std::span<const double> F, std::span<double> U, const SmootherConfig &cfg) const {
        detail::require_dims(F.size() == A_->rows() && U.size() == A_->rows(), "Gauss-Seidel: dimension mismatch");
        for (unsigned s = 0; s < cfg.sweeps; ++s) {
            switch (cfg.order) {
                case SweepOrder::forward:  forward(F, U); break;
                case SweepOrder::backward: backward(F, U); break;
                case SweepOrder::symmetric:
                    forward(F, U);
                    backward(F, U);
                    break;
            }
        }
    }

  private:
    void relax(index_t i, std::span<const double> F, std::span<double> U) const {
        const auto ptr = A_->row_offsets();
        const auto col = A_->col_indices();
        const auto val = A_->values();
        // Both halves are summed outward from the diagonal, so a sweep on the
        // index-reversed system rounds identically.
        const index_t d = diag_pos_[i];
        double lower = 0, upper = 0;
        for (index_t k = d; k-- > ptr[i];) lower += val[k] * U[col[k]];
        for (index_t k = d + 1; k < ptr[i + 1]; ++k) upper += val[k] * U[col[k]];
        U[i] = (F[i] - (lower + upper)) / val[d];
    }

    const SparseMatrix *A_;
    std::vector<index_t> diag_pos_;
};

/// Returns U after cfg.sweeps Gauss-Seidel sweeps.
inline Vector gs_sweep(const SparseMatrix &A, std::span<const double> F, std::span<const double> U,
                       const SmootherConfig &cfg) {
    Vector out(U.begin(), U.end());
    if (cfg.sweeps == 0) return out;
    GaussSeidel(A).apply(F, out, cfg);
    return out;
}

struct GsSolveResult {
    Vector U;
    index_t iterations = 0;
    double err = 0;
};

/// Forward Gauss-Seidel iteration until ||U - U_old|| < eps or k_max sweeps.
inline GsSolveResult gs_solve(const SparseMatrix &A, std::span<const double> F, std::span<const double> U0,
                              index_t k_max, double eps) {
    detail::require(k_max >= 1, error_kind::input, "gs_solve: k_max must be >= 1");
    detail::require_dims(F.size() == A.rows() && U0.size() == A.rows(), "gs_solve: dimension mismatch");
    GaussSeidel gs(A);
    GsSolveResult res{Vector(U0.begin(), U0.end()), 0, 0};
    Vector old(res.U.size());
    double first = -1;
    for (index_t k = 0; k < k_max; ++k) {
        old = res.U;
        gs.forward(F, res.U);
        ++res.iterations;
        double e2 = 0;
        for (index_t i = 0; i < old.size(); ++i) e2 += (res.U[i] - old[i]) * (res.U[i] - old[i]);
        res.err = std::sqrt(e2);
        if (res.err < eps) break;
        if (first < 0) first = res.err;
        if (res.err > 1e6 * first)
            throw error(error_kind::numerical, "gs_solve: iteration diverges (update norm grew by more than 1e6x)");
    }
    return res;
}

} // namespace vasmg

#endif

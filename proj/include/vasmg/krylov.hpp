#ifndef VASMG_KRYLOV_HPP
#define VASMG_KRYLOV_HPP

/**
 * \file   vasmg/krylov.hpp
 * \brief  Preconditioned conjugate gradients with convergence reporting and
 *         a Lanczos-based condition number estimate.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <vasmg/elasticity.hpp>
#include <vasmg/error.hpp>
#include <vasmg/sparse.hpp>

namespace vasmg {

struct IdentityPreconditioner {
    Vector operator()(std::span<const double> r) const { return Vector(r.begin(), r.end()); }
};

class JacobiPreconditioner {
  public:
    explicit JacobiPreconditioner(const SparseMatrix &A) : inv_diag_(diagonal(A)) {
        for (index_t i = 0; i < inv_diag_.size(); ++i) {
            detail::require(inv_diag_[i] > 0, error_kind::numerical,
                            "Jacobi: non-positive diagonal in row " + std::to_string(i));
            inv_diag_[i] = 1.0 / inv_diag_[i];
        }
    }
    Vector operator()(std::span<const double> r) const {
        Vector z(r.size());
        for (index_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
        return z;
    }

  private:
    Vector inv_diag_;
};

enum class ResidualNorm {
    rhs,              ///< ||F - A U|| / ||F||
    initial_residual  ///< ||F - A U|| / ||F - A U0||
};

struct PcgOptions {
    index_t max_iterations = 0; ///< 0 selects 10 sqrt(n) + 1000
    double tolerance = 1e-6;
    ResidualNorm norm = ResidualNorm::rhs;
    /// Recompute the true residual every this many iterations (0 disables).
    index_t residual_replacement = 50;
    /// Optional observer called after every iteration with (k, rel_res).
    std::function<void(index_t, double)> on_iteration;
};

inline index_t default_max_iterations(index_t n) {
    return static_cast<index_t>(10.0 * std::sqrt(static_cast<double>(n))) + 1000;
}

struct SolveReport {
    index_t iterations = 0;
    /// Relative residuals, entry 0 for the initial guess.
    std::vector<double> rel_res_history;
    /// Wall-clock seconds since the start of the solve for each history entry.
    std::vector<double> wall_seconds;
    bool converged = false;
    double setup_seconds = 0;
    double apply_seconds = 0;
    double total_seconds = 0;
    std::optional<double> condition_estimate;
    /// ||F - A U|| / ||F|| and ||F - A U|| / ||F - A U0|| of the final iterate
    /// (recursive residual).
    double final_rel_res_rhs = 0;
    double final_rel_res_initial = 0;
    /// CG coefficients, kept for the Lanczos estimate.
    std::vector<double> alphas;
    std::vector<double> betas;
    /// |‖r_recursive‖ - ‖r_true‖| / ‖F‖ at every residual replacement.
    std::vector<double> replacement_drift;
};

namespace detail {

/// Number of eigenvalues of the symmetric tridiagonal (d, e) below x.
inline index_t sturm_count(std::span<const double> d, std::span<const double> e, double x) {
    index_t count = 0;
    double q = d[0] - x;
    if (q < 0) ++count;
    for (index_t i = 1; i < d.size(); ++i) {
        if (q == 0) q = std::numeric_limits<double>::epsilon() * (std::abs(e[i - 1]) + 1e-300);
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if (q < 0) ++count;
    }
    return count;
}

/// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
inline double tridiagonal_eigenvalue(std::span<const double> d, std::span<const double> e, index_t k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (index_t i = 0; i < d.size(); ++i) {
        const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < d.size() ? std::abs(e[i]) : 0.0);
        lo = std::min(lo, d[i] - r);
        hi = std::max(hi, d[i] + r);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(std::abs(lo), std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count(d, e, mid) > k) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Estimate of kappa(BA) from the extreme eigenvalues of the Lanczos
/// tridiagonal matrix implied by the PCG coefficients:
/// T_jj = 1/alpha_j + beta_{j-1}/alpha_{j-1}, T_{j,j+1} = sqrt(beta_j)/alpha_j.
/// Absent when no iteration was performed.
inline std::optional<double> condition_estimate(std::span<const double> alphas, std::span<const double> betas) {
    const index_t m = alphas.size();
    if (m == 0) return std::nullopt;
    detail::require_dims(betas.size() + 1 >= m, "condition_estimate: need one beta per alpha but the last");
    Vector d(m), e(m > 0 ? m - 1 : 0);
    for (index_t j = 0; j < m; ++j) {
        d[j] = 1.0 / alphas[j];
        if (j > 0) d[j] += betas[j - 1] / alphas[j - 1];
        if (j + 1 < m) e[j] = std::sqrt(betas[j]) / alphas[j];
    }
    const double lmin = detail::tridiagonal_eigenvalue(d, e, 0);
    const double lmax = detail::tridiagonal_eigenvalue(d, e, m - 1);
    if (!(lmin > 0)) return std::nullopt;
    return lmax / lmin;
}

/// Preconditioned conjugate gradients. `B` maps a residual to z = B r and
/// must be symmetric positive definite.
template <class Preconditioner>
SolveReport pcg(const SparseMatrix &A, std::span<const double> F, const Preconditioner &B, Vector &U,
                const PcgOptions &opt = {}) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const index_t n = A.rows();
    detail::require_dims(A.cols() == n && F.size() == n && U.size() == n, "pcg: dimension mismatch");
    detail::require(opt.tolerance > 0, error_kind::input, "pcg: tolerance must be positive");
    const index_t k_max = opt.max_iterations ? opt.max_iterations : default_max_iterations(n);

    SolveReport rep;
    const double fnorm = norm2(F);
    Vector r = residual(A, F, U);
    double res = norm2(r);
    const double res0 = res;
    const double scale_rhs = fnorm > 0 ? fnorm : 1.0;
    const double scale_init = res0 > 0 ? res0 : 1.0;
    const double scale = opt.norm == ResidualNorm::rhs ? scale_rhs : scale_init;

    auto record = [&](double rel) {
        rep.rel_res_history.push_back(rel);
        rep.wall_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    };
    auto finish = [&] {
        rep.final_rel_res_rhs = res / scale_rhs;
        rep.final_rel_res_initial = res0 > 0 ? res / res0 : 0.0;
        rep.condition_estimate = condition_estimate(rep.alphas, rep.betas);
        rep.apply_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        rep.total_seconds = rep.setup_seconds + rep.apply_seconds;
        return rep;
    };

    record(res / scale);
    if (res / scale < opt.tolerance || res == 0) {
        rep.converged = true;
        return finish();
    }

    Vector z = B(r);
    Vector p = z;
    double rho_old = dot(r, z);
    detail::require(rho_old > 0, error_kind::numerical, "pcg: preconditioner not SPD (r^T B r <= 0)");
    Vector q(n);

    while (rep.iterations < k_max) {
        spmv(A, p, q);
        const double pq = dot(p, q);
        detail::require(pq > 0, error_kind::numerical, "pcg: matrix not SPD (p^T A p <= 0)");
        const double alpha = rho_old / pq;
        rep.alphas.push_back(alpha);
        axpy_inplace(alpha, p, U);
        axpy_inplace(-alpha, q, r);
        ++rep.iterations;

        if (opt.residual_replacement && rep.iterations % opt.residual_replacement == 0) {
            Vector rt = residual(A, F, U);
            rep.replacement_drift.push_back(std::abs(norm2(r) - norm2(rt)) / scale_rhs);
            r = std::move(rt);
        }
        res = norm2(r);
        record(res / scale);
        if (opt.on_iteration) opt.on_iteration(rep.iterations, res / scale);
        if (res / scale < opt.tolerance) {
            rep.converged = true;
            break;
        }

        z = B(r);
        const double rho_new = dot(r, z);
        detail::require(rho_new > 0, error_kind::numerical, "pcg: preconditioner not SPD (r^T B r <= 0)");
        const double beta = rho_new / rho_old;
        rep.betas.push_back(beta);
        for (index_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rho_old = rho_new;
    }
    return finish();
}

} // namespace vasmg

#endif

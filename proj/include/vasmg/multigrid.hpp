#ifndef VASMG_MULTIGRID_HPP
#define VASMG_MULTIGRID_HPP

/**
 * \file   vasmg/multigrid.hpp
 * \brief  V-cycle over a Hierarchy and its use as a preconditioner.
 *
 * Pre-smoothing sweeps forward and post-smoothing backward, so with equal
 * sweep counts one cycle from a zero initial guess is a symmetric linear
 * operator of the right-hand side.
 */

#include <chrono>
#include <memory>
#include <span>
#include <vector>

#include <vasmg/elasticity.hpp>
#include <vasmg/smoothers.hpp>
#include <vasmg/sparse.hpp>
#include <vasmg/transfer.hpp>

namespace vasmg {

enum class CycleKind { V, W /* reserved */ };

struct VCycleConfig {
    unsigned pre_sweeps = 3;
    unsigned post_sweeps = 3;
    CycleKind cycle = CycleKind::V;
    /// V-cycles per preconditioner application.
    unsigned cycles = 1;
};

namespace detail {

inline void check_cycle(const VCycleConfig &cfg) {
    require(cfg.cycle == CycleKind::V, error_kind::input, "only the V-cycle is implemented");
}

} // namespace detail

/// Smoothers bound to every level but the coarsest.
class Smoothers {
  public:
    explicit Smoothers(const Hierarchy &h) {
        for (index_t l = 0; l + 1 < h.size(); ++l) gs_.emplace_back(h.A(l));
    }
    const GaussSeidel &operator[](index_t l) const { return gs_[l]; }

  private:
    std::vector<GaussSeidel> gs_;
};

/// One V-cycle on `level` for A_level U = F, updating U in place.
inline void v_cycle(const Hierarchy &h, const Smoothers &gs, index_t level, std::span<const double> F,
                    std::span<double> U, const VCycleConfig &cfg) {
    const auto &L = h.levels[level];
    detail::require_dims(F.size() == L.A.rows() && U.size() == L.A.rows(), "v_cycle: vector size does not match level");
    if (level + 1 == h.size()) {
        const Vector x = h.coarsest->solve(F);
        std::copy(x.begin(), x.end(), U.begin());
        return;
    }
    gs[level].apply(F, U, {cfg.pre_sweeps, SweepOrder::forward});

    Vector r = residual(L.A, F, U);
    Vector rc = spmv(L.R, r);
    Vector ec(rc.size(), 0.0);
    v_cycle(h, gs, level + 1, rc, ec, cfg);
    Vector ef = spmv(L.P, ec);
    axpy_inplace(1.0, ef, U);

    gs[level].apply(F, U, {cfg.post_sweeps, SweepOrder::backward});
}

inline Vector v_cycle(const Hierarchy &h, index_t level, std::span<const double> F, std::span<const double> U0,
                      const VCycleConfig &cfg) {
    detail::check_cycle(cfg);
    Smoothers gs(h);
    Vector U(U0.begin(), U0.end());
    v_cycle(h, gs, level, F, U, cfg);
    return U;
}

/// z = B r with B = `cycles` V-cycles from a zero initial guess.
class VasmgPreconditioner {
  public:
    VasmgPreconditioner(std::shared_ptr<const Hierarchy> h, VCycleConfig cfg = {})
        : h_(std::move(h)), cfg_(cfg), gs_(*h_) {
        detail::check_cycle(cfg_);
    }
    VasmgPreconditioner(Hierarchy h, VCycleConfig cfg = {})
        : VasmgPreconditioner(std::make_shared<const Hierarchy>(std::move(h)), cfg) {}

    const Hierarchy &hierarchy() const noexcept { return *h_; }
    const VCycleConfig &config() const noexcept { return cfg_; }

    Vector apply(std::span<const double> r) const {
        Vector z(r.size(), 0.0);
        for (unsigned c = 0; c < cfg_.cycles; ++c) cycle(0, r, z);
        return z;
    }

    Vector operator()(std::span<const double> r) const { return apply(r); }

  private:
    void cycle(index_t level, std::span<const double> F, std::span<double> U) const {
        v_cycle(*h_, gs_, level, F, U, cfg_);
    }

    std::shared_ptr<const Hierarchy> h_;
    VCycleConfig cfg_;
    Smoothers gs_;
};

struct MgReport {
    Vector U;
    index_t iterations = 0;
    std::vector<double> rel_res_history;
    bool converged = false;
    double seconds = 0;
};

/// Stand-alone multigrid iteration; the relative residual is measured
/// against the initial residual ||F - A U0||.
inline MgReport mg_solve(const Hierarchy &h, std::span<const double> F, std::span<const double> U0, index_t k_max,
                         double eps, const VCycleConfig &cfg = {}) {
    detail::check_cycle(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const SparseMatrix &A = h.A(0);
    Smoothers gs(h);
    MgReport rep;
    rep.U.assign(U0.begin(), U0.end());
    const double res0 = norm2(residual(A, F, rep.U));
    rep.rel_res_history.push_back(res0 > 0 ? 1.0 : 0.0);
    if (res0 == 0) {
        rep.converged = true;
        return rep;
    }
    while (rep.iterations < k_max) {
        v_cycle(h, gs, 0, F, rep.U, cfg);
        ++rep.iterations;
        const double rel = norm2(residual(A, F, rep.U)) / res0;
        rep.rel_res_history.push_back(rel);
        if (rel < eps) {
            rep.converged = true;
            break;
        }
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

} // namespace vasmg

#endif

#ifndef VASMG_TRANSFER_HPP
#define VASMG_TRANSFER_HPP

/**
 * \file   vasmg/transfer.hpp
 * \brief  Multilinear prolongation between consecutive grids of the region
 *         tree hierarchy and Galerkin coarse operators.
 */

#include <array>
#include <chrono>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <vasmg/coarse_solver.hpp>
#include <vasmg/elasticity.hpp>
#include <vasmg/error.hpp>
#include <vasmg/region_tree.hpp>
#include <vasmg/sparse.hpp>

namespace vasmg {

/// Weights of point p against the 2^Dim corners of the closed cell
/// [low, high], in corner order.
///
/// The default is the multilinear hat function: with xi_a the relative
/// position along axis a, a corner at the high side of axis a contributes
/// xi_a and one at the low side 1 - xi_a. With `literal` set, the per-axis
/// factor is instead |corner_a - p_a| / (high_a - low_a), i.e. the
/// complementary distance ratio; this variant does not interpolate and is
/// only kept for side-by-side comparison.
template <int Dim>
std::array<double, fanout<Dim>> scalar_weights(const Point<Dim> &low, const Point<Dim> &high, const Point<Dim> &p,
                                               bool literal = false) {
    Point<Dim> xi;
    for (int a = 0; a < Dim; ++a) {
        const double h = high[a] - low[a];
        detail::require(h > 0, error_kind::geometry, "scalar_weights: degenerate cell");
        detail::require(p[a] >= low[a] && p[a] <= high[a], error_kind::geometry,
                        "scalar_weights: point outside the closed cell");
        xi[a] = (p[a] - low[a]) / h;
    }
    std::array<double, fanout<Dim>> w;
    for (int c = 0; c < fanout<Dim>; ++c) {
        double prod = 1.0;
        for (int a = 0; a < Dim; ++a) {
            const bool high_side = corner_offset<Dim>(c, a) == 1;
            if (!literal) {
                prod *= high_side ? xi[a] : 1.0 - xi[a];
            } else {
                // |x_corner - x_p| / h
                prod *= high_side ? 1.0 - xi[a] : xi[a];
            }
        }
        w[c] = prod;
    }
    return w;
}

/// Prolongation from a coarse grid with Nc vertices to Nf fine points for
/// `blocks` displacement components. Row k + a*Nf, column l + a*Nc carries
/// the scalar weight of fine point k on coarse vertex l; there is no
/// coupling between components.
struct TransferOperator {
    SparseMatrix P;
    index_t fine_count = 0;
    index_t coarse_count = 0;
    int blocks = 1;

    SparseMatrix restriction() const { return transpose(P); }
};

/// Builds the block prolongation. Fine unknowns flagged in `zero_rows` (if
/// given, length blocks*Nf) get empty rows. Exactly-zero weights are not
/// stored.
template <int Dim>
TransferOperator build_prolongation(const RegionTree<Dim> &tree, std::span<const Point<Dim>> fine_points,
                                    const CoarseLevel<Dim> &coarse, int blocks,
                                    const std::vector<bool> *zero_rows = nullptr, bool literal = false) {
    detail::require(blocks >= 1, error_kind::input, "build_prolongation: blocks must be >= 1");
    const index_t nf = fine_points.size(), nc = coarse.vertex_count();
    const auto B = static_cast<index_t>(blocks);
    detail::require_dims(zero_rows == nullptr || zero_rows->size() == B * nf,
                         "build_prolongation: zero_rows has the wrong length");

    std::vector<Triplet> t;
    t.reserve(B * nf * fanout<Dim>);
    for (index_t k = 0; k < nf; ++k) {
        const auto &cell = coarse.cells[locate_cell<Dim>(tree, coarse, fine_points[k])];
        const auto bnd = tree.bounds(cell.node);
        const auto w = scalar_weights<Dim>(bnd.low, bnd.high, fine_points[k], literal);
        for (index_t a = 0; a < B; ++a) {
            const index_t row = k + a * nf;
            if (zero_rows && (*zero_rows)[row]) continue;
            for (int c = 0; c < fanout<Dim>; ++c)
                if (w[c] != 0.0) t.push_back(Triplet{row, cell.corners[c] + a * nc, w[c]});
        }
    }
    return {SparseMatrix::from_triplets(B * nf, B * nc, std::move(t)), nf, nc, blocks};
}

namespace detail {

/// Keeps rows `rows` (in that order) of P, then drops empty columns.
/// Returns the compressed matrix and the surviving original column indices.
inline std::pair<SparseMatrix, std::vector<index_t>> compress(const SparseMatrix &P, const std::vector<index_t> &rows) {
    std::vector<index_t> new_col(P.cols(), static_cast<index_t>(-1));
    std::vector<bool> used(P.cols(), false);
    for (index_t r : rows)
        for (index_t c : P.row_cols(r)) used[c] = true;
    std::vector<index_t> kept;
    for (index_t c = 0; c < P.cols(); ++c)
        if (used[c]) {
            new_col[c] = kept.size();
            kept.push_back(c);
        }
    std::vector<index_t> ptr(rows.size() + 1, 0), col;
    std::vector<double> val;
    for (index_t i = 0; i < rows.size(); ++i) {
        auto cols = P.row_cols(rows[i]);
        auto vals = P.row_vals(rows[i]);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            col.push_back(new_col[cols[k]]);
            val.push_back(vals[k]);
        }
        ptr[i + 1] = col.size();
    }
    return {SparseMatrix(rows.size(), kept.size(), std::move(ptr), std::move(col), std::move(val)), std::move(kept)};
}

} // namespace detail

/// Multilevel operator hierarchy. Level 0 is the finite element system;
/// level l+1 is obtained from level l by A_{l+1} = P_l^T A_l P_l.
///
/// Coarse unknowns that receive no interpolation weight from any active
/// finer unknown (for instance corners touched only by constrained
/// vertices) are dropped, so `P` of each level is the block prolongation
/// restricted to the active rows and the non-empty columns.
struct Hierarchy {
    struct Level {
        SparseMatrix A;
        /// Prolongation from level+1 to this level and its transpose; empty
        /// on the coarsest level.
        SparseMatrix P;
        SparseMatrix R;
        /// Uncompressed block prolongation (diagnostics and export).
        std::optional<TransferOperator> transfer;
        /// Active unknowns of this level as indices into its block layout.
        std::vector<index_t> active;
        index_t grid_vertices = 0;
        int tree_depth = 0;      ///< 0 for the finite element level
        double setup_seconds = 0;
    };

    std::vector<Level> levels;
    std::shared_ptr<const CoarseSolver> coarsest;

    index_t size() const noexcept { return levels.size(); }
    const SparseMatrix &A(index_t l) const { return levels[l].A; }

    /// One level, solved directly.
    static Hierarchy direct(const SparseMatrix &A) {
        Hierarchy h;
        Level L;
        L.A = A;
        L.active.resize(A.rows());
        std::iota(L.active.begin(), L.active.end(), index_t{0});
        h.levels.push_back(std::move(L));
        h.coarsest = std::make_shared<const CoarseSolver>(DenseMatrix::from_sparse(A));
        return h;
    }
};

struct HierarchyOptions {
    /// Largest coarse system that is densified and factorized.
    index_t coarsest_cap = 5000;
    bool literal_weights = false;
    /// Keep the uncompressed TransferOperator of every level.
    bool keep_transfer = false;
};

/// Builds the hierarchy for a block system with `blocks` components per
/// vertex over the vertices stored in `tree`. Constrained unknowns get empty
/// prolongation rows.
template <int Dim>
Hierarchy build_hierarchy(const SparseMatrix &A, const std::vector<index_t> &constrained, int blocks,
                          const RegionTree<Dim> &tree, const HierarchyOptions &opt = {}) {
    using clock = std::chrono::steady_clock;
    const auto B = static_cast<index_t>(blocks);
    detail::require_dims(A.rows() == A.cols() && A.rows() == B * tree.vertex_count(),
                         "build_hierarchy: matrix size does not match vertices x blocks");

    Hierarchy h;
    {
        Hierarchy::Level L0;
        L0.A = A;
        L0.grid_vertices = tree.vertex_count();
        L0.active.resize(A.rows());
        std::iota(L0.active.begin(), L0.active.end(), index_t{0});
        h.levels.push_back(std::move(L0));
    }

    std::vector<bool> zero_rows(A.rows(), false);
    for (index_t c : constrained) zero_rows.at(c) = true;

    std::vector<Point<Dim>> fine_points(tree.points().begin(), tree.points().end());
    for (int depth = tree.height(); depth >= 1; --depth) {
        const auto t0 = clock::now();
        auto &fine = h.levels.back();
        auto coarse = coarse_level(tree, depth);
        auto T = build_prolongation<Dim>(tree, fine_points, coarse, blocks, &zero_rows, opt.literal_weights);
        auto [P, kept] = detail::compress(T.P, fine.active);
        detail::require(P.cols() > 0, error_kind::numerical,
                        "build_hierarchy: level at depth " + std::to_string(depth) + " has no active unknowns");

        Hierarchy::Level next;
        fine.R = transpose(P);
        next.A = triple_product(fine.R, fine.A, P);
        next.active = std::move(kept);
        next.grid_vertices = coarse.vertex_count();
        next.tree_depth = depth;
        fine.P = std::move(P);
        if (opt.keep_transfer) fine.transfer = std::move(T);

        const auto d = diagonal(next.A);
        for (index_t i = 0; i < d.size(); ++i)
            detail::require(d[i] > 0, error_kind::numerical,
                            "Galerkin operator on level " + std::to_string(h.levels.size()) +
                                " is not SPD (non-positive diagonal at row " + std::to_string(i) + ")");
        next.setup_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        h.levels.push_back(std::move(next));

        if (h.levels.back().A.rows() <= opt.coarsest_cap) break;
        detail::require(depth > 1, error_kind::numerical,
                        "coarsest level still has " + std::to_string(h.levels.back().A.rows()) +
                            " unknowns at depth 1; raise the coarsest cap");

        // Next round: the vertices of this grid become the fine points; only
        // its active unknowns carry rows.
        fine_points = coarse.vertices;
        zero_rows.assign(B * coarse.vertex_count(), true);
        for (index_t a : h.levels.back().active) zero_rows[a] = false;
        // Rows of the next prolongation are indexed by the full block layout
        // of this grid; compress() keeps only the active ones.
    }

    const auto t0 = clock::now();
    try {
        h.coarsest = std::make_shared<const CoarseSolver>(DenseMatrix::from_sparse(h.levels.back().A));
    } catch (const error &e) {
        throw error(error_kind::numerical, "coarsest Galerkin operator (level " + std::to_string(h.levels.size() - 1) +
                                               ") failed the SPD check: " + e.what());
    }
    h.levels.back().setup_seconds += std::chrono::duration<double>(clock::now() - t0).count();
    return h;
}

} // namespace vasmg

#endif

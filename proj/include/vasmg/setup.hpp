#ifndef VASMG_SETUP_HPP
#define VASMG_SETUP_HPP

/**
 * \file   vasmg/setup.hpp
 * \brief  Region tree + hierarchy construction with the spatial dimension
 *         chosen at run time.
 */

#include <chrono>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <vasmg/elasticity.hpp>
#include <vasmg/mesh.hpp>
#include <vasmg/region_tree.hpp>
#include <vasmg/transfer.hpp>

namespace vasmg {

struct VasmgOptions {
    /// Leaf split threshold; 0 selects 4 in 2D and 8 in 3D.
    index_t threshold = 0;
    HierarchyOptions hierarchy;
    /// Keep the text dump of the region tree.
    bool keep_tree_dump = false;
};

inline index_t default_threshold(int dim) { return dim == 3 ? 8 : 4; }

struct LevelInfo {
    index_t unknowns = 0;
    index_t nonzeros = 0;
    index_t grid_vertices = 0;
    int tree_depth = 0;
    double setup_seconds = 0;
};

struct VasmgSetup {
    std::shared_ptr<const Hierarchy> hierarchy;
    int dim = 2;
    index_t threshold = 0;
    TreeStats tree;
    MeshStats mesh;
    index_t pruned_leaves = 0;
    double tree_seconds = 0;
    double hierarchy_seconds = 0;
    double total_seconds = 0;
    std::string tree_dump;

    std::vector<LevelInfo> levels() const {
        std::vector<LevelInfo> out;
        for (const auto &L : hierarchy->levels)
            out.push_back({L.A.rows(), L.A.nonzeros(), L.grid_vertices, L.tree_depth, L.setup_seconds});
        return out;
    }
};

namespace detail {

template <int Dim>
VasmgSetup setup_vasmg(std::span<const Coord> coords, const SparseMatrix &A, const std::vector<index_t> &constrained,
                       int blocks, const VasmgOptions &opt) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    VasmgSetup s;
    s.dim = Dim;
    s.threshold = opt.threshold ? opt.threshold : default_threshold(Dim);
    const auto pts = to_points<Dim>(coords);
    const auto tree = RegionTree<Dim>::build(pts, s.threshold);
    s.tree_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    s.pruned_leaves = tree.pruned_leaf_count();
    if (coords.size() >= 2) {
        s.mesh = mesh_stats(coords, Dim);
        s.tree = tree_stats(tree, s.mesh);
    }
    if (opt.keep_tree_dump) {
        std::ostringstream out;
        tree.dump(out);
        s.tree_dump = out.str();
    }
    const auto t1 = clock::now();
    s.hierarchy = std::make_shared<const Hierarchy>(build_hierarchy<Dim>(A, constrained, blocks, tree, opt.hierarchy));
    s.hierarchy_seconds = std::chrono::duration<double>(clock::now() - t1).count();
    s.total_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return s;
}

} // namespace detail

/// Builds the V-ASMG hierarchy of A over vertices `coords` of dimension
/// `dim` with `blocks` unknowns per vertex.
inline VasmgSetup setup_vasmg(std::span<const Coord> coords, int dim, const SparseMatrix &A,
                              const std::vector<index_t> &constrained, int blocks, const VasmgOptions &opt = {}) {
    detail::require(dim == 2 || dim == 3, error_kind::input, "dimension must be 2 or 3");
    return dim == 2 ? detail::setup_vasmg<2>(coords, A, constrained, blocks, opt)
                    : detail::setup_vasmg<3>(coords, A, constrained, blocks, opt);
}

inline VasmgSetup setup_vasmg(const Mesh &m, const AssembledSystem &sys, const VasmgOptions &opt = {}) {
    return setup_vasmg(m.vertices, m.dim, sys.A, sys.constrained_dofs, sys.dim, opt);
}

} // namespace vasmg

#endif

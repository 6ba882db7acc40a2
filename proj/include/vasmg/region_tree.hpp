#ifndef VASMG_REGION_TREE_HPP
#define VASMG_REGION_TREE_HPP

/**
 * \file   vasmg/region_tree.hpp
 * \brief  Auxiliary region-tree (quadtree in 2D, octree in 3D) over the
 *         vertices of an unstructured mesh, and extraction of the nested
 *         structured coarse grids it induces.
 *
 * The root is the smallest axis-aligned square (cube) with equal sides that
 * covers every vertex: its low corner is the minimum over all coordinates of
 * all axes and its high corner the maximum. Vertices are inserted one after
 * another; a leaf whose vertex set grows beyond the threshold is split by
 * midpoint bisection into 2^Dim children and its vertices are handed down.
 *
 * Child numbering. In 2D the four children are numbered clockwise starting
 * at the top-left: 0 = top-left, 1 = top-right, 2 = bottom-right,
 * 3 = bottom-left. In 3D children 0..3 are the upper half (z >= mid) in that
 * order and 4..7 the lower half. Cell corners use the same convention.
 *
 * Regions are closed. A point on an internal boundary goes to the
 * lowest-numbered child whose closed region contains it. Every bound is a
 * dyadic lattice coordinate low + m * side / 2^k, and the lattice index m is
 * kept as an integer so coarse vertices are deduplicated exactly.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <vasmg/error.hpp>
#include <vasmg/mesh.hpp>
#include <vasmg/sparse.hpp>

namespace vasmg {

template <int Dim>
using Point = std::array<double, Dim>;

template <int Dim>
using LatticeKey = std::array<std::uint64_t, Dim>;

/// Number of children / cell corners.
template <int Dim>
inline constexpr int fanout = 1 << Dim;

/// Offset (0 = low, 1 = high) of child/corner c along axis a.
template <int Dim>
constexpr int corner_offset(int c, int a) {
    // 2D clockwise from top-left: (0,1) (1,1) (1,0) (0,0)
    constexpr int x_off[4] = {0, 1, 1, 0};
    constexpr int y_off[4] = {1, 1, 0, 0};
    const int in_layer = c & 3;
    if (a == 0) return x_off[in_layer];
    if (a == 1) return y_off[in_layer];
    return (c < 4) ? 1 : 0; // z: upper layer first
}

/// Hard limit on tree depth; deeper splits mean (nearly) coincident points.
inline constexpr int region_tree_max_depth = 60;

template <int Dim>
class RegionTree {
  public:
    using point_type = Point<Dim>;
    using anchor_type = LatticeKey<Dim>;

    struct Node {
        anchor_type anchor{};
        int depth = 1;                     ///< root = 1
        std::int64_t first_child = -1;     ///< children are stored contiguously; -1 for a leaf
        std::vector<index_t> vertices;     ///< leaves only
        index_t subtree_count = 0;         ///< vertices below (or in) this node

        bool is_leaf() const noexcept { return first_child < 0; }
        bool retained() const noexcept { return subtree_count > 0; }
    };

    struct Bounds {
        point_type low{};
        point_type high{};
    };

    /// Builds the tree that sequential insertion in input order produces. A
    /// node ends up split exactly when its region receives more than
    /// `threshold` vertices, so the tree is built top-down by bucketing the
    /// vertices; leaf vertex lists are kept in input order.
    static RegionTree build(std::span<const point_type> points, index_t threshold) {
        detail::require(!points.empty(), error_kind::input, "region tree needs at least one vertex");
        detail::require(threshold >= 1, error_kind::input, "region tree threshold must be >= 1");

        RegionTree t;
        t.threshold_ = threshold;
        t.points_.assign(points.begin(), points.end());

        double lo = points[0][0], hi = points[0][0];
        for (const auto &p : points)
            for (int a = 0; a < Dim; ++a) {
                lo = std::min(lo, p[a]);
                hi = std::max(hi, p[a]);
            }
        if (hi == lo) hi = lo + 1.0; // single point
        t.low_ = lo;
        t.side_ = hi - lo;

        t.nodes_.reserve(2 * points.size() + 1); // address space only; untouched pages cost nothing
        t.nodes_.push_back(Node{});
        t.leaf_of_.assign(points.size(), 0);
        for (int k = 0; k <= region_tree_max_depth; ++k) t.cell_side_[k] = std::ldexp(t.side_, -k);
        std::vector<Item> items(points.size()), scratch(points.size());
        std::vector<std::uint16_t> digits(points.size());
        for (index_t v = 0; v < points.size(); ++v) items[v] = {points[v], v};
        t.partition(0, items.data(), scratch.data(), digits.data(), items.size());
        t.prune_and_index();
        return t;
    }

    /// Drops empty leaves from every enumeration (they stay in storage so
    /// siblings remain contiguous), records the leaf of every vertex and the
    /// height over retained leaves. Idempotent.
    RegionTree &prune_and_index() {
        height_ = 1;
        pruned_leaves_ = 0;
        for (index_t i = 0; i < nodes_.size(); ++i) {
            const Node &n = nodes_[i];
            if (!n.is_leaf()) continue;
            if (!n.retained()) {
                ++pruned_leaves_;
                continue;
            }
            height_ = std::max(height_, n.depth);
            for (index_t v : n.vertices) leaf_of_[v] = i;
        }
        return *this;
    }

    /// Empty leaves excluded by prune_and_index().
    index_t pruned_leaf_count() const noexcept { return pruned_leaves_; }

    index_t threshold() const noexcept { return threshold_; }
    index_t vertex_count() const noexcept { return points_.size(); }
    int height() const noexcept { return height_; }
    double root_low() const noexcept { return low_; }
    double root_side() const noexcept { return side_; }
    std::span<const Node> nodes() const noexcept { return nodes_; }
    const Node &node(index_t i) const { return nodes_[i]; }
    std::span<const point_type> points() const noexcept { return points_; }

    /// Coordinate of lattice index m at depth k (root has depth 1).
    double lattice_coord(std::uint64_t m, int depth) const noexcept {
        return low_ + static_cast<double>(m) * std::ldexp(side_, -(depth - 1));
    }

    Bounds bounds(const Node &n) const noexcept {
        Bounds b;
        for (int a = 0; a < Dim; ++a) {
            b.low[a]  = lattice_coord(n.anchor[a], n.depth);
            b.high[a] = lattice_coord(n.anchor[a] + 1, n.depth);
        }
        return b;
    }
    Bounds bounds(index_t node_index) const { return bounds(nodes_[node_index]); }

    bool contains(const Node &n, const point_type &p) const noexcept {
        const auto b = bounds(n);
        for (int a = 0; a < Dim; ++a)
            if (p[a] < b.low[a] || p[a] > b.high[a]) return false;
        return true;
    }

    /// Leaf (node index) that holds fine vertex v.
    index_t leaf_of(index_t v) const { return leaf_of_.at(v); }

    /// Indices of retained (non-empty) leaves in depth-first child order.
    std::vector<index_t> retained_leaves() const {
        std::vector<index_t> out;
        walk(0, [&](index_t i) {
            if (nodes_[i].is_leaf()) out.push_back(i);
            return true;
        });
        return out;
    }

    /// First node, in depth-first child order, that is retained, contains p
    /// in its closed region and is either a leaf or at the given depth.
    /// Points strictly inside a cell follow the unique descending path; on
    /// shared boundaries the lowest-numbered retained child is tried first
    /// and abandoned if none of its retained descendants contain p.
    index_t locate(const point_type &p, int max_depth = region_tree_max_depth) const {
        detail::require(contains(nodes_[0], p), error_kind::geometry, "locate: point outside the root region");
        std::vector<index_t> stack{0};
        while (!stack.empty()) {
            const index_t cur = stack.back();
            stack.pop_back();
            const Node &n = nodes_[cur];
            if (n.is_leaf() || n.depth >= max_depth) return cur;
            for (int c = fanout<Dim>; c-- > 0;) {
                const auto ci = static_cast<index_t>(n.first_child) + static_cast<index_t>(c);
                if (nodes_[ci].retained() && contains(nodes_[ci], p)) stack.push_back(ci);
            }
        }
        throw error(error_kind::geometry, "locate: point lies only in pruned (empty) regions");
    }

    /// Depth-first visit of retained nodes in child order; the visitor
    /// returns false to skip a node's children.
    template <class Visitor>
    void walk(index_t start, Visitor &&visit) const {
        std::vector<index_t> stack{start};
        while (!stack.empty()) {
            const index_t i = stack.back();
            stack.pop_back();
            const Node &n = nodes_[i];
            if (!n.retained()) continue;
            if (!visit(i) || n.is_leaf()) continue;
            for (int c = fanout<Dim>; c-- > 0;)
                stack.push_back(static_cast<index_t>(n.first_child) + static_cast<index_t>(c));
        }
    }

    /// Text dump: one line per retained node, depth-first.
    void dump(std::ostream &out) const {
        out << "# region tree: dim=" << Dim << " vertices=" << points_.size() << " threshold=" << threshold_
            << " height=" << height_ << '\n';
        walk(0, [&](index_t i) {
            const Node &n = nodes_[i];
            const auto b = bounds(n);
            out << std::string(static_cast<std::size_t>(2 * (n.depth - 1)), ' ') << "depth=" << n.depth << " anchor=(";
            for (int a = 0; a < Dim; ++a) out << (a ? "," : "") << n.anchor[a];
            out << ") bounds=";
            for (int a = 0; a < Dim; ++a) out << (a ? "x" : "") << '[' << b.low[a] << ',' << b.high[a] << ']';
            if (n.is_leaf()) {
                out << " leaf vertices={";
                for (std::size_t k = 0; k < n.vertices.size(); ++k) out << (k ? "," : "") << n.vertices[k];
                out << '}';
            } else {
                out << " count=" << n.subtree_count;
            }
            out << '\n';
            return true;
        });
    }

  private:
    // A vertex travels with its coordinates so partition passes read memory in order.
    struct Item {
        point_type p;
        index_t id;
    };

    // Equal coordinates always take the same child, so duplicates meet in one
    // leaf or in the node that runs into the depth limit.
    static void reject_duplicates(const Item *items, std::size_t n) {
        std::vector<point_type> pts(n);
        for (std::size_t k = 0; k < n; ++k) pts[k] = items[k].p;
        std::sort(pts.begin(), pts.end());
        detail::require(std::adjacent_find(pts.begin(), pts.end()) == pts.end(), error_kind::geometry,
                        "region tree: duplicate vertex coordinates cannot be separated by splitting");
    }

    point_type midpoint(const Node &n) const noexcept {
        point_type mid;
        for (int a = 0; a < Dim; ++a) mid[a] = lattice_coord(2 * n.anchor[a] + 1, n.depth + 1);
        return mid;
    }

    /// Child receiving p given the parent's midpoint (lowest-numbered closed region).
    static int child_slot(const point_type &mid, const point_type &p) noexcept {
        int base = 0;
        if constexpr (Dim == 3) base = p[2] >= mid[2] ? 0 : 4;
        if (p[1] >= mid[1]) return base + (p[0] <= mid[0] ? 0 : 1);
        return base + (p[0] >= mid[0] ? 2 : 3);
    }

    void make_leaf(index_t i, Item *items, std::size_t n) {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                if (items[a].p == items[b].p) reject_duplicates(items, n);
        std::sort(items, items + n, [](const Item &x, const Item &y) { return x.id < y.id; });
        nodes_[i].vertices.resize(n);
        for (std::size_t k = 0; k < n; ++k) nodes_[i].vertices[k] = items[k].id;
    }

    index_t split(index_t i, const Item *items, std::size_t n) {
        if (nodes_[i].depth >= region_tree_max_depth) reject_duplicates(items, n);
        detail::require(nodes_[i].depth < region_tree_max_depth, error_kind::geometry,
                        "region tree: maximum depth exceeded (vertices nearly coincide)");
        const auto first = static_cast<index_t>(nodes_.size());
        for (int c = 0; c < fanout<Dim>; ++c) {
            Node child;
            child.depth = nodes_[i].depth + 1;
            for (int a = 0; a < Dim; ++a)
                child.anchor[a] = 2 * nodes_[i].anchor[a] + static_cast<std::uint64_t>(corner_offset<Dim>(c, a));
            nodes_.push_back(std::move(child));
        }
        nodes_[i].first_child = static_cast<std::int64_t>(first);
        return first;
    }

    /// Distributes items[0..n) over node i and its descendants. Each pass
    /// buckets the vertices by their child slots over the next few levels at
    /// once (a radix step on the slot path), then creates the nodes those
    /// bucket counts call for. scratch and digits have room for n.
    void partition(index_t i, Item *items, Item *scratch, std::uint16_t *digits, std::size_t n) {
        nodes_[i].subtree_count = n;
        if (n <= threshold_) {
            make_leaf(i, items, n);
            return;
        }
        constexpr int max_levels = 2;
        const int room = std::max(1, region_tree_max_depth - nodes_[i].depth);
        int levels = 1;
        std::size_t cells = fanout<Dim>;
        while (levels < max_levels && levels < room && n / cells > threshold_) {
            ++levels;
            cells *= fanout<Dim>;
        }

        const Node root = nodes_[i];
        std::vector<std::size_t> start(cells + 1, 0);
        for (std::size_t k = 0; k < n; ++k) {
            anchor_type anchor = root.anchor;
            int depth = root.depth;
            unsigned digit = 0;
            for (int l = 0; l < levels; ++l, ++depth) {
                point_type mid;
                for (int a = 0; a < Dim; ++a)
                    mid[a] = low_ + static_cast<double>(2 * anchor[a] + 1) * cell_side_[depth];
                const int c = child_slot(mid, items[k].p);
                digit = digit * fanout<Dim> + static_cast<unsigned>(c);
                for (int a = 0; a < Dim; ++a) anchor[a] = 2 * anchor[a] + static_cast<std::uint64_t>(corner_offset<Dim>(c, a));
            }
            digits[k] = static_cast<std::uint16_t>(digit);
            ++start[digit + 1];
        }
        for (std::size_t c = 0; c < cells; ++c) start[c + 1] += start[c];
        auto pos = start;
        for (std::size_t k = 0; k < n; ++k) scratch[pos[digits[k]]++] = items[k];

        // The bucketed copy now lives in scratch; items serves as scratch below.
        grow(i, 0, levels, 0, cells, start, scratch, items, digits);
    }

    void grow(index_t j, int level, int levels, std::size_t lo, std::size_t hi, const std::vector<std::size_t> &start,
              Item *data, Item *spare, std::uint16_t *digits) {
        const std::size_t b = start[lo], count = start[hi] - b;
        if (level == levels || count <= threshold_) {
            partition(j, data + b, spare + b, digits + b, count);
            return;
        }
        nodes_[j].subtree_count = count;
        const index_t first = split(j, data + b, count);
        const std::size_t step = (hi - lo) / fanout<Dim>;
        for (int c = 0; c < fanout<Dim>; ++c)
            grow(first + static_cast<index_t>(c), level + 1, levels, lo + static_cast<std::size_t>(c) * step,
                 lo + static_cast<std::size_t>(c + 1) * step, start, data, spare, digits);
    }

    index_t threshold_ = 4;
    double low_ = 0;
    double side_ = 1;
    int height_ = 1;
    index_t pruned_leaves_ = 0;
    std::vector<point_type> points_;
    std::vector<Node> nodes_;
    std::vector<index_t> leaf_of_;
    std::array<double, region_tree_max_depth + 1> cell_side_{}; ///< side_ / 2^k
};

/// Structured grid obtained by truncating the tree at a depth: its cells are
/// the retained leaves no deeper than that depth plus the retained nodes at
/// exactly that depth (whose deeper subtrees are merged into them).
template <int Dim>
struct CoarseLevel {
    struct Cell {
        index_t node = 0;
        int depth = 1;
        LatticeKey<Dim> anchor{};
        std::array<index_t, fanout<Dim>> corners{};
    };

    int level_depth = 1;
    std::vector<Cell> cells;
    std::vector<Point<Dim>> vertices;
    /// Lattice index of each coarse vertex at depth `key_depth`.
    std::vector<LatticeKey<Dim>> keys;
    int key_depth = 1;
    /// node index -> cell index
    std::unordered_map<index_t, index_t> cell_of_node;

    index_t vertex_count() const noexcept { return vertices.size(); }
};

template <int Dim>
CoarseLevel<Dim> coarse_level(const RegionTree<Dim> &tree, int level_depth) {
    detail::require(level_depth >= 1 && level_depth <= tree.height(), error_kind::input,
                    "coarse_level: depth " + std::to_string(level_depth) + " outside [1, " +
                        std::to_string(tree.height()) + "]");
    CoarseLevel<Dim> L;
    L.level_depth = level_depth;
    L.key_depth = level_depth;

    struct KeyHash {
        std::size_t operator()(const LatticeKey<Dim> &k) const noexcept {
            std::uint64_t h = 0xcbf29ce484222325ull;
            for (auto x : k) h = (h ^ x) * 0x100000001b3ull + (h >> 29);
            return static_cast<std::size_t>(h);
        }
    };
    std::unordered_map<LatticeKey<Dim>, index_t, KeyHash> ids;

    tree.walk(0, [&](index_t i) {
        const auto &n = tree.node(i);
        if (!n.is_leaf() && n.depth < level_depth) return true;
        typename CoarseLevel<Dim>::Cell cell;
        cell.node = i;
        cell.depth = n.depth;
        cell.anchor = n.anchor;
        const int shift = level_depth - n.depth;
        for (int c = 0; c < fanout<Dim>; ++c) {
            LatticeKey<Dim> key;
            for (int a = 0; a < Dim; ++a)
                key[a] = (n.anchor[a] + static_cast<std::uint64_t>(corner_offset<Dim>(c, a))) << shift;
            auto [it, inserted] = ids.emplace(key, L.vertices.size());
            if (inserted) {
                Point<Dim> p;
                for (int a = 0; a < Dim; ++a) p[a] = tree.lattice_coord(key[a], level_depth);
                L.vertices.push_back(p);
                L.keys.push_back(key);
            }
            cell.corners[c] = it->second;
        }
        L.cell_of_node.emplace(i, L.cells.size());
        L.cells.push_back(cell);
        return false;
    });
    return L;
}

/// Finest auxiliary grid: every retained leaf.
template <int Dim>
CoarseLevel<Dim> finest_level(const RegionTree<Dim> &tree) {
    return coarse_level(tree, tree.height());
}

/// Cell of `level` containing p, using the tree's closed-region tie-break.
template <int Dim>
index_t locate_cell(const RegionTree<Dim> &tree, const CoarseLevel<Dim> &level, const Point<Dim> &p) {
    const index_t node = tree.locate(p, level.level_depth);
    auto it = level.cell_of_node.find(node);
    detail::require(it != level.cell_of_node.end(), error_kind::geometry, "locate_cell: orphan point");
    return it->second;
}

struct TreeStats {
    int height = 0;
    index_t leaf_count = 0;
    index_t max_leaf_occupancy = 0;
    double depth_bound = 0;      ///< q log2 N + 3/2
    bool within_bound = false;   ///< height <= ceil(depth_bound) + 1
};

template <int Dim>
TreeStats tree_stats(const RegionTree<Dim> &tree, const MeshStats &ms) {
    TreeStats s;
    s.height = tree.height();
    for (index_t i : tree.retained_leaves()) {
        ++s.leaf_count;
        s.max_leaf_occupancy = std::max(s.max_leaf_occupancy, tree.node(i).vertices.size());
    }
    const double n = static_cast<double>(tree.vertex_count());
    s.depth_bound = ms.q_exponent * std::log2(n) + 1.5;
    s.within_bound = s.height <= std::ceil(s.depth_bound) + 1;
    return s;
}

/// Converts mesh coordinates to tree points of the right dimension.
template <int Dim>
std::vector<Point<Dim>> to_points(std::span<const Coord> coords) {
    std::vector<Point<Dim>> out(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i)
        for (int a = 0; a < Dim; ++a) out[i][a] = coords[i][a];
    return out;
}

} // namespace vasmg

#endif

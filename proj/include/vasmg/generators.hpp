#ifndef VASMG_GENERATORS_HPP
#define VASMG_GENERATORS_HPP

/**
 * \file   vasmg/generators.hpp
 * \brief  Deterministic parametric test meshes.
 *
 * Every generator maps a structured parameter grid onto the geometry,
 * splits each cell into simplices and then jitters interior vertices by a
 * hash of their grid index, so the result is unstructured but reproducible
 * bit for bit. Each 2D refinement doubles the cells per direction (about 4x
 * vertices); the 3D box doubles per direction as well (about 8x).
 */

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <vasmg/elasticity.hpp>
#include <vasmg/mesh.hpp>

namespace vasmg {

enum class MeshKind { hole_plate, ring_quadrant, square_hole_plate, dam_trapezoid, box };

inline MeshKind parse_mesh_kind(const std::string &s) {
    if (s == "hole-plate") return MeshKind::hole_plate;
    if (s == "ring-quadrant") return MeshKind::ring_quadrant;
    if (s == "square-hole-plate") return MeshKind::square_hole_plate;
    if (s == "dam-trapezoid") return MeshKind::dam_trapezoid;
    if (s == "box" || s == "box-3d") return MeshKind::box;
    throw error(error_kind::input, "unknown mesh kind '" + s + "'");
}

inline std::string to_string(MeshKind k) {
    switch (k) {
        case MeshKind::hole_plate:        return "hole-plate";
        case MeshKind::ring_quadrant:     return "ring-quadrant";
        case MeshKind::square_hole_plate: return "square-hole-plate";
        case MeshKind::dam_trapezoid:     return "dam-trapezoid";
        case MeshKind::box:               return "box-3d";
    }
    return "unknown";
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Deterministic value in [-0.5, 0.5) for a grid index and a salt.
inline double hash_unit(std::uint64_t i, std::uint64_t j, std::uint64_t k, std::uint64_t salt) {
    const std::uint64_t h = splitmix64(splitmix64(splitmix64(i * 0x100000001b3ull ^ salt) ^ j) ^ k);
    return static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5;
}

/// Vertex grid of (nu+1) x (nv+1) parameter points with optional holes.
struct ParamGrid2 {
    index_t nu, nv;
    std::vector<std::ptrdiff_t> id; // -1 for removed points

    ParamGrid2(index_t nu_, index_t nv_) : nu(nu_), nv(nv_), id((nu_ + 1) * (nv_ + 1), -1) {}
    std::ptrdiff_t &at(index_t i, index_t j) { return id[j * (nu + 1) + i]; }
};

/// Splits every kept cell (i, j) into two triangles; the diagonal direction
/// alternates in a checkerboard so the pattern is not uniformly biased.
template <class KeepCell>
void triangulate(Mesh &m, ParamGrid2 &g, KeepCell keep) {
    for (index_t j = 0; j < g.nv; ++j)
        for (index_t i = 0; i < g.nu; ++i) {
            if (!keep(i, j)) continue;
            const auto a = static_cast<index_t>(g.at(i, j)), b = static_cast<index_t>(g.at(i + 1, j));
            const auto c = static_cast<index_t>(g.at(i + 1, j + 1)), d = static_cast<index_t>(g.at(i, j + 1));
            if ((i + j) % 2 == 0) {
                m.elements.push_back({a, b, c, 0});
                m.elements.push_back({a, c, d, 0});
            } else {
                m.elements.push_back({a, b, d, 0});
                m.elements.push_back({b, c, d, 0});
            }
        }
}

inline Mesh square_hole_plate(int refinement) {
    // Plate [-1,1]^2 with the square hole (-0.5,0.5)^2 removed.
    const index_t n = index_t{40} << refinement;
    const double h = 2.0 / static_cast<double>(n);
    const index_t lo = n / 4, hi = 3 * n / 4;
    ParamGrid2 g(n, n);
    Mesh m;
    m.dim = 2;
    auto in_hole_cell = [&](index_t i, index_t j) { return i >= lo && i < hi && j >= lo && j < hi; };
    auto inside_hole = [&](index_t i, index_t j) { return i > lo && i < hi && j > lo && j < hi; };
    for (index_t j = 0; j <= n; ++j)
        for (index_t i = 0; i <= n; ++i) {
            if (inside_hole(i, j)) continue;
            const bool outer = i == 0 || j == 0 || i == n || j == n;
            const bool inner = (i == lo || i == hi) && j >= lo && j <= hi;
            const bool inner2 = (j == lo || j == hi) && i >= lo && i <= hi;
            double x = -1 + h * static_cast<double>(i), y = -1 + h * static_cast<double>(j);
            if (!outer && !inner && !inner2) {
                x += 0.35 * h * hash_unit(i, j, 0, 11);
                y += 0.35 * h * hash_unit(i, j, 0, 12);
            }
            const index_t v = m.vertices.size();
            g.at(i, j) = static_cast<std::ptrdiff_t>(v);
            m.vertices.push_back({x, y, 0});
            if (i == 0) m.tags["left"].push_back(v);
            if (i == n) m.tags["right"].push_back(v);
            if (j == 0) m.tags["bottom"].push_back(v);
            if (j == n) m.tags["top"].push_back(v);
            if (inner || inner2) m.tags["inner"].push_back(v);
        }
    triangulate(m, g, [&](index_t i, index_t j) { return !in_hole_cell(i, j); });
    return m;
}

inline Mesh hole_plate(int refinement) {
    // Plate [-1,1]^2 with a circular hole of radius 0.4 (O-grid).
    const index_t side = index_t{20} << refinement; // segments per square side
    const index_t nt = 4 * side;                     // around
    const index_t nr = index_t{16} << refinement;    // radial
    const double r_hole = 0.4;
    Mesh m;
    m.dim = 2;
    std::vector<index_t> id(nt * (nr + 1));
    auto square_point = [&](index_t k) -> std::array<double, 2> {
        // Perimeter walk counter-clockwise starting at (1, 0).
        const double s = 2.0 / static_cast<double>(side);
        const index_t half = side / 2;
        index_t q = k;
        if (q < half) return {1.0, s * static_cast<double>(q)};
        q -= half;
        if (q < side) return {1.0 - s * static_cast<double>(q), 1.0};
        q -= side;
        if (q < side) return {-1.0, 1.0 - s * static_cast<double>(q)};
        q -= side;
        if (q < side) return {-1.0 + s * static_cast<double>(q), -1.0};
        q -= side;
        return {1.0, -1.0 + s * static_cast<double>(q)};
    };
    for (index_t j = 0; j <= nr; ++j)
        for (index_t k = 0; k < nt; ++k) {
            const double theta = 2 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nt);
            double t = static_cast<double>(j) / static_cast<double>(nr);
            // Grade towards the hole.
            t = t * t * 0.5 + t * 0.5;
            const auto sq = square_point(k);
            double x = (1 - t) * r_hole * std::cos(theta) + t * sq[0];
            double y = (1 - t) * r_hole * std::sin(theta) + t * sq[1];
            if (j > 0 && j < nr) {
                const double hloc = 2.0 / static_cast<double>(nr) * (0.5 + t) * 0.5;
                x += 0.25 * hloc * hash_unit(k, j, 0, 21);
                y += 0.25 * hloc * hash_unit(k, j, 0, 22);
            }
            const index_t v = m.vertices.size();
            id[j * nt + k] = v;
            m.vertices.push_back({x, y, 0});
            if (j == 0) m.tags["inner"].push_back(v);
            if (j == nr) {
                if (sq[0] == 1.0) m.tags["right"].push_back(v);
                if (sq[0] == -1.0) m.tags["left"].push_back(v);
                if (sq[1] == 1.0) m.tags["top"].push_back(v);
                if (sq[1] == -1.0) m.tags["bottom"].push_back(v);
            }
        }
    for (index_t j = 0; j < nr; ++j)
        for (index_t k = 0; k < nt; ++k) {
            const index_t k1 = (k + 1) % nt;
            const index_t a = id[j * nt + k], b = id[j * nt + k1], c = id[(j + 1) * nt + k1], d = id[(j + 1) * nt + k];
            if ((j + k) % 2 == 0) {
                m.elements.push_back({a, b, c, 0});
                m.elements.push_back({a, c, d, 0});
            } else {
                m.elements.push_back({a, b, d, 0});
                m.elements.push_back({b, c, d, 0});
            }
        }
    return m;
}

inline Mesh ring_quadrant(int refinement) {
    // Quarter annulus 1 <= r <= 2, 0 <= theta <= pi/2.
    const index_t nt = index_t{40} << refinement, nr = index_t{20} << refinement;
    ParamGrid2 g(nt, nr);
    Mesh m;
    m.dim = 2;
    for (index_t j = 0; j <= nr; ++j)
        for (index_t i = 0; i <= nt; ++i) {
            double theta = 0.5 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nt);
            double r = 1.0 + static_cast<double>(j) / static_cast<double>(nr);
            const bool boundary = i == 0 || j == 0 || i == nt || j == nr;
            if (!boundary) {
                theta += 0.3 * (0.5 * std::numbers::pi / static_cast<double>(nt)) * hash_unit(i, j, 0, 31);
                r += 0.3 / static_cast<double>(nr) * hash_unit(i, j, 0, 32);
            }
            double x = r * std::cos(theta), y = r * std::sin(theta);
            if (i == 0) y = 0.0;
            if (i == nt) x = 0.0;
            const index_t v = m.vertices.size();
            g.at(i, j) = static_cast<std::ptrdiff_t>(v);
            m.vertices.push_back({x, y, 0});
            if (i == 0) m.tags["bottom"].push_back(v);
            if (i == nt) m.tags["left"].push_back(v);
            if (j == 0) m.tags["inner"].push_back(v);
            if (j == nr) m.tags["outer"].push_back(v);
        }
    triangulate(m, g, [](index_t, index_t) { return true; });
    return m;
}

inline Mesh dam_trapezoid(int refinement) {
    // Base [0,3] at y=0, crest [0,1] at y=4; upstream face x=0 is vertical.
    const index_t nx = index_t{30} << refinement, ny = index_t{40} << refinement;
    const double base = 3.0, crest = 1.0, height = 4.0;
    ParamGrid2 g(nx, ny);
    Mesh m;
    m.dim = 2;
    for (index_t j = 0; j <= ny; ++j)
        for (index_t i = 0; i <= nx; ++i) {
            double s = static_cast<double>(i) / static_cast<double>(nx);
            double t = static_cast<double>(j) / static_cast<double>(ny);
            const bool boundary = i == 0 || j == 0 || i == nx || j == ny;
            if (!boundary) {
                s += 0.3 / static_cast<double>(nx) * hash_unit(i, j, 0, 41);
                t += 0.3 / static_cast<double>(ny) * hash_unit(i, j, 0, 42);
            }
            const double width = base - t * (base - crest);
            const index_t v = m.vertices.size();
            g.at(i, j) = static_cast<std::ptrdiff_t>(v);
            m.vertices.push_back({s * width, t * height, 0});
            if (i == 0) m.tags["left"].push_back(v);
            if (i == nx) m.tags["right"].push_back(v);
            if (j == 0) m.tags["bottom"].push_back(v);
            if (j == ny) m.tags["top"].push_back(v);
        }
    triangulate(m, g, [](index_t, index_t) { return true; });
    return m;
}

inline Mesh box(int refinement) {
    // Beam [0,2] x [0,1] x [0,1], each hexahedral cell split into 6 tetrahedra.
    const index_t nx = index_t{18} << refinement, ny = index_t{9} << refinement, nz = ny;
    const double hx = 2.0 / static_cast<double>(nx), hy = 1.0 / static_cast<double>(ny),
                 hz = 1.0 / static_cast<double>(nz);
    Mesh m;
    m.dim = 3;
    auto vid = [&](index_t i, index_t j, index_t k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    for (index_t k = 0; k <= nz; ++k)
        for (index_t j = 0; j <= ny; ++j)
            for (index_t i = 0; i <= nx; ++i) {
                double x = hx * static_cast<double>(i), y = hy * static_cast<double>(j), z = hz * static_cast<double>(k);
                const bool boundary = i == 0 || j == 0 || k == 0 || i == nx || j == ny || k == nz;
                if (!boundary) {
                    x += 0.2 * hx * hash_unit(i, j, k, 51);
                    y += 0.2 * hy * hash_unit(i, j, k, 52);
                    z += 0.2 * hz * hash_unit(i, j, k, 53);
                }
                const index_t v = m.vertices.size();
                m.vertices.push_back({x, y, z});
                if (i == 0) m.tags["left"].push_back(v);
                if (i == nx) m.tags["right"].push_back(v);
                if (j == 0) m.tags["front"].push_back(v);
                if (j == ny) m.tags["back"].push_back(v);
                if (k == 0) m.tags["bottom"].push_back(v);
                if (k == nz) m.tags["top"].push_back(v);
            }
    // Kuhn subdivision along the main diagonal 0 -> 7 of each cell.
    static constexpr int paths[6][3] = {{1, 2, 4}, {1, 4, 2}, {2, 1, 4}, {2, 4, 1}, {4, 1, 2}, {4, 2, 1}};
    for (index_t k = 0; k < nz; ++k)
        for (index_t j = 0; j < ny; ++j)
            for (index_t i = 0; i < nx; ++i) {
                auto corner = [&](int bits) {
                    return vid(i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1));
                };
                for (const auto &p : paths) {
                    const int b1 = p[0], b2 = b1 | p[1];
                    m.elements.push_back({corner(0), corner(b1), corner(b2), corner(7)});
                }
            }
    return m;
}

} // namespace detail

/// Deterministic mesh for (kind, refinement); vertex tags name the boundary
/// pieces ("left", "right", "bottom", "top", "inner", "outer", "front", "back").
inline Mesh generate_mesh(MeshKind kind, int refinement) {
    detail::require(refinement >= 0 && refinement <= 6, error_kind::input, "refinement must lie in [0, 6]");
    Mesh m;
    switch (kind) {
        case MeshKind::hole_plate:        m = detail::hole_plate(refinement); break;
        case MeshKind::ring_quadrant:     m = detail::ring_quadrant(refinement); break;
        case MeshKind::square_hole_plate: m = detail::square_hole_plate(refinement); break;
        case MeshKind::dam_trapezoid:     m = detail::dam_trapezoid(refinement); break;
        case MeshKind::box:               m = detail::box(refinement); break;
    }
    normalize(m);
    return m;
}

inline Mesh generate_mesh(const std::string &kind, int refinement) {
    return generate_mesh(parse_mesh_kind(kind), refinement);
}

/// The load case each generated geometry ships with: a clamped edge and a
/// uniform line (or surface) force of magnitude 10 on the opposite side.
inline BoundaryCondition default_load_case(MeshKind kind) {
    BoundaryCondition bc;
    switch (kind) {
        case MeshKind::hole_plate:
        case MeshKind::square_hole_plate:
            bc.dirichlet.push_back({"left", axis_all});
            bc.traction.push_back({"right", {10, 0, 0}});
            break;
        case MeshKind::ring_quadrant:
            bc.dirichlet.push_back({"bottom", axis_all});
            bc.traction.push_back({"left", {10, 0, 0}});
            break;
        case MeshKind::dam_trapezoid:
            bc.dirichlet.push_back({"bottom", axis_all});
            bc.traction.push_back({"left", {10, 0, 0}});
            bc.traction.push_back({"top", {0, -10, 0}});
            break;
        case MeshKind::box:
            bc.dirichlet.push_back({"left", axis_all});
            bc.traction.push_back({"right", {0, 0, -10}});
            break;
    }
    return bc;
}

} // namespace vasmg

#endif

#ifndef VASMG_ELASTICITY_HPP
#define VASMG_ELASTICITY_HPP

/**
 * \file   vasmg/elasticity.hpp
 * \brief  P1 finite element assembly for isotropic linear elasticity.
 *
 * Unknowns are ordered by displacement component: all x-components first,
 * then all y-components (then all z-components), so vertex i and axis a map
 * to row a*N + i. Transfer operators rely on this block layout.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <vasmg/error.hpp>
#include <vasmg/mesh.hpp>
#include <vasmg/sparse.hpp>

namespace vasmg {

struct Material {
    double youngs_modulus = 1;
    double poisson_ratio  = 0;
    double lame_mu        = 0.5;
    double lame_lambda    = 0;
};

inline Material make_material(double E, double nu) {
    detail::require(E > 0, error_kind::input, "Young's modulus must be positive");
    detail::require(nu >= 0 && nu < 0.5, error_kind::input,
                    "Poisson's ratio must lie in [0, 0.5); got " + std::to_string(nu));
    return {E, nu, E / (2 * (1 + nu)), E * nu / ((1 + nu) * (1 - 2 * nu))};
}

/// Plane-stress material expressed through the plane-strain formulas via
/// E' = E(1+2nu)/(1+nu)^2, nu' = nu/(1+nu).
inline Material make_plane_stress_material(double E, double nu) {
    detail::require(E > 0 && nu >= 0 && nu < 0.5, error_kind::input, "invalid plane-stress material");
    return make_material(E * (1 + 2 * nu) / ((1 + nu) * (1 + nu)), nu / (1 + nu));
}

/// Bit mask of constrained displacement axes.
enum axis_mask : unsigned { axis_x = 1u, axis_y = 2u, axis_z = 4u, axis_all = 7u };

struct BoundaryCondition {
    struct Dirichlet {
        std::string tag;
        unsigned axes = axis_all;
    };
    struct Load {
        std::string tag;
        std::array<double, 3> force{0, 0, 0};
    };
    /// Homogeneous (zero displacement) constraints.
    std::vector<Dirichlet> dirichlet;
    /// Constant traction per unit boundary length/area on tagged boundary facets.
    std::vector<Load> traction;
    /// Nodal force applied to every vertex carrying the tag.
    std::vector<Load> point_loads;
};

struct AssembledSystem {
    SparseMatrix A;
    Vector F;
    int dim = 2;
    index_t vertex_count = 0;
    /// Sorted constrained unknowns.
    std::vector<index_t> constrained_dofs;

    index_t dof(index_t vertex, int axis) const noexcept { return static_cast<index_t>(axis) * vertex_count + vertex; }
    index_t unknowns() const noexcept { return F.size(); }

    std::vector<bool> constrained_mask() const {
        std::vector<bool> mask(unknowns(), false);
        for (index_t d : constrained_dofs) mask[d] = true;
        return mask;
    }
};

/// Gradients of the barycentric basis functions of a simplex and its measure.
struct ElementGeometry {
    std::array<std::array<double, 3>, 4> grad{};
    double measure = 0;
};

inline ElementGeometry element_geometry(const Mesh &m, const Simplex &e) {
    ElementGeometry g;
    const int d = m.dim;
    // Jacobian J[r][c] = x_{c+1}[r] - x_0[r]; gradients of phi_1..phi_d are rows of J^{-1}.
    double J[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int c = 0; c < d; ++c)
        for (int r = 0; r < d; ++r) J[r][c] = m.vertices[e[c + 1]][r] - m.vertices[e[0]][r];

    double inv[3][3] = {};
    double det = 0;
    if (d == 2) {
        det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        inv[0][0] = J[1][1] / det;
        inv[0][1] = -J[0][1] / det;
        inv[1][0] = -J[1][0] / det;
        inv[1][1] = J[0][0] / det;
        g.measure = 0.5 * std::abs(det);
    } else {
        det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) - J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
              J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
        inv[0][0] = (J[1][1] * J[2][2] - J[1][2] * J[2][1]) / det;
        inv[0][1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / det;
        inv[0][2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / det;
        inv[1][0] = (J[1][2] * J[2][0] - J[1][0] * J[2][2]) / det;
        inv[1][1] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / det;
        inv[1][2] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / det;
        inv[2][0] = (J[1][0] * J[2][1] - J[1][1] * J[2][0]) / det;
        inv[2][1] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / det;
        inv[2][2] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / det;
        g.measure = std::abs(det) / 6.0;
    }
    detail::require(det != 0.0, error_kind::geometry, "degenerate element in assembly");
    for (int a = 1; a <= d; ++a)
        for (int r = 0; r < d; ++r) g.grad[a][r] = inv[a - 1][r];
    for (int r = 0; r < d; ++r) {
        double s = 0;
        for (int a = 1; a <= d; ++a) s -= g.grad[a][r];
        g.grad[0][r] = s;
    }
    return g;
}

/// Stiffness matrix before boundary conditions. Singular: its kernel holds
/// the rigid body motions.
inline SparseMatrix assemble_stiffness(const Mesh &m, const Material &mat) {
    const int d = m.dim, nv = d + 1;
    const index_t N = m.vertex_count();
    const double lambda = mat.lame_lambda, mu = mat.lame_mu;

    std::vector<Triplet> t;
    t.reserve(m.element_count() * static_cast<std::size_t>(nv * nv * d * d));
    for (const auto &e : m.elements) {
        const auto g = element_geometry(m, e);
        for (int a = 0; a < nv; ++a)
            for (int b = 0; b < nv; ++b) {
                double gg = 0;
                for (int r = 0; r < d; ++r) gg += g.grad[a][r] * g.grad[b][r];
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) {
                        double k = lambda * (g.grad[a][i] * g.grad[b][j]) + mu * (g.grad[a][j] * g.grad[b][i]);
                        if (i == j) k += mu * gg;
                        t.push_back({static_cast<index_t>(i) * N + e[a], static_cast<index_t>(j) * N + e[b],
                                     k * g.measure});
                    }
            }
    }
    return SparseMatrix::from_triplets(d * N, d * N, std::move(t));
}

/// Load vector from tractions and point loads.
inline Vector assemble_load(const Mesh &m, const BoundaryCondition &bc) {
    const int d = m.dim;
    const index_t N = m.vertex_count();
    Vector F(d * N, 0.0);

    auto tagged = [&](const std::string &tag) -> const std::vector<index_t> & {
        auto it = m.tags.find(tag);
        if (it == m.tags.end()) throw error(error_kind::input, "boundary tag '" + tag + "' not present in mesh");
        return it->second;
    };

    if (!bc.traction.empty()) {
        const auto facets = boundary_facets(m);
        for (const auto &load : bc.traction) {
            const auto &list = tagged(load.tag);
            auto has = [&](index_t v) { return std::binary_search(list.begin(), list.end(), v); };
            for (const auto &f : facets) {
                if (!std::all_of(f.begin(), f.end(), has)) continue;
                double measure = 0;
                const Coord &p0 = m.vertices[f[0]], &p1 = m.vertices[f[1]];
                if (d == 2) {
                    measure = detail::dist(p0, p1);
                } else {
                    const Coord &p2 = m.vertices[f[2]];
                    const double u[3] = {p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]};
                    const double v[3] = {p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]};
                    const double c[3] = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                                         u[0] * v[1] - u[1] * v[0]};
                    measure = 0.5 * std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
                }
                // P1 trace: each facet vertex receives an equal share.
                const double share = measure / static_cast<double>(f.size());
                for (index_t v : f)
                    for (int a = 0; a < d; ++a) F[a * N + v] += load.force[a] * share;
            }
        }
    }
    for (const auto &load : bc.point_loads)
        for (index_t v : tagged(load.tag))
            for (int a = 0; a < d; ++a) F[a * N + v] += load.force[a];
    return F;
}

/// Reads the boundary-condition text format, one statement per line:
///
///     dirichlet <tag> <axes>          axes: any of x, y, z, or "all"
///     traction  <tag> <fx> <fy> [fz]
///     point     <tag> <fx> <fy> [fz]
///
/// '#' starts a comment.
inline BoundaryCondition read_boundary_conditions(std::istream &in, const std::string &name = "bc") {
    BoundaryCondition bc;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string kw, tag;
        if (!(ls >> kw)) continue;
        const std::string where = name + ":" + std::to_string(lineno) + ": ";
        detail::require(static_cast<bool>(ls >> tag), error_kind::input, where + "missing tag");
        if (kw == "dirichlet") {
            std::string axes;
            detail::require(static_cast<bool>(ls >> axes), error_kind::input, where + "missing axes");
            unsigned mask = 0;
            if (axes == "all") mask = axis_all;
            else
                for (char c : axes) {
                    detail::require(c == 'x' || c == 'y' || c == 'z', error_kind::input,
                                    where + "bad axis '" + std::string(1, c) + "'");
                    mask |= 1u << (c - 'x');
                }
            bc.dirichlet.push_back({tag, mask});
        } else if (kw == "traction" || kw == "point") {
            BoundaryCondition::Load load{tag, {0, 0, 0}};
            int n = 0;
            double f;
            while (n < 3 && ls >> f) load.force[n++] = f;
            detail::require(n >= 2 && ls.eof(), error_kind::input, where + "expected 2 or 3 force components");
            (kw == "traction" ? bc.traction : bc.point_loads).push_back(load);
        } else {
            throw error(error_kind::input, where + "unknown statement '" + kw + "'");
        }
        std::string extra;
        detail::require(!(ls >> extra), error_kind::input, where + "trailing text '" + extra + "'");
    }
    return bc;
}

inline BoundaryCondition read_boundary_conditions(const std::string &path) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), error_kind::input, "cannot open " + path);
    return read_boundary_conditions(in, path);
}

inline void write_boundary_conditions(std::ostream &out, const BoundaryCondition &bc) {
    for (const auto &d : bc.dirichlet) {
        std::string axes;
        if (d.axes == axis_all) axes = "all";
        else
            for (int a = 0; a < 3; ++a)
                if (d.axes & (1u << a)) axes += static_cast<char>('x' + a);
        out << "dirichlet " << d.tag << ' ' << axes << '\n';
    }
    auto loads = [&](const char *kw, const std::vector<BoundaryCondition::Load> &v) {
        for (const auto &l : v) out << kw << ' ' << l.tag << ' ' << l.force[0] << ' ' << l.force[1] << ' ' << l.force[2] << '\n';
    };
    loads("traction", bc.traction);
    loads("point", bc.point_loads);
}

/// Sorted list of unknowns fixed by the Dirichlet part of bc.
inline std::vector<index_t> constrained_dofs(const Mesh &m, const BoundaryCondition &bc) {
    const index_t N = m.vertex_count();
    std::vector<bool> fixed(m.dim * N, false);
    for (const auto &c : bc.dirichlet) {
        auto it = m.tags.find(c.tag);
        if (it == m.tags.end()) throw error(error_kind::input, "boundary tag '" + c.tag + "' not present in mesh");
        for (int a = 0; a < m.dim; ++a)
            if (c.axes & (1u << a))
                for (index_t v : it->second) fixed[a * N + v] = true;
    }
    std::vector<index_t> out;
    for (index_t i = 0; i < fixed.size(); ++i)
        if (fixed[i]) out.push_back(i);
    return out;
}

/// Symmetric elimination of prescribed unknowns: rows and columns are zeroed,
/// the diagonal becomes 1 and the right-hand side takes the prescribed value.
/// The coupling to the prescribed values is moved to the right-hand side.
inline std::pair<SparseMatrix, Vector> apply_dirichlet(const SparseMatrix &A, const Vector &F,
                                                       const std::vector<index_t> &dofs,
                                                       const std::optional<Vector> &values = std::nullopt) {
    detail::require_dims(A.rows() == A.cols() && A.rows() == F.size(), "apply_dirichlet: dimension mismatch");
    std::vector<bool> fixed(A.rows(), false);
    Vector g(A.rows(), 0.0);
    for (index_t i : dofs) {
        detail::require_dims(i < A.rows(), "apply_dirichlet: constrained index out of range");
        fixed[i] = true;
        if (values) g[i] = (*values)[i];
    }

    Vector rhs = F;
    if (values) {
        const Vector Ag = spmv(A, g);
        for (index_t i = 0; i < rhs.size(); ++i) rhs[i] -= Ag[i];
    }

    std::vector<index_t> ptr(A.rows() + 1, 0), col;
    std::vector<double> val;
    col.reserve(A.nonzeros());
    val.reserve(A.nonzeros());
    for (index_t i = 0; i < A.rows(); ++i) {
        auto cols = A.row_cols(i);
        auto vals = A.row_vals(i);
        bool diag_done = false;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const index_t j = cols[k];
            if (fixed[i] || fixed[j]) {
                if (i == j) {
                    col.push_back(j);
                    val.push_back(1.0);
                    diag_done = true;
                }
                continue;
            }
            col.push_back(j);
            val.push_back(vals[k]);
        }
        if (fixed[i]) {
            rhs[i] = g[i];
            if (!diag_done) {
                // No stored diagonal: insert it at the sorted position.
                auto pos = std::lower_bound(col.begin() + static_cast<std::ptrdiff_t>(ptr[i]), col.end(), i);
                const auto off = pos - col.begin();
                col.insert(pos, i);
                val.insert(val.begin() + off, 1.0);
            }
        }
        ptr[i + 1] = col.size();
    }
    return {SparseMatrix(A.rows(), A.cols(), std::move(ptr), std::move(col), std::move(val)), std::move(rhs)};
}

/// Full assembly with homogeneous Dirichlet elimination.
inline AssembledSystem assemble(const Mesh &m, const Material &mat, const BoundaryCondition &bc) {
    detail::require(mat.youngs_modulus > 0 && mat.poisson_ratio >= 0 && mat.poisson_ratio < 0.5, error_kind::input,
                    "invalid material");
    detail::require(!m.elements.empty(), error_kind::input, "mesh has no elements");
    AssembledSystem sys;
    sys.dim = m.dim;
    sys.vertex_count = m.vertex_count();
    sys.constrained_dofs = constrained_dofs(m, bc);
    detail::require(!sys.constrained_dofs.empty(), error_kind::input,
                    "no Dirichlet constraint: the elasticity system would be singular");
    auto K = assemble_stiffness(m, mat);
    auto F = assemble_load(m, bc);
    std::tie(sys.A, sys.F) = apply_dirichlet(K, F, sys.constrained_dofs);
    return sys;
}

/// r = F - A U
inline Vector residual(const SparseMatrix &A, std::span<const double> F, std::span<const double> U) {
    detail::require_dims(A.rows() == F.size(), "residual: dimension mismatch");
    Vector r = spmv(A, U);
    for (index_t i = 0; i < r.size(); ++i) r[i] = F[i] - r[i];
    return r;
}

/// ||F - A U|| / ||F||, falling back to ||F - A U|| when F = 0.
inline double rel_res(const SparseMatrix &A, std::span<const double> F, std::span<const double> U) {
    const double rn = norm2(residual(A, F, U));
    const double fn = norm2(F);
    return fn > 0 ? rn / fn : rn;
}

} // namespace vasmg

#endif

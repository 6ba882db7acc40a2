// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "oracles.hpp"

using namespace vasmg;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool cond, const std::string &what) {
        if (!cond) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void criterion(int id, const char *name, double limit_seconds, const std::function<void(Verdict &)> &body) {
    Verdict v;
    const auto t0 = clock_type::now();
    try {
        body(v);
    } catch (const std::exception &e) {
        v.pass = false;
        v.detail << " [exception: " << e.what() << "]";
    }
    const double t = seconds_since(t0);
    if (limit_seconds > 0 && t >= limit_seconds) {
        v.pass = false;
        v.detail << " [runtime " << t << " s over the " << limit_seconds << " s limit]";
    }
    if (!v.pass) ++failures;
    std::printf("%s %2d %s:%s (%.2f s)\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.str().c_str(), t);
    std::fflush(stdout);
}

struct Solved {
    index_t unknowns = 0;
    index_t iterations = 0;
    bool converged = false;
    double rel_res = 0;
};

Solved solve_generated(MeshKind kind, int refinement, double nu, bool vasmg, double tol = 1e-6) {
    const Mesh m = generate_mesh(kind, refinement);
    const auto sys = assemble(m, make_material(1000, nu), default_load_case(kind));
    Vector U(sys.unknowns(), 0.0);
    SolveReport rep;
    if (vasmg) {
        const auto setup = setup_vasmg(m, sys);
        rep = pcg(sys.A, sys.F, VasmgPreconditioner(setup.hierarchy), U, {.tolerance = tol});
    } else {
        rep = pcg(sys.A, sys.F, IdentityPreconditioner{}, U, {.tolerance = tol});
    }
    return {sys.unknowns(), rep.iterations, rep.converged, rel_res(sys.A, sys.F, U)};
}

Eigen::SparseMatrix<double> eigen_sparse(const SparseMatrix &A) {
    std::vector<Eigen::Triplet<double>> t;
    for (index_t i = 0; i < A.rows(); ++i) {
        auto c = A.row_cols(i);
        auto v = A.row_vals(i);
        for (std::size_t k = 0; k < c.size(); ++k) t.emplace_back(int(i), int(c[k]), v[k]);
    }
    Eigen::SparseMatrix<double> M(Eigen::Index(A.rows()), Eigen::Index(A.cols()));
    M.setFromTriplets(t.begin(), t.end());
    return M;
}

/// 1D linear interpolation weight of fine lattice index i on coarse index I (coarse spacing = 2 fine).
double hat1d(long i, long I) {
    const long d = std::abs(i - 2 * I);
    return d == 0 ? 1.0 : (d == 1 ? 0.5 : 0.0);
}

} // namespace

int main() {
    // 1. Mesh-size robustness.
    criterion(1, "iteration counts under refinement (square-hole-plate r0/r1/r2)", 60, [](Verdict &v) {
        std::vector<Solved> mg, cg;
        for (int r = 0; r <= 2; ++r) {
            mg.push_back(solve_generated(MeshKind::square_hole_plate, r, 0.3, true));
            cg.push_back(solve_generated(MeshKind::square_hole_plate, r, 0.3, false));
        }
        for (int r = 0; r <= 2; ++r) {
            v.detail << " r" << r << ": dofs " << mg[r].unknowns << " vasmg " << mg[r].iterations << " cg "
                     << cg[r].iterations << ";";
            v.require(mg[r].converged && mg[r].rel_res <= 1e-6, "vasmg converged at r" + std::to_string(r));
            v.require(cg[r].converged && cg[r].rel_res <= 1e-6, "cg converged at r" + std::to_string(r));
            v.require(mg[r].iterations <= 1.5 * mg[0].iterations, "vasmg within 1.5x at r" + std::to_string(r));
        }
        v.require(cg[2].iterations >= 2 * cg[0].iterations, "plain CG grows at least 2x");
    });

    // 2. Degeneration to the bilinear stencil.
    criterion(2, "17x17 lattice, threshold 9: prolongation equals the 1, 1/2, 1/4 stencil", 1, [](Verdict &v) {
        const int n = 17;
        std::vector<Coord> coords;
        std::vector<Triplet> t;
        auto id = [&](int i, int j) { return index_t(j * n + i); };
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                coords.push_back({double(i) / (n - 1), double(j) / (n - 1), 0});
                t.push_back({id(i, j), id(i, j), 5.0});
                if (i > 0) t.push_back({id(i, j), id(i - 1, j), -1.0});
                if (i + 1 < n) t.push_back({id(i, j), id(i + 1, j), -1.0});
                if (j > 0) t.push_back({id(i, j), id(i, j - 1), -1.0});
                if (j + 1 < n) t.push_back({id(i, j), id(i, j + 1), -1.0});
            }
        const auto A = SparseMatrix::from_triplets(n * n, n * n, std::move(t));
        VasmgOptions opt;
        opt.threshold = 9;
        opt.hierarchy.coarsest_cap = 4;
        const auto points = to_points<2>(coords);
        const auto tree = RegionTree<2>::build(points, 9);
        const Hierarchy h = build_hierarchy<2>(A, {}, 1, tree, opt.hierarchy);

        // Fine lattice of level l has spacing 2^l / 16; the coarse one twice that.
        std::vector<Point<2>> fine(points.begin(), points.end());
        long mismatches = 0, checked = 0;
        for (index_t l = 0; l + 1 < h.size(); ++l) {
            const int depth = h.levels[l + 1].tree_depth;
            const auto coarse = coarse_level(tree, depth);
            const long nf = lround(std::sqrt(double(fine.size()))) - 1; // intervals per side
            if (coarse.vertex_count() != index_t((nf / 2 + 1) * (nf / 2 + 1)) || h.levels[l].P.cols() != coarse.vertex_count()) {
                ++mismatches;
                break;
            }
            const Eigen::MatrixXd P = oracle::dense(h.levels[l].P);
            for (index_t f = 0; f < fine.size(); ++f)
                for (index_t c = 0; c < coarse.vertex_count(); ++c) {
                    const long i = lround(fine[f][0] * nf), j = lround(fine[f][1] * nf);
                    const long I = lround(coarse.vertices[c][0] * nf / 2), J = lround(coarse.vertices[c][1] * nf / 2);
                    ++checked;
                    if (P(Eigen::Index(f), Eigen::Index(c)) != hat1d(i, I) * hat1d(j, J)) ++mismatches;
                }
            fine = coarse.vertices;
        }
        v.detail << " levels " << h.size() << ", " << checked << " entries compared, " << mismatches << " mismatches";
        v.require(h.size() >= 3, "at least two prolongations");
        v.require(mismatches == 0, "exact stencil");
    });

    // 3. Depth bound.
    criterion(3, "tree height <= q log2 N + 3/2 + 1 on random clouds", 10, [](Verdict &v) {
        for (int N : {1000, 10000}) {
            int worst_slack_ok = 0;
            double min_slack = 1e300;
            for (int seed = 0; seed < 10; ++seed) {
                std::mt19937_64 rng(1000 + seed);
                std::uniform_real_distribution<double> u(0, 1);
                std::vector<Point<2>> pts(N);
                for (auto &p : pts) p = {u(rng), u(rng)};
                // Exact all-pairs distances.
                double dmin2 = 1e300, dmax2 = 0;
                for (int a = 0; a < N; ++a)
                    for (int b = a + 1; b < N; ++b) {
                        const double dx = pts[a][0] - pts[b][0], dy = pts[a][1] - pts[b][1];
                        const double d2 = dx * dx + dy * dy;
                        dmin2 = std::min(dmin2, d2);
                        dmax2 = std::max(dmax2, d2);
                    }
                const double q = std::log(std::sqrt(dmax2 / dmin2)) / std::log(double(N));
                const double bound = q * std::log2(double(N)) + 1.5 + 1;
                const int height = RegionTree<2>::build(pts, 4).height();
                min_slack = std::min(min_slack, bound - height);
                if (height <= bound) ++worst_slack_ok;
            }
            v.detail << " N=" << N << ": " << worst_slack_ok << "/10 within, min slack " << min_slack << ";";
            v.require(worst_slack_ok == 10, "all seeds within the bound at N=" + std::to_string(N));
        }
    });

    // 4. Build-time scaling.
    criterion(4, "build_tree time grows <= 5x per 4x N (median of 5)", 30, [](Verdict &v) {
        std::vector<double> med;
        for (int N : {10000, 40000, 160000}) {
            std::mt19937_64 rng(N);
            std::uniform_real_distribution<double> u(0, 1);
            std::vector<Point<2>> pts(N);
            for (auto &p : pts) p = {u(rng), u(rng)};
            std::vector<double> t;
            RegionTree<2>::build(pts, 4); // untimed warm-up
            for (int rep = 0; rep < 5; ++rep) {
                const auto t0 = clock_type::now();
                const auto tree = RegionTree<2>::build(pts, 4);
                t.push_back(seconds_since(t0));
                if (tree.height() < 1) t.back() = 1e9;
            }
            std::sort(t.begin(), t.end());
            med.push_back(t[2]);
            v.detail << " N=" << N << ": " << t[2] * 1e3 << " ms;";
        }
        for (int k = 1; k < 3; ++k) v.require(med[k] <= 5 * med[k - 1], "ratio step " + std::to_string(k));
        v.detail << " ratios " << med[1] / med[0] << ", " << med[2] / med[1];
    });

    // 5. Oracle equivalence on small random FEM systems.
    criterion(5, "PCG(V-ASMG) vs dense LU on 24 random FEM systems <= 200 DOFs", 0, [](Verdict &v) {
        std::mt19937_64 rng(2024);
        std::uniform_int_distribution<int> side(1, 9);
        std::uniform_real_distribution<double> nu(0.0, 0.45), E(1, 1e4), f(-10, 10);
        double worst = 0;
        int systems = 0;
        while (systems < 24) {
            const int nx = side(rng), ny = side(rng);
            if (2 * (nx + 1) * (ny + 1) > 200) continue;
            const Mesh m = oracle::jittered_rectangle(rng, nx, ny, 1.0 + nx, 1.0 + ny);
            BoundaryCondition bc;
            bc.dirichlet.push_back({systems % 2 ? "left" : "bottom", axis_all});
            bc.traction.push_back({"right", {f(rng), f(rng), 0}});
            bc.point_loads.push_back({"top", {f(rng), f(rng), 0}});
            const auto sys = assemble(m, make_material(E(rng), nu(rng)), bc);
            const auto setup = setup_vasmg(m, sys);
            Vector U(sys.unknowns(), 0.0);
            const auto rep = pcg(sys.A, sys.F, VasmgPreconditioner(setup.hierarchy), U, {.tolerance = 1e-12});
            const Eigen::VectorXd ref = oracle::dense(sys.A).partialPivLu().solve(oracle::vec(sys.F));
            const double err = (oracle::vec(U) - ref).norm() / ref.norm();
            worst = std::max(worst, err);
            v.require(rep.converged, "converged");
            ++systems;
        }
        v.detail << " " << systems << " systems, worst relative error " << worst;
        v.require(worst <= 1e-8, "relative L2 error <= 1e-8");
    });

    // 6. Operator identities.
    criterion(6, "R = P^T, Galerkin recomputation, SPD levels (square-hole-plate r0)", 5, [](Verdict &v) {
        const Mesh m = generate_mesh(MeshKind::square_hole_plate, 0);
        const auto sys = assemble(m, make_material(1000, 0.3), default_load_case(MeshKind::square_hole_plate));
        double worst_rel = 0;
        bool transpose_exact = true, spd = true;
        for (index_t cap : {index_t{5000}, index_t{50}}) {
            VasmgOptions opt;
            opt.hierarchy.coarsest_cap = cap;
            const auto setup = setup_vasmg(m, sys, opt);
            const Hierarchy &h = *setup.hierarchy;
            for (index_t l = 0; l < h.size(); ++l) {
                const auto A = eigen_sparse(h.A(l));
                spd &= Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(A)).info() == Eigen::Success;
                if (l + 1 == h.size()) break;
                const auto P = eigen_sparse(h.levels[l].P);
                const auto R = eigen_sparse(h.levels[l].R);
                const Eigen::SparseMatrix<double> Pt = P.transpose();
                transpose_exact &=
                    R.nonZeros() == Pt.nonZeros() && Eigen::MatrixXd(R - Pt).cwiseAbs().maxCoeff() == 0.0;
                const Eigen::MatrixXd next = Eigen::MatrixXd(eigen_sparse(h.A(l + 1)));
                Eigen::MatrixXd cols(P.cols(), P.cols());
                for (Eigen::Index j = 0; j < P.cols(); ++j) {
                    const Eigen::VectorXd pj = Eigen::VectorXd(P.col(j));
                    cols.col(j) = Pt * (A * pj);
                }
                worst_rel = std::max(worst_rel, (next - cols).cwiseAbs().maxCoeff() / cols.cwiseAbs().maxCoeff());
            }
            v.detail << " cap " << cap << ": " << h.size() << " levels;";
        }
        v.detail << " recomputation error " << worst_rel;
        v.require(transpose_exact, "R equals P^T exactly");
        v.require(worst_rel <= 1e-12, "Galerkin recomputation within 1e-12");
        v.require(spd, "Cholesky succeeds on every level");
    });

    // 7. Preconditioner SPD suite.
    criterion(7, "preconditioner linearity, symmetry, positivity (50 DOFs)", 5, [](Verdict &v) {
        std::mt19937_64 rng(77);
        const Mesh m = oracle::jittered_rectangle(rng, 4, 4, 1.0, 1.0);
        BoundaryCondition bc;
        bc.dirichlet.push_back({"left", axis_all});
        const auto sys = assemble(m, make_material(1, 0.3), bc);
        VasmgOptions opt;
        opt.hierarchy.coarsest_cap = 8;
        const auto setup = setup_vasmg(m, sys, opt);
        const VasmgPreconditioner B(setup.hierarchy);
        const int n = int(sys.unknowns());
        double lin = 0, sym_abs = 0, sym_rel = 0, min_pos = 1e300;
        for (int t = 0; t < 100; ++t) {
            const Eigen::VectorXd r1 = oracle::random_vector(rng, n), r2 = oracle::random_vector(rng, n);
            const Eigen::VectorXd z1 = oracle::vec(B(oracle::vec(r1))), z2 = oracle::vec(B(oracle::vec(r2)));
            const double a = 0.7, b = -1.3;
            const Eigen::VectorXd zl = oracle::vec(B(oracle::vec(Eigen::VectorXd(a * r1 + b * r2))));
            lin = std::max(lin, (zl - (a * z1 + b * z2)).norm() / (a * z1 + b * z2).norm());
            const double d = std::abs(z1.dot(r2) - r1.dot(z2));
            sym_abs = std::max(sym_abs, d);
            sym_rel = std::max(sym_rel, d / (z1.norm() * r2.norm()));
            min_pos = std::min(min_pos, z1.dot(r1) / r1.squaredNorm());
        }
        v.detail << " n=" << n << " levels " << setup.hierarchy->size() << ", linearity " << lin << ", symmetry abs "
                 << sym_abs << " rel " << sym_rel << ", min <Br,r>/|r|^2 " << min_pos;
        v.require(n == 50, "50 unknowns");
        v.require(lin <= 1e-12, "linearity");
        v.require(sym_abs <= 1e-11 && sym_rel <= 1e-11, "symmetry within 1e-11");
        v.require(min_pos > 0, "positivity");
    });

    // 8. Gauss-Seidel contract.
    criterion(8, "A-norm error non-increasing per symmetric GS sweep (20 SPD systems)", 5, [](Verdict &v) {
        std::mt19937_64 rng(88);
        int increases = 0;
        double worst_growth = 0;
        for (int s = 0; s < 20; ++s) {
            const int n = 1 + int(rng() % 30);
            const Eigen::MatrixXd M = oracle::random_spd(rng, n, 0.5, 0.01);
            const Eigen::VectorXd f = oracle::random_vector(rng, n);
            const Eigen::VectorXd x = M.llt().solve(f);
            const SparseMatrix A = oracle::sparse(M);
            Vector U = oracle::vec(oracle::random_vector(rng, n));
            double prev = oracle::energy_norm(M, oracle::vec(U) - x);
            for (int k = 0; k < 50; ++k) {
                U = gs_sweep(A, oracle::vec(f), U, {1, SweepOrder::symmetric});
                const double e = oracle::energy_norm(M, oracle::vec(U) - x);
                // Allow only rounding at the level of the initial error.
                if (e > prev + 1e-13 * oracle::energy_norm(M, x)) ++increases;
                worst_growth = std::max(worst_growth, e - prev);
                prev = e;
            }
        }
        v.detail << " increases " << increases << ", largest step change " << worst_growth;
        v.require(increases == 0, "monotone");
    });

    // 9. Poisson-ratio robustness.
    criterion(9, "iteration counts across nu in {0.1, 0.3, 0.45} (hole-plate r1) within 2x", 60, [](Verdict &v) {
        index_t lo = ~index_t{0}, hi = 0;
        for (double nu : {0.1, 0.3, 0.45}) {
            const auto s = solve_generated(MeshKind::hole_plate, 1, nu, true);
            v.detail << " nu=" << nu << ": " << s.iterations << ";";
            v.require(s.converged, "converged");
            lo = std::min(lo, s.iterations);
            hi = std::max(hi, s.iterations);
        }
        v.detail << " ratio " << double(hi) / double(lo);
        v.require(hi <= 2 * lo, "max/min <= 2");
    });

    // 10. 3D smoke test.
    criterion(10, "tetrahedral box (~5k DOFs) to 1e-6 within 200 iterations", 60, [](Verdict &v) {
        int refinement = 0;
        for (int r = 0; r <= 6; ++r) {
            const index_t dofs = 3 * generate_mesh(MeshKind::box, r).vertex_count();
            refinement = r;
            if (dofs >= 4000) break;
        }
        const auto s = solve_generated(MeshKind::box, refinement, 0.3, true);
        v.detail << " refinement " << refinement << ", dofs " << s.unknowns << ", iterations " << s.iterations
                 << ", rel_res " << s.rel_res;
        v.require(s.unknowns >= 4000 && s.unknowns <= 7000, "about 5k unknowns");
        v.require(s.converged && s.rel_res <= 1e-6, "converged");
        v.require(s.iterations <= 200, "<= 200 iterations");
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace vasmg;

namespace {

struct Problem {
    Mesh mesh;
    AssembledSystem sys;
    VasmgSetup setup;
};

/// Jittered nx x ny rectangle clamped on the left, loaded on the right.
Problem small_problem(std::uint64_t seed, int nx, int ny, index_t cap) {
    std::mt19937_64 rng(seed);
    Problem p;
    p.mesh = oracle::jittered_rectangle(rng, nx, ny, nx, ny);
    BoundaryCondition bc;
    bc.dirichlet.push_back({"left", axis_all});
    bc.traction.push_back({"right", {1, -0.5, 0}});
    p.sys = assemble(p.mesh, make_material(100, 0.3), bc);
    p.setup = setup_vasmg(p.mesh, p.sys, VasmgOptions{.threshold = 2, .hierarchy = {.coarsest_cap = cap}});
    return p;
}

/// Dense Gauss-Seidel sweep, forward or backward.
void dense_gs(const Eigen::MatrixXd &A, const Eigen::VectorXd &f, Eigen::VectorXd &u, bool forward) {
    const Eigen::Index n = A.rows();
    for (Eigen::Index s = 0; s < n; ++s) {
        const Eigen::Index i = forward ? s : n - 1 - s;
        double acc = f(i);
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) acc -= A(i, j) * u(j);
        u(i) = acc / A(i, i);
    }
}

} // namespace

TEST(VCycle, SingleLevelIsExact) {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd M = oracle::random_spd(rng, 15);
    const Hierarchy h = Hierarchy::direct(oracle::sparse(M));
    const Eigen::VectorXd f = oracle::random_vector(rng, 15);
    const Vector u = v_cycle(h, 0, oracle::vec(f), Vector(15, 0.0), {});
    EXPECT_LE((M * oracle::vec(u) - f).norm() / f.norm(), 1e-10);
}

TEST(VCycle, TwoLevelMatchesDenseMirror) {
    const auto p = small_problem(3, 4, 1, 5000);
    const Hierarchy &h = *p.setup.hierarchy;
    ASSERT_EQ(h.size(), 2u);
    ASSERT_EQ(p.sys.unknowns(), 20u);
    const Eigen::MatrixXd A = oracle::dense(h.A(0)), P = oracle::dense(h.levels[0].P);
    const Eigen::MatrixXd Ac = P.transpose() * A * P;
    const Eigen::VectorXd F = oracle::vec(p.sys.F);

    for (unsigned n : {1u, 3u}) {
        const VCycleConfig cfg{n, n};
        Eigen::VectorXd u = Eigen::VectorXd::Zero(20);
        for (unsigned s = 0; s < n; ++s) dense_gs(A, F, u, true);
        const Eigen::VectorXd rc = P.transpose() * (F - A * u);
        const Eigen::VectorXd ec = Ac.completeOrthogonalDecomposition().solve(rc);
        u += P * ec;
        for (unsigned s = 0; s < n; ++s) dense_gs(A, F, u, false);

        const Vector U = v_cycle(h, 0, p.sys.F, Vector(20, 0.0), cfg);
        EXPECT_LE((oracle::vec(U) - u).norm(), 1e-12 * u.norm());
        EXPECT_LT((F - A * oracle::vec(U)).norm() / F.norm(), 0.9);
    }
}

TEST(VCycle, LinearFromZeroGuess) {
    const auto p = small_problem(5, 6, 4, 20);
    const Hierarchy &h = *p.setup.hierarchy;
    ASSERT_GE(h.size(), 3u);
    std::mt19937_64 rng(2);
    const index_t n = p.sys.unknowns();
    const Vector zero(n, 0.0);
    for (int t = 0; t < 10; ++t) {
        const Eigen::VectorXd f1 = oracle::random_vector(rng, int(n)), f2 = oracle::random_vector(rng, int(n));
        const double a = 1.7, b = -0.4;
        const Eigen::VectorXd lhs = oracle::vec(v_cycle(h, 0, oracle::vec(Eigen::VectorXd(a * f1 + b * f2)), zero, {}));
        const Eigen::VectorXd rhs =
            a * oracle::vec(v_cycle(h, 0, oracle::vec(f1), zero, {})) + b * oracle::vec(v_cycle(h, 0, oracle::vec(f2), zero, {}));
        EXPECT_LE((lhs - rhs).norm(), 1e-12 * rhs.norm());
    }
}

TEST(Preconditioner, SymmetricPositiveDefinite) {
    const auto p = small_problem(7, 4, 4, 12);
    ASSERT_EQ(p.sys.unknowns(), 50u);
    ASSERT_GE(p.setup.hierarchy->size(), 3u);
    const VasmgPreconditioner B(p.setup.hierarchy);
    std::mt19937_64 rng(6);
    EXPECT_EQ(B(Vector(50, 0.0)), Vector(50, 0.0));
    for (int t = 0; t < 100; ++t) {
        const Eigen::VectorXd r1 = oracle::random_vector(rng, 50), r2 = oracle::random_vector(rng, 50);
        const Eigen::VectorXd z1 = oracle::vec(B(oracle::vec(r1))), z2 = oracle::vec(B(oracle::vec(r2)));
        EXPECT_LE(std::abs(z1.dot(r2) - r1.dot(z2)), 1e-11 * std::max(1.0, std::abs(z1.dot(r2))));
        EXPECT_GT(z1.dot(r1), 0);
    }
    const Vector r = oracle::vec(oracle::random_vector(rng, 50));
    EXPECT_EQ(B(r), B(r)); // bitwise repeatable
}

TEST(Preconditioner, ConstrainedEntriesPassThrough) {
    const auto p = small_problem(9, 5, 3, 20);
    const VasmgPreconditioner B(p.setup.hierarchy);
    std::mt19937_64 rng(1);
    const Vector r = oracle::vec(oracle::random_vector(rng, int(p.sys.unknowns())));
    const Vector z = B(r);
    for (index_t c : p.sys.constrained_dofs) EXPECT_EQ(z[c], r[c]);
}

TEST(VCycle, PreservesConstraints) {
    const auto p = small_problem(11, 6, 3, 20);
    const Hierarchy &h = *p.setup.hierarchy;
    Vector U(p.sys.unknowns(), 0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    const auto mask = p.sys.constrained_mask();
    for (index_t i = 0; i < U.size(); ++i)
        if (!mask[i]) U[i] = u(rng);
    for (int k = 0; k < 5; ++k) {
        U = v_cycle(h, 0, p.sys.F, U, {});
        for (index_t c : p.sys.constrained_dofs) EXPECT_EQ(U[c], 0.0);
    }
}

TEST(MgSolve, HolePlateConverges) {
    const Mesh m = generate_mesh(MeshKind::hole_plate, 0);
    const auto sys = assemble(m, make_material(1000, 0.3), default_load_case(MeshKind::hole_plate));
    const auto setup = setup_vasmg(m, sys);
    const auto rep = mg_solve(*setup.hierarchy, sys.F, Vector(sys.unknowns(), 0.0), 100, 1e-6);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iterations, 100u);
    EXPECT_LT(rel_res(sys.A, sys.F, rep.U), 1e-6);
    EXPECT_EQ(rep.rel_res_history.size(), rep.iterations + 1);
    EXPECT_EQ(rep.rel_res_history.front(), 1.0);

    const auto exact = mg_solve(*setup.hierarchy, Vector(sys.unknowns(), 0.0), Vector(sys.unknowns(), 0.0), 100, 1e-6);
    EXPECT_TRUE(exact.converged);
    EXPECT_EQ(exact.iterations, 0u);
}

TEST(MgSolve, TighterToleranceNeverWorse) {
    const auto p = small_problem(13, 8, 5, 20);
    const Eigen::MatrixXd A = oracle::dense(p.sys.A);
    const Eigen::VectorXd x = A.ldlt().solve(oracle::vec(p.sys.F));
    double prev = 1e300;
    for (double eps = 1e-2; eps >= 1e-10; eps /= 2) {
        const auto rep = mg_solve(*p.setup.hierarchy, p.sys.F, Vector(p.sys.unknowns(), 0.0), 1000, eps);
        ASSERT_TRUE(rep.converged);
        const double e = oracle::energy_norm(A, oracle::vec(rep.U) - x);
        EXPECT_LE(e, prev * (1 + 1e-10));
        prev = e;
    }
}

TEST(MgSolve, NonConvergedIsReported) {
    const auto p = small_problem(15, 8, 5, 20);
    const auto rep = mg_solve(*p.setup.hierarchy, p.sys.F, Vector(p.sys.unknowns(), 0.0), 1, 1e-14);
    EXPECT_FALSE(rep.converged);
    EXPECT_EQ(rep.iterations, 1u);
}

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace vasmg;

namespace {

using P2 = Point<2>;

std::vector<P2> lattice(int n, double side = 1.0) {
    std::vector<P2> pts;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) pts.push_back({side * i / (n - 1), side * j / (n - 1)});
    return pts;
}

std::vector<P2> cloud(std::uint64_t seed, int n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<P2> pts(n);
    for (auto &p : pts) p = {u(rng), u(rng)};
    return pts;
}

double max_rel(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

} // namespace

TEST(ScalarWeights, Examples) {
    const P2 lo{0, 0}, hi{1, 1};
    for (int c = 0; c < 4; ++c) {
        const P2 p{double(corner_offset<2>(c, 0)), double(corner_offset<2>(c, 1))};
        const auto w = scalar_weights<2>(lo, hi, p);
        for (int k = 0; k < 4; ++k) EXPECT_EQ(w[k], k == c ? 1.0 : 0.0);
    }
    for (double w : scalar_weights<2>(lo, hi, {0.5, 0.5})) EXPECT_EQ(w, 0.25);
    for (double w : scalar_weights<2>({0, 0.5}, {0.5, 1}, {0.25, 0.75})) EXPECT_EQ(w, 0.25);
    for (double w : scalar_weights<3>({0, 0, 0}, {2, 2, 2}, {1, 1, 1})) EXPECT_EQ(w, 0.125);

    // Clockwise order from top-left: (0,1) (1,1) (1,0) (0,0).
    const auto w = scalar_weights<2>(lo, hi, {0.25, 0.5});
    EXPECT_EQ(w[0], 0.375);
    EXPECT_EQ(w[1], 0.125);
    EXPECT_EQ(w[2], 0.125);
    EXPECT_EQ(w[3], 0.375);

    EXPECT_THROW(scalar_weights<2>(lo, hi, {1.5, 0.5}), error);
    EXPECT_THROW(scalar_weights<2>(lo, {0, 1}, {0, 0.5}), error);
}

TEST(ScalarWeights, PartitionOfUnityAndRange) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 1000; ++t) {
        const Point<3> lo{u(rng), u(rng), u(rng)}, hi{lo[0] + 0.1 + u(rng), lo[1] + 0.1 + u(rng), lo[2] + 0.1 + u(rng)};
        Point<3> p;
        for (int a = 0; a < 3; ++a) p[a] = lo[a] + u(rng) * (hi[a] - lo[a]);
        const auto w = scalar_weights<3>(lo, hi, p);
        double s = 0;
        for (double x : w) {
            EXPECT_GE(x, 0);
            EXPECT_LE(x, 1);
            s += x;
        }
        EXPECT_NEAR(s, 1.0, 1e-14);
        // Multilinear reproduction of the coordinates.
        for (int a = 0; a < 3; ++a) {
            double r = 0;
            for (int c = 0; c < 8; ++c) r += w[c] * (corner_offset<3>(c, a) ? hi[a] : lo[a]);
            EXPECT_NEAR(r, p[a], 1e-13);
        }
    }
}

TEST(ScalarWeights, LiteralVariantIsComplement) {
    const auto w = scalar_weights<2>({0, 0}, {1, 1}, {0, 1}, true);
    EXPECT_EQ(w[0], 0.0); // coincident corner gets nothing
    EXPECT_EQ(w[2], 1.0); // opposite corner gets everything
}

TEST(Prolongation, FivePointRow) {
    std::vector<P2> pts = {{0, 1}, {1, 1}, {1, 0}, {0, 0}, {0.25, 0.75}};
    const auto tree = RegionTree<2>::build(pts, 4);
    const auto L = finest_level(tree);
    const auto T = build_prolongation<2>(tree, pts, L, 1);
    const Eigen::MatrixXd P = oracle::dense(T.P);
    ASSERT_EQ(P.rows(), 5);
    ASSERT_EQ(P.cols(), 9);
    const auto &cell = L.cells[0]; // top-left
    for (int c = 0; c < 4; ++c) EXPECT_EQ(P(4, cell.corners[c]), 0.25);
    EXPECT_EQ(P.row(4).sum(), 1.0);
    for (int v = 0; v < 4; ++v) EXPECT_EQ(P.row(v).cwiseAbs().sum(), 1.0);
    EXPECT_EQ(T.P.nonzeros(), 8u);
}

TEST(Prolongation, NestedLatticeIsSelection) {
    const auto pts = lattice(3);
    const auto tree = RegionTree<2>::build(pts, 4);
    const auto L = finest_level(tree);
    ASSERT_EQ(L.vertex_count(), 9u);
    const Eigen::MatrixXd P = oracle::dense(build_prolongation<2>(tree, pts, L, 1).P);
    for (int i = 0; i < 9; ++i) {
        EXPECT_EQ((P.row(i).array() == 1.0).count(), 1);
        EXPECT_EQ((P.row(i).array() != 0.0).count(), 1);
    }
    for (int j = 0; j < 9; ++j) EXPECT_EQ(P.col(j).sum(), 1.0);
}

TEST(Prolongation, DegeneratesToBilinearStencil) {
    // 17x17 lattice, threshold 9: the finest auxiliary grid is the 9x9 lattice of spacing 2h.
    const auto pts = lattice(17);
    const auto tree = RegionTree<2>::build(pts, 9);
    const auto L = finest_level(tree);
    ASSERT_EQ(L.vertex_count(), 81u);
    const Eigen::MatrixXd P = oracle::dense(build_prolongation<2>(tree, pts, L, 1).P);
    auto w1 = [](int i, int I) { return i == 2 * I ? 1.0 : (std::abs(i - 2 * I) == 1 ? 0.5 : 0.0); };
    for (int f = 0; f < 289; ++f) {
        const int i = f % 17, j = f / 17;
        for (index_t c = 0; c < 81; ++c) {
            const int I = static_cast<int>(std::lround(L.vertices[c][0] * 8)), J = static_cast<int>(std::lround(L.vertices[c][1] * 8));
            ASSERT_EQ(L.vertices[c][0], I / 8.0);
            EXPECT_EQ(P(f, c), w1(i, I) * w1(j, J)) << "fine " << f << " coarse " << c;
        }
    }
}

TEST(Prolongation, ReproducesBilinearFields) {
    const auto pts = cloud(11, 300);
    const auto tree = RegionTree<2>::build(pts, 4);
    auto f = [](const P2 &p) { return 0.3 - 1.2 * p[0] + 2.5 * p[1] + 0.7 * p[0] * p[1]; };
    for (int depth = 1; depth <= tree.height(); ++depth) {
        const auto L = coarse_level(tree, depth);
        Vector fc(L.vertex_count());
        for (index_t c = 0; c < fc.size(); ++c) fc[c] = f(L.vertices[c]);
        const Vector ff = spmv(build_prolongation<2>(tree, pts, L, 1).P, fc);
        for (index_t k = 0; k < pts.size(); ++k) EXPECT_NEAR(ff[k], f(pts[k]), 1e-13);
    }
}

TEST(Prolongation, BlockLayoutAndZeroRows) {
    const auto pts = cloud(2, 60);
    const auto tree = RegionTree<2>::build(pts, 4);
    const auto L = coarse_level(tree, 2);
    const Eigen::MatrixXd S = oracle::dense(build_prolongation<2>(tree, pts, L, 1).P);
    const index_t nf = pts.size(), nc = L.vertex_count();
    std::vector<bool> zero(2 * nf, false);
    zero[3] = zero[nf + 7] = true;
    const auto T = build_prolongation<2>(tree, pts, L, 2, &zero);
    EXPECT_EQ(T.fine_count, nf);
    EXPECT_EQ(T.coarse_count, nc);
    const Eigen::MatrixXd P = oracle::dense(T.P);
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(2 * nf, 2 * nc);
    expect.topLeftCorner(nf, nc) = S;
    expect.bottomRightCorner(nf, nc) = S;
    expect.row(3).setZero();
    expect.row(nf + 7).setZero();
    EXPECT_EQ(P, expect);
    EXPECT_EQ(oracle::dense(T.restriction()), P.transpose());
    EXPECT_THROW(build_prolongation<2>(tree, pts, L, 3, &zero), error);
}

TEST(Hierarchy, SingleLeafTree) {
    std::mt19937_64 rng(1);
    const std::vector<P2> pts = {{0, 1}, {1, 1}, {1, 0}, {0, 0}};
    const auto tree = RegionTree<2>::build(pts, 4);
    const SparseMatrix A = oracle::sparse(oracle::random_spd(rng, 8));
    const auto h = build_hierarchy<2>(A, {}, 2, tree);
    ASSERT_EQ(h.size(), 2u);
    EXPECT_EQ(h.coarsest->order(), 8u);
    // Corners coincide with the points, so A_1 = A.
    EXPECT_LT(max_rel(oracle::dense(h.A(1)), oracle::dense(A)), 1e-15);
}

TEST(Hierarchy, OperatorIdentities) {
    const Mesh m = generate_mesh(MeshKind::dam_trapezoid, 0);
    const auto sys = assemble(m, make_material(1000, 0.3), default_load_case(MeshKind::dam_trapezoid));
    const auto setup = setup_vasmg(m, sys, VasmgOptions{.hierarchy = {.coarsest_cap = 50}});
    const Hierarchy &h = *setup.hierarchy;
    ASSERT_GE(h.size(), 3u);
    std::mt19937_64 rng(4);
    for (index_t l = 0; l + 1 < h.size(); ++l) {
        const auto &L = h.levels[l];
        const Eigen::MatrixXd P = oracle::dense(L.P), A = oracle::dense(L.A);
        EXPECT_EQ(oracle::dense(L.R), P.transpose());
        // Column-by-column recomputation of the Galerkin product.
        Eigen::MatrixXd Ac(P.cols(), P.cols());
        for (Eigen::Index j = 0; j < P.cols(); ++j) {
            const Vector col = oracle::vec(Eigen::VectorXd(P.col(j)));
            Ac.col(j) = P.transpose() * oracle::vec(spmv(L.A, col));
        }
        const Eigen::MatrixXd next = oracle::dense(h.A(l + 1));
        EXPECT_LE(max_rel(next, Ac), 1e-12);
        EXPECT_LE((next - next.transpose()).cwiseAbs().maxCoeff(), 1e-12 * next.cwiseAbs().maxCoeff());
        EXPECT_LE(P.maxCoeff(), 1.0);
        EXPECT_GE(P.minCoeff(), 0.0);
        for (int s = 0; s < 100; ++s) {
            const Eigen::VectorXd w = oracle::random_vector(rng, static_cast<int>(next.rows()));
            EXPECT_GT(w.dot(next * w), 0);
        }
        (void)A;
    }
    // Constrained fine unknowns never receive coarse corrections.
    const Eigen::MatrixXd P0 = oracle::dense(h.levels[0].P);
    for (index_t c : sys.constrained_dofs) EXPECT_EQ(P0.row(c).cwiseAbs().sum(), 0.0);
    EXPECT_EQ(setup.levels().size(), h.size());
    EXPECT_EQ(setup.levels()[0].unknowns, sys.unknowns());
}

TEST(Hierarchy, CoarsestCapTooSmall) {
    const Mesh m = generate_mesh(MeshKind::ring_quadrant, 0);
    const auto sys = assemble(m, make_material(1000, 0.3), default_load_case(MeshKind::ring_quadrant));
    try {
        setup_vasmg(m, sys, VasmgOptions{.hierarchy = {.coarsest_cap = 1}});
        FAIL();
    } catch (const error &e) {
        EXPECT_EQ(e.kind(), error_kind::numerical);
        EXPECT_NE(std::string(e.what()).find("coarsest cap"), std::string::npos);
    }
}

TEST(Hierarchy, RejectsSizeMismatch) {
    const auto tree = RegionTree<2>::build(lattice(3), 4);
    EXPECT_THROW(build_hierarchy<2>(SparseMatrix::identity(10), {}, 1, tree), error);
}

TEST(Hierarchy, OctreePath) {
    const Mesh m = generate_mesh(MeshKind::box, 0);
    const auto sys = assemble(m, make_material(1000, 0.3), default_load_case(MeshKind::box));
    const auto setup = setup_vasmg(m, sys, VasmgOptions{.hierarchy = {.coarsest_cap = 100}});
    EXPECT_EQ(setup.threshold, 8u);
    const auto &h = *setup.hierarchy;
    ASSERT_GE(h.size(), 2u);
    // Scalar rows of the first prolongation have at most 8 entries.
    const auto &P = h.levels[0].P;
    for (index_t i = 0; i < P.rows(); ++i) EXPECT_LE(P.row_cols(i).size(), 8u);
    for (index_t l = 0; l < h.size(); ++l) EXPECT_LT(asymmetry(h.A(l)), 1e-12);
}

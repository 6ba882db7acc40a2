// Batch front-end: load or generate a problem, build the hierarchy, solve,
// write the report, residual history and solution.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <vasmg/vasmg.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vasmg;

namespace {

constexpr const char *tool_version = "0.1.0";

struct Config {
    std::string mesh, mesh_format = "node-ele", bc;
    std::string generate;
    int refinement = 0;
    std::string matrix, rhs, coords;
    double youngs = 1000, poisson = 0.3;
    bool plane_stress = false;

    std::string solver = "pcg-vasmg";
    std::vector<std::string> solvers;
    index_t threshold = 0;
    unsigned pre_sweeps = 3, post_sweeps = 3, cycles = 1;
    double tol = 1e-6;
    index_t max_iters = 0;
    index_t coarsest_cap = 5000;
    index_t reference_cap = 20000;
    bool literal_weights = false;

    std::string report, history_csv, solution, dump_tree, dump_hierarchy, export_system, csv;
};

struct Problem {
    std::string source;
    json meta;
    std::optional<Mesh> mesh;
    std::vector<Coord> coords;
    int dim = 0;
    int blocks = 0;
    SparseMatrix A;
    Vector F;
    std::vector<index_t> constrained;
};

// Outputs are staged in memory and only written once everything succeeded.
class Artifacts {
  public:
    void add(const std::string &path, std::string content) {
        if (!path.empty()) files_.push_back({path, std::move(content)});
    }
    void commit() {
        std::vector<fs::path> written;
        try {
            for (const auto &[path, content] : files_) {
                const fs::path p(path);
                if (p.has_parent_path()) fs::create_directories(p.parent_path());
                const fs::path tmp = p.string() + ".tmp";
                {
                    std::ofstream out(tmp, std::ios::binary);
                    if (!out) throw error(error_kind::input, "cannot write " + path);
                    out << content;
                    if (!out) throw error(error_kind::input, "cannot write " + path);
                }
                fs::rename(tmp, p);
                written.push_back(p);
            }
        } catch (...) {
            for (const auto &p : written) fs::remove(p);
            for (const auto &f : files_) fs::remove(fs::path(f.first + ".tmp"));
            throw;
        }
    }

  private:
    std::vector<std::pair<std::string, std::string>> files_;
};

bool is_symmetric(const SparseMatrix &A) {
    return A.rows() == A.cols() && asymmetry(A) <= 1e-12 * std::max(A.max_abs(), 1e-300);
}

std::vector<Coord> read_coords(const std::string &path, int &dim) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), error_kind::input, "cannot open " + path);
    std::vector<Coord> out;
    std::string line;
    dim = 0;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (auto h = line.find_first_of("#%"); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        Coord c{0, 0, 0};
        int n = 0;
        double x;
        while (ls >> x) {
            detail::require(n < 3, error_kind::input, path + ":" + std::to_string(lineno) + ": more than 3 coordinates");
            c[n++] = x;
        }
        if (n == 0) continue;
        detail::require(ls.eof(), error_kind::input, path + ":" + std::to_string(lineno) + ": bad number");
        detail::require(n == 2 || n == 3, error_kind::input, path + ":" + std::to_string(lineno) + ": need 2 or 3 coordinates");
        detail::require(dim == 0 || dim == n, error_kind::input, path + ":" + std::to_string(lineno) + ": inconsistent dimension");
        dim = n;
        out.push_back(c);
    }
    detail::require(!out.empty(), error_kind::input, path + ": no coordinates");
    return out;
}

// Rows holding nothing but a unit diagonal are eliminated Dirichlet unknowns.
std::vector<index_t> unit_rows(const SparseMatrix &A) {
    std::vector<index_t> out;
    for (index_t i = 0; i < A.rows(); ++i) {
        auto c = A.row_cols(i);
        auto v = A.row_vals(i);
        std::size_t nz = 0;
        bool unit = false;
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (v[k] == 0.0) continue;
            ++nz;
            unit = c[k] == i && v[k] == 1.0;
        }
        if (nz == 1 && unit) out.push_back(i);
    }
    return out;
}

json material_json(const Material &m, bool plane_stress) {
    return {{"youngs_modulus", m.youngs_modulus}, {"poisson_ratio", m.poisson_ratio}, {"lame_mu", m.lame_mu},
            {"lame_lambda", m.lame_lambda}, {"plane_stress", plane_stress}};
}

Problem load_problem(const Config &cfg) {
    const int sources = !cfg.mesh.empty() + !cfg.generate.empty() + !cfg.matrix.empty();
    detail::require(sources == 1, error_kind::input, "exactly one of --mesh, --generate, --matrix is required");
    detail::require(cfg.tol > 0, error_kind::input, "--tol must be positive");

    Problem p;
    if (!cfg.matrix.empty()) {
        p.source = "matrix";
        p.A = io::read_matrix_market(cfg.matrix);
        detail::require_dims(p.A.rows() == p.A.cols(), "system matrix is not square");
        p.F = cfg.rhs.empty() ? Vector(p.A.rows(), 1.0) : io::read_vector(cfg.rhs);
        detail::require_dims(p.F.size() == p.A.rows(), "right-hand side length does not match the matrix");
        p.constrained = unit_rows(p.A);
        p.meta = {{"source", "matrix"}, {"matrix", cfg.matrix}, {"rhs", cfg.rhs.empty() ? json(nullptr) : json(cfg.rhs)}};
        if (!cfg.coords.empty()) {
            p.coords = read_coords(cfg.coords, p.dim);
            detail::require_dims(p.A.rows() % p.coords.size() == 0,
                                 "matrix order is not a multiple of the number of coordinates");
            p.blocks = static_cast<int>(p.A.rows() / p.coords.size());
        }
        return p;
    }

    const Material mat = cfg.plane_stress ? make_plane_stress_material(cfg.youngs, cfg.poisson)
                                          : make_material(cfg.youngs, cfg.poisson);
    BoundaryCondition bc;
    if (!cfg.generate.empty()) {
        p.source = "generate";
        const MeshKind kind = parse_mesh_kind(cfg.generate);
        p.mesh = generate_mesh(kind, cfg.refinement);
        bc = cfg.bc.empty() ? default_load_case(kind) : read_boundary_conditions(cfg.bc);
        p.meta = {{"source", "generate"}, {"kind", to_string(kind)}, {"refinement", cfg.refinement}};
    } else {
        p.source = "mesh";
        detail::require(!cfg.bc.empty(), error_kind::input, "--mesh needs --bc");
        p.mesh = read_mesh(cfg.mesh, parse_mesh_format(cfg.mesh_format));
        bc = read_boundary_conditions(cfg.bc);
        p.meta = {{"source", "mesh"}, {"mesh", cfg.mesh}, {"format", cfg.mesh_format}, {"bc", cfg.bc}};
    }
    auto sys = assemble(*p.mesh, mat, bc);
    p.meta["elements"] = p.mesh->elements.size();
    p.meta["material"] = material_json(mat, cfg.plane_stress);
    p.coords = p.mesh->vertices;
    p.dim = p.mesh->dim;
    p.blocks = sys.dim;
    p.A = std::move(sys.A);
    p.F = std::move(sys.F);
    p.constrained = std::move(sys.constrained_dofs);
    return p;
}

bool needs_hierarchy(const std::string &solver) { return solver == "pcg-vasmg" || solver == "mg-standalone"; }

void check_solver(const std::string &s) {
    static const std::vector<std::string> known{"pcg-vasmg", "pcg-plain", "pcg-jacobi", "gs", "mg-standalone"};
    detail::require(std::find(known.begin(), known.end(), s) != known.end(), error_kind::input,
                    "unknown solver '" + s + "'");
}

struct Outcome {
    std::string solver;
    Vector U;
    SolveReport report;
    std::optional<VasmgSetup> setup;
};

VasmgOptions vasmg_options(const Config &cfg, bool keep_dump) {
    VasmgOptions o;
    o.threshold = cfg.threshold;
    o.hierarchy.coarsest_cap = cfg.coarsest_cap;
    o.hierarchy.literal_weights = cfg.literal_weights;
    o.keep_tree_dump = keep_dump;
    return o;
}

Outcome solve(const Problem &p, const Config &cfg, const std::string &solver, bool keep_dump) {
    check_solver(solver);
    Outcome out;
    out.solver = solver;
    out.U.assign(p.A.rows(), 0.0);
    const index_t k_max = cfg.max_iters ? cfg.max_iters : default_max_iterations(p.A.rows());
    const VCycleConfig vc{cfg.pre_sweeps, cfg.post_sweeps, CycleKind::V, cfg.cycles};

    if (needs_hierarchy(solver)) {
        detail::require(!p.coords.empty(), error_kind::input, solver + " needs vertex coordinates (--coords with --matrix)");
        detail::require(cfg.pre_sweeps >= 1 && cfg.post_sweeps >= 1, error_kind::input,
                        "pre- and post-smoothing sweeps must be >= 1");
        out.setup = setup_vasmg(p.coords, p.dim, p.A, p.constrained, p.blocks, vasmg_options(cfg, keep_dump));
    }

    PcgOptions po;
    po.max_iterations = k_max;
    po.tolerance = cfg.tol;
    if (solver == "pcg-vasmg") {
        out.report = pcg(p.A, p.F, VasmgPreconditioner(out.setup->hierarchy, vc), out.U, po);
    } else if (solver == "pcg-plain") {
        out.report = pcg(p.A, p.F, IdentityPreconditioner{}, out.U, po);
    } else if (solver == "pcg-jacobi") {
        const auto t0 = std::chrono::steady_clock::now();
        JacobiPreconditioner B(p.A);
        const double st = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.report = pcg(p.A, p.F, B, out.U, po);
        out.report.setup_seconds = st;
    } else if (solver == "gs") {
        const auto t0 = std::chrono::steady_clock::now();
        GaussSeidel gs(p.A);
        const double fn = norm2(p.F) > 0 ? norm2(p.F) : 1.0;
        auto &r = out.report;
        auto record = [&] {
            r.rel_res_history.push_back(norm2(residual(p.A, p.F, out.U)) / fn);
            r.wall_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        };
        record();
        while (r.rel_res_history.back() >= cfg.tol && r.iterations < k_max) {
            gs.forward(p.F, out.U);
            ++r.iterations;
            record();
        }
        r.converged = r.rel_res_history.back() < cfg.tol;
        r.apply_seconds = r.wall_seconds.back();
    } else {
        const auto t0 = std::chrono::steady_clock::now();
        auto mg = mg_solve(*out.setup->hierarchy, p.F, out.U, k_max, cfg.tol, vc);
        out.U = std::move(mg.U);
        auto &r = out.report;
        r.iterations = mg.iterations;
        r.rel_res_history = std::move(mg.rel_res_history);
        r.converged = mg.converged;
        r.apply_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r.wall_seconds.assign(r.rel_res_history.size(), r.apply_seconds);
    }
    if (out.setup) out.report.setup_seconds = out.setup->total_seconds;
    out.report.total_seconds = out.report.setup_seconds + out.report.apply_seconds;
    const double fn = norm2(p.F);
    const double res = norm2(residual(p.A, p.F, out.U));
    out.report.final_rel_res_rhs = fn > 0 ? res / fn : res;
    return out;
}

json report_json(const Problem &p, const Config &cfg, const Outcome &o) {
    json j;
    j["tool"] = "vasmg";
    j["version"] = tool_version;
    json prob = p.meta;
    prob["dim"] = p.dim ? json(p.dim) : json(nullptr);
    prob["vertices"] = p.coords.empty() ? json(nullptr) : json(p.coords.size());
    prob["unknowns"] = p.A.rows();
    prob["nonzeros"] = p.A.nonzeros();
    prob["symmetric"] = is_symmetric(p.A);
    prob["constrained"] = p.constrained.size();
    j["problem"] = prob;

    j["solver"] = {{"name", o.solver},
                   {"tolerance", cfg.tol},
                   {"max_iterations", cfg.max_iters ? cfg.max_iters : default_max_iterations(p.A.rows())},
                   {"pre_sweeps", cfg.pre_sweeps},
                   {"post_sweeps", cfg.post_sweeps},
                   {"cycles", cfg.cycles},
                   {"threshold", o.setup ? json(o.setup->threshold) : json(nullptr)},
                   {"coarsest_cap", cfg.coarsest_cap},
                   {"literal_weights", cfg.literal_weights}};

    const auto &r = o.report;
    j["result"] = {{"converged", r.converged},
                   {"iterations", r.iterations},
                   {"final_rel_res", r.final_rel_res_rhs},
                   {"rel_res_history_length", r.rel_res_history.size()},
                   {"condition_estimate", r.condition_estimate ? json(*r.condition_estimate) : json(nullptr)}};
    j["timing"] = {{"setup_seconds", r.setup_seconds}, {"apply_seconds", r.apply_seconds}, {"total_seconds", r.total_seconds}};

    if (o.setup) {
        const auto &s = *o.setup;
        j["tree"] = {{"height", s.tree.height},
                     {"leaf_count", s.tree.leaf_count},
                     {"max_leaf_occupancy", s.tree.max_leaf_occupancy},
                     {"pruned_leaves", s.pruned_leaves},
                     {"depth_bound", s.tree.depth_bound},
                     {"within_bound", s.tree.within_bound},
                     {"d_min", s.mesh.d_min},
                     {"d_max", s.mesh.d_max},
                     {"q", s.mesh.q_exponent},
                     {"seconds", s.tree_seconds}};
        json levels = json::array();
        index_t l = 0;
        for (const auto &L : s.levels())
            levels.push_back({{"level", l++},
                              {"unknowns", L.unknowns},
                              {"nonzeros", L.nonzeros},
                              {"grid_vertices", L.grid_vertices},
                              {"tree_depth", L.tree_depth},
                              {"setup_seconds", L.setup_seconds}});
        j["levels"] = levels;
        j["coarsest"] = {{"order", s.hierarchy->coarsest->order()}, {"rank", s.hierarchy->coarsest->rank()}};
    } else {
        j["tree"] = nullptr;
        j["levels"] = json::array();
        j["coarsest"] = nullptr;
    }
    return j;
}

std::string history_csv(const SolveReport &r) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "iteration,rel_res,wall_seconds\n";
    for (std::size_t k = 0; k < r.rel_res_history.size(); ++k)
        out << k << ',' << r.rel_res_history[k] << ',' << (k < r.wall_seconds.size() ? r.wall_seconds[k] : 0.0) << '\n';
    return out.str();
}

std::string to_text(const SparseMatrix &A) {
    std::ostringstream out;
    io::write_matrix_market(out, A);
    return out.str();
}

std::string to_text(std::span<const double> v) {
    std::ostringstream out;
    io::write_vector(out, v);
    return out.str();
}

int run(const Config &cfg) {
    check_solver(cfg.solver);
    const Problem p = load_problem(cfg);
    const Outcome o = solve(p, cfg, cfg.solver, !cfg.dump_tree.empty());

    Artifacts art;
    art.add(cfg.report, report_json(p, cfg, o).dump(2) + "\n");
    art.add(cfg.history_csv, history_csv(o.report));
    art.add(cfg.solution, to_text(o.U));
    if (!cfg.dump_tree.empty()) {
        detail::require(o.setup.has_value(), error_kind::input, "--dump-tree needs a hierarchy-based solver");
        art.add(cfg.dump_tree, o.setup->tree_dump);
    }
    if (!cfg.dump_hierarchy.empty()) {
        detail::require(o.setup.has_value(), error_kind::input, "--dump-hierarchy needs a hierarchy-based solver");
        const auto &h = *o.setup->hierarchy;
        for (index_t l = 0; l < h.size(); ++l) {
            const fs::path dir(cfg.dump_hierarchy);
            art.add((dir / ("A_" + std::to_string(l) + ".mtx")).string(), to_text(h.A(l)));
            if (l + 1 < h.size()) art.add((dir / ("P_" + std::to_string(l) + ".mtx")).string(), to_text(h.levels[l].P));
        }
    }
    if (!cfg.export_system.empty()) {
        art.add(cfg.export_system + "_A.mtx", to_text(p.A));
        art.add(cfg.export_system + "_F.txt", to_text(p.F));
    }
    art.commit();

    const auto &r = o.report;
    std::cout << o.solver << ": " << (r.converged ? "converged" : "NOT converged") << " in " << r.iterations
              << " iterations, rel_res " << r.final_rel_res_rhs << ", setup " << r.setup_seconds << " s, apply "
              << r.apply_seconds << " s\n";
    return 0;
}

std::optional<Vector> reference_solution(const Problem &p, index_t cap) {
    if (p.A.rows() > cap) return std::nullopt;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(p.A.nonzeros());
    for (index_t i = 0; i < p.A.rows(); ++i) {
        auto c = p.A.row_cols(i);
        auto v = p.A.row_vals(i);
        for (std::size_t k = 0; k < c.size(); ++k)
            t.emplace_back(static_cast<int>(i), static_cast<int>(c[k]), v[k]);
    }
    const auto n = static_cast<Eigen::Index>(p.A.rows());
    Eigen::SparseMatrix<double> M(n, n);
    M.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
    detail::require(ldlt.info() == Eigen::Success, error_kind::numerical, "reference factorization failed");
    const Eigen::VectorXd x = ldlt.solve(Eigen::Map<const Eigen::VectorXd>(p.F.data(), n));
    return Vector(x.data(), x.data() + x.size());
}

int compare(const Config &cfg) {
    detail::require(cfg.solvers.size() >= 2, error_kind::input, "compare needs at least two solvers");
    for (const auto &s : cfg.solvers) check_solver(s);
    const Problem p = load_problem(cfg);
    const auto ref = reference_solution(p, cfg.reference_cap);

    std::ostringstream csv;
    csv << std::setprecision(10);
    csv << "solver,iterations,final_rel_res,numerical_error,setup_seconds,apply_seconds,total_seconds,converged\n";
    json rows = json::array();
    for (const auto &s : cfg.solvers) {
        const Outcome o = solve(p, cfg, s, false);
        const auto &r = o.report;
        std::string err;
        if (ref) {
            double e2 = 0;
            for (index_t i = 0; i < o.U.size(); ++i) e2 += (o.U[i] - (*ref)[i]) * (o.U[i] - (*ref)[i]);
            std::ostringstream es;
            es << std::setprecision(10) << std::sqrt(e2);
            err = es.str();
        }
        csv << s << ',' << r.iterations << ',' << r.final_rel_res_rhs << ',' << err << ',' << r.setup_seconds << ','
            << r.apply_seconds << ',' << r.total_seconds << ',' << (r.converged ? "true" : "false") << '\n';
    }
    Artifacts art;
    art.add(cfg.csv, csv.str());
    art.commit();
    if (cfg.csv.empty()) std::cout << csv.str();
    return 0;
}

int exit_code(error_kind k) {
    switch (k) {
        case error_kind::input:     return 2;
        case error_kind::dimension: return 3;
        case error_kind::numerical: return 4;
        case error_kind::geometry:  return 5;
    }
    return 1;
}

int fail(std::string_view category, const std::string &message, int code) {
    std::cerr << json{{"error", category}, {"message", message}}.dump() << '\n';
    return code;
}

void add_problem_options(CLI::App *app, Config &cfg) {
    app->add_option("--mesh", cfg.mesh, "Mesh file (.node base name or .msh)");
    app->add_option("--mesh-format", cfg.mesh_format, "node-ele | gmsh-v2-subset");
    app->add_option("--bc", cfg.bc, "Boundary-condition file");
    app->add_option("--generate", cfg.generate,
                    "Built-in mesh: hole-plate | ring-quadrant | square-hole-plate | dam-trapezoid | box-3d");
    app->add_option("--refinement", cfg.refinement, "Refinement level of the generated mesh")->check(CLI::Range(0, 6));
    app->add_option("--matrix", cfg.matrix, "Matrix Market system matrix");
    app->add_option("--rhs", cfg.rhs, "Right-hand side vector (default: all ones)");
    app->add_option("--coords", cfg.coords, "Vertex coordinates for a raw matrix (one vertex per line)");
    app->add_option("--youngs", cfg.youngs, "Young's modulus");
    app->add_option("--poisson", cfg.poisson, "Poisson's ratio");
    app->add_flag("--plane-stress", cfg.plane_stress, "Use the plane-stress conversion of (E, nu)");

    app->add_option("--threshold", cfg.threshold, "Region-tree leaf threshold (default 4 in 2D, 8 in 3D)")
        ->check(CLI::Range(index_t{1}, index_t{1} << 20));
    app->add_option("--pre-sweeps", cfg.pre_sweeps, "Pre-smoothing sweeps");
    app->add_option("--post-sweeps", cfg.post_sweeps, "Post-smoothing sweeps");
    app->add_option("--cycles", cfg.cycles, "V-cycles per preconditioner application")->check(CLI::Range(1u, 100u));
    app->add_option("--tol", cfg.tol, "Relative residual tolerance");
    app->add_option("--max-iters", cfg.max_iters, "Iteration cap (default 10 sqrt(n) + 1000)");
    app->add_option("--coarsest-cap", cfg.coarsest_cap, "Largest dense coarsest system")->check(CLI::Range(index_t{1}, index_t{100000}));
    app->add_flag("--paper-literal-weights", cfg.literal_weights, "Use the literal distance-ratio weights");
}

} // namespace

int main(int argc, char **argv) {
    Config cfg;
    CLI::App app{"V-ASMG preconditioned solvers for linear elasticity"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);

    auto *run_cmd = app.add_subcommand("run", "Solve one problem with one solver");
    add_problem_options(run_cmd, cfg);
    run_cmd->add_option("--solver", cfg.solver, "pcg-vasmg | pcg-plain | pcg-jacobi | gs | mg-standalone");
    run_cmd->add_option("--report", cfg.report, "Report JSON path");
    run_cmd->add_option("--history-csv", cfg.history_csv, "Residual history CSV path");
    run_cmd->add_option("--solution", cfg.solution, "Solution vector path");
    run_cmd->add_option("--dump-tree", cfg.dump_tree, "Region-tree text dump path");
    run_cmd->add_option("--dump-hierarchy", cfg.dump_hierarchy, "Directory for A_l.mtx / P_l.mtx");
    run_cmd->add_option("--export-system", cfg.export_system, "Write <prefix>_A.mtx and <prefix>_F.txt");

    auto *cmp_cmd = app.add_subcommand("compare", "Solve one problem with several solvers");
    add_problem_options(cmp_cmd, cfg);
    cmp_cmd->add_option("--solvers", cfg.solvers, "Solvers to compare")->delimiter(',')->required();
    cmp_cmd->add_option("--reference-cap", cfg.reference_cap, "Largest system solved directly for the error column");
    cmp_cmd->add_option("--csv", cfg.csv, "Comparison CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return fail("input-error", e.what(), 2);
    }

    try {
        return run_cmd->parsed() ? run(cfg) : compare(cfg);
    } catch (const error &e) {
        return fail(to_string(e.kind()), e.what(), exit_code(e.kind()));
    } catch (const std::exception &e) {
        return fail("internal-error", e.what(), 1);
    }
}

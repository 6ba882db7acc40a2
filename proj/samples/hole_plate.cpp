// Round-hole plate under tension, solved with PCG preconditioned by one
// V-cycle per iteration. Pass the refinement level as the first argument.

#include <cstdlib>
#include <iostream>

#include <vasmg/vasmg.hpp>

int main(int argc, char **argv) {
    using namespace vasmg;
    const int refinement = argc > 1 ? std::atoi(argv[1]) : 0;

    const Mesh mesh = generate_mesh(MeshKind::hole_plate, refinement);
    const AssembledSystem sys = assemble(mesh, make_material(2.1e5, 0.3), default_load_case(MeshKind::hole_plate));

    const VasmgSetup setup = setup_vasmg(mesh, sys);
    std::cout << "vertices " << mesh.vertex_count() << ", unknowns " << sys.unknowns() << ", tree height "
              << setup.tree.height << ", levels " << setup.hierarchy->size() << '\n';

    Vector U(sys.unknowns(), 0.0);
    SolveReport rep = pcg(sys.A, sys.F, VasmgPreconditioner(setup.hierarchy), U);
    rep.setup_seconds = setup.total_seconds;

    std::cout << "iterations " << rep.iterations << ", rel_res " << rep.final_rel_res_rhs << ", setup "
              << rep.setup_seconds << " s, apply " << rep.apply_seconds << " s\n";
    if (rep.condition_estimate) std::cout << "condition estimate " << *rep.condition_estimate << '\n';
    return rep.converged ? 0 : 1;
}

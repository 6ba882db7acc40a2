#ifndef VASMG_VASMG_HPP
#define VASMG_VASMG_HPP

#include <vasmg/coarse_solver.hpp>
#include <vasmg/elasticity.hpp>
#include <vasmg/error.hpp>
#include <vasmg/generators.hpp>
#include <vasmg/krylov.hpp>
#include <vasmg/matrix_market.hpp>
#include <vasmg/mesh.hpp>
#include <vasmg/multigrid.hpp>
#include <vasmg/region_tree.hpp>
#include <vasmg/setup.hpp>
#include <vasmg/smoothers.hpp>
#include <vasmg/sparse.hpp>
#include <vasmg/transfer.hpp>

#endif

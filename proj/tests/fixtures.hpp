// Shared balanced-flow problem setups for the solver-level tests.
#pragma once

#include <random>

#include "tpmg/discretization.hpp"
#include "tpmg/geometry.hpp"
#include "tpmg/multigrid.hpp"
#include "tpmg/profiles.hpp"

namespace fixtures {

using namespace tpmg;

constexpr double kDepth = 80.0 / 6371.229;

// Owns the grids the multigrid hierarchies point into, so it must stay put.
struct BalancedProblem {
  PhysicalConstants<double> consts{};
  GridHierarchy<double> hier;
  VerticalGrid<double> vert;
  BalancedFlow<double> flow;
  OperatorParameters<double> op;
  ProfileSet<double> full;
  FactorizedProfileSet<double> fac;

  BalancedProblem(int levels, Index n_r, double n_buoy, bool advection = true,
                  double omega = 0.0)
      : hier(build_icosahedral_hierarchy(levels)),
        vert(build_vertical_grid<double>(n_r, kDepth)),
        flow(n_buoy, consts),
        op(omega > 0.0 ? OperatorParameters<double>::from_omega(omega, consts)
                       : OperatorParameters<double>::courant_default(hier.finest(), consts)) {
    full = balanced_flow_profiles(hier.finest(), vert, flow, op);
    fac = factorize_balanced_flow(hier.finest(), vert, flow, op);
    if (!advection) {
      full = without_advection(full);
      fac = without_advection(fac);
    }
  }
  BalancedProblem(const BalancedProblem&) = delete;
  BalancedProblem& operator=(const BalancedProblem&) = delete;

  const HorizontalGrid<double>& grid() const { return hier.finest(); }

  MultigridHierarchy<double> hierarchy_full(SmootherConfig<double> sm = {},
                                            TransferConfig tr = {}, int depth = 0) const {
    return build_hierarchy_coefficients(full, hier, vert, op.omega, sm, tr, 2, 2, depth);
  }
  MultigridHierarchy<double> hierarchy_fac(SmootherConfig<double> sm = {},
                                           TransferConfig tr = {}, int depth = 0) const {
    return build_hierarchy_coefficients(fac, hier, vert, op.omega, sm, tr, 2, 2, depth);
  }

  Field<double> random_field(unsigned seed) const {
    Field<double> u(grid().level, vert.n_r, grid().n_cells());
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist;
    for (Index i = 0; i < u.values.size(); ++i) u.values.data()[i] = dist(rng);
    return u;
  }
};

}  // namespace fixtures

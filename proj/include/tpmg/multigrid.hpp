#pragma once

#include <limits>
#include <variant>
#include <vector>

#include "tpmg/discretization.hpp"
#include "tpmg/geometry.hpp"
#include "tpmg/parallel.hpp"
#include "tpmg/profiles.hpp"
#include "tpmg/relaxation.hpp"
#include "tpmg/types.hpp"

namespace tpmg {

enum class ProlongationKind { linear, injection };
enum class RestrictionKind { summation, transpose };

// The production pairing is summation restriction with linear interpolation;
// the transpose pair (R = P^T) backs the two-grid theory and is available as
// an alternative.
struct TransferConfig {
  ProlongationKind prolongation = ProlongationKind::linear;
  RestrictionKind restriction = RestrictionKind::summation;
};

/// Cell-integral restriction: each coarse value is the sum of its four
/// children. Fine lives on level `coarse_level + 1`.
template <typename Scalar>
Field<Scalar> restrict_field(const Field<Scalar>& fine, const GridHierarchy<Scalar>& hier,
                             int coarse_level, int threads = 1) {
  if (fine.level != coarse_level + 1)
    throw shape_error("restrict_field: fine field is not one level above the target");
  const auto& coarse_grid = hier.grid(coarse_level);
  Field<Scalar> coarse(coarse_level, fine.n_r(), coarse_grid.n_cells());
  parallel_for(coarse_grid.n_cells(), threads, [&](Index T) {
    coarse.values.col(T) = fine.values.col(hier.child_of(T, 0)) +
                           fine.values.col(hier.child_of(T, 1)) +
                           fine.values.col(hier.child_of(T, 2)) +
                           fine.values.col(hier.child_of(T, 3));
  });
  return coarse;
}

/// Adjoint of the linear prolongation, gathered per coarse cell.
template <typename Scalar>
Field<Scalar> restrict_field_transpose(const Field<Scalar>& fine,
                                       const GridHierarchy<Scalar>& hier, int coarse_level,
                                       int threads = 1) {
  if (fine.level != coarse_level + 1)
    throw shape_error("restrict_field: fine field is not one level above the target");
  const auto& coarse_grid = hier.grid(coarse_level);
  Field<Scalar> coarse(coarse_level, fine.n_r(), coarse_grid.n_cells());
  parallel_for(coarse_grid.n_cells(), threads, [&](Index T) {
    auto acc = coarse.values.col(T);
    acc = fine.values.col(hier.child_of(T, 3));  // center child, weight 1
    for (int j = 0; j < 3; ++j)
      acc += Scalar(0.5) * fine.values.col(hier.child_of(T, j));
    for (int j = 0; j < 3; ++j) {
      const Index Tn = coarse_grid.neighbors(j, T);
      for (int jj = 0; jj < 3; ++jj) {
        const bool adjacent = coarse_grid.neighbors((jj + 1) % 3, Tn) == T ||
                              coarse_grid.neighbors((jj + 2) % 3, Tn) == T;
        if (adjacent) acc += Scalar(0.25) * fine.values.col(hier.child_of(Tn, jj));
      }
    }
  });
  return coarse;
}

/// Linear interpolation onto the children: the central child inherits the
/// parent value, each corner child blends the parent with the two coarse
/// neighbors sharing that corner, weights (2, 1, 1)/4.
template <typename Scalar>
Field<Scalar> prolongate_field(const Field<Scalar>& coarse, const GridHierarchy<Scalar>& hier,
                               int coarse_level,
                               ProlongationKind kind = ProlongationKind::linear,
                               int threads = 1) {
  if (coarse.level != coarse_level)
    throw shape_error("prolongate_field: field level does not match");
  const auto& coarse_grid = hier.grid(coarse_level);
  const auto& fine_grid = hier.grid(coarse_level + 1);
  Field<Scalar> fine(coarse_level + 1, coarse.n_r(), fine_grid.n_cells());
  parallel_for(coarse_grid.n_cells(), threads, [&](Index T) {
    fine.values.col(hier.child_of(T, 3)) = coarse.values.col(T);
    for (int j = 0; j < 3; ++j) {
      auto child = fine.values.col(hier.child_of(T, j));
      if (kind == ProlongationKind::injection) {
        child = coarse.values.col(T);
      } else {
        const Index n1 = coarse_grid.neighbors((j + 1) % 3, T);
        const Index n2 = coarse_grid.neighbors((j + 2) % 3, T);
        child = (Scalar(2) * coarse.values.col(T) + coarse.values.col(n1) +
                 coarse.values.col(n2)) /
                Scalar(4);
      }
    }
  });
  return fine;
}

using ProfileVariant =
    std::variant<ProfileSet<double>, FactorizedProfileSet<double>, MixedProfileSet<double>>;

namespace detail {

/// Area-weighted average of the four children, one cell-centered row set.
template <typename Scalar>
Matrix<Scalar> restrict_cell_profile(const Matrix<Scalar>& fine,
                                     const GridHierarchy<Scalar>& hier, int coarse_level) {
  const auto& fine_grid = hier.grid(coarse_level + 1);
  const Index nc = hier.grid(coarse_level).n_cells();
  Matrix<Scalar> coarse(fine.rows(), nc);
  for (Index T = 0; T < nc; ++T) {
    Scalar wsum = 0;
    coarse.col(T).setZero();
    for (int j = 0; j < 4; ++j) {
      const Index f = hier.child_of(T, j);
      const Scalar w = fine_grid.areas[f];
      coarse.col(T) += w * fine.col(f);
      wsum += w;
    }
    coarse.col(T) /= wsum;
  }
  return coarse;
}

template <typename Scalar>
Vector<Scalar> restrict_cell_profile(const Vector<Scalar>& fine,
                                     const GridHierarchy<Scalar>& hier, int coarse_level) {
  Matrix<Scalar> m = fine.transpose();
  return restrict_cell_profile(m, hier, coarse_level).transpose();
}

/// Arithmetic mean of the two co-linear child edges.
template <typename Scalar>
Matrix<Scalar> restrict_edge_profile(const Matrix<Scalar>& fine,
                                     const GridHierarchy<Scalar>& hier, int coarse_level) {
  const auto& co = hier.colinear_edges[static_cast<std::size_t>(coarse_level)];
  Matrix<Scalar> coarse(fine.rows(), co.cols());
  for (Index e = 0; e < co.cols(); ++e)
    coarse.col(e) = (fine.col(co(0, e)) + fine.col(co(1, e))) / Scalar(2);
  return coarse;
}

template <typename Scalar>
Vector<Scalar> restrict_edge_profile(const Vector<Scalar>& fine,
                                     const GridHierarchy<Scalar>& hier, int coarse_level) {
  Matrix<Scalar> m = fine.transpose();
  return restrict_edge_profile(m, hier, coarse_level).transpose();
}

}  // namespace detail

/// One-level profile restriction: cell fields by area-weighted child average,
/// edge fields by co-linear edge mean. Factorized sets restrict only their
/// horizontal scalars; the vertical vectors are shared across levels.
inline ProfileSet<double> restrict_profiles(const ProfileSet<double>& fine,
                                            const GridHierarchy<double>& hier,
                                            int coarse_level) {
  ProfileSet<double> c;
  c.level = coarse_level;
  c.beta = detail::restrict_cell_profile(fine.beta, hier, coarse_level);
  c.alpha_r = detail::restrict_cell_profile(fine.alpha_r, hier, coarse_level);
  c.xi_r = detail::restrict_cell_profile(fine.xi_r, hier, coarse_level);
  c.alpha_s = detail::restrict_edge_profile(fine.alpha_s, hier, coarse_level);
  return c;
}

inline FactorizedProfileSet<double> restrict_profiles(const FactorizedProfileSet<double>& fine,
                                                      const GridHierarchy<double>& hier,
                                                      int coarse_level) {
  FactorizedProfileSet<double> c;
  c.level = coarse_level;
  c.beta_r = fine.beta_r;
  c.alpha_s_r = fine.alpha_s_r;
  c.alpha_r_r = fine.alpha_r_r;
  c.xi_r_r = fine.xi_r_r;
  c.beta_s = detail::restrict_cell_profile(fine.beta_s, hier, coarse_level);
  c.alpha_r_s = detail::restrict_cell_profile(fine.alpha_r_s, hier, coarse_level);
  c.xi_r_s = detail::restrict_cell_profile(fine.xi_r_s, hier, coarse_level);
  c.alpha_s_s = detail::restrict_edge_profile(fine.alpha_s_s, hier, coarse_level);
  return c;
}

inline MixedProfileSet<double> restrict_profiles(const MixedProfileSet<double>& fine,
                                                 const GridHierarchy<double>& hier,
                                                 int coarse_level) {
  MixedProfileSet<double> c;
  c.level = coarse_level;
  c.separated = restrict_profiles(fine.separated, hier, coarse_level);
  c.alpha_r = detail::restrict_cell_profile(fine.alpha_r, hier, coarse_level);
  return c;
}

inline ProfileVariant restrict_profiles(const ProfileVariant& fine,
                                        const GridHierarchy<double>& hier, int coarse_level) {
  return std::visit(
      [&](const auto& p) -> ProfileVariant { return restrict_profiles(p, hier, coarse_level); },
      fine);
}

// Everything one V-cycle needs: matrix-free coefficients per level, the
// smoother, and the pre/post sweep counts. Grids are referenced, not owned,
// and must outlive the hierarchy. No vertical coarsening: every level shares
// the same vertical grid.
template <typename Scalar = double>
struct MultigridHierarchy {
  const GridHierarchy<Scalar>* grids = nullptr;
  VerticalGrid<Scalar> vertical;
  std::vector<HattedCoefficients<Scalar>> coefficients;  // level coarsest..L
  SmootherConfig<Scalar> smoother;
  std::vector<int> nu_pre, nu_post;  // indexed like `coefficients`
  TransferConfig transfers;
  int coarsest_level = 0;
  int threads = 1;

  int finest_level() const {
    return coarsest_level + static_cast<int>(coefficients.size()) - 1;
  }
  int depth() const { return static_cast<int>(coefficients.size()); }
  const HorizontalGrid<Scalar>& grid(int level) const { return grids->grid(level); }
  const HattedCoefficients<Scalar>& coeff(int level) const {
    return coefficients[static_cast<std::size_t>(level - coarsest_level)];
  }
  const HattedCoefficients<Scalar>& finest_coefficients() const {
    return coefficients.back();
  }
  int pre_sweeps(int level) const {
    return nu_pre[static_cast<std::size_t>(level - coarsest_level)];
  }
  int post_sweeps(int level) const {
    return nu_post[static_cast<std::size_t>(level - coarsest_level)];
  }
};

/// Coefficients on every level by rediscretising restricted profiles with the
/// same omega. Pre/post smoothing defaults to 2+2 on refined levels and a
/// single combined sweep on the coarsest. `depth` limits how many levels the
/// cycle uses (0 = all the way down to the 20-cell grid); holding it fixed
/// while the finest level grows mirrors the weak-scaling setup.
inline MultigridHierarchy<double> build_hierarchy_coefficients(
    const ProfileVariant& finest_profiles, const GridHierarchy<double>& hier,
    const VerticalGrid<double>& vertical, double omega,
    const SmootherConfig<double>& smoother = {}, const TransferConfig& transfers = {},
    int nu_pre = 2, int nu_post = 2, int depth = 0, int threads = 1) {
  MultigridHierarchy<double> m;
  m.grids = &hier;
  m.vertical = vertical;
  m.smoother = smoother;
  m.transfers = transfers;
  m.threads = threads;

  const int finest = hier.finest_level();
  if (depth <= 0 || depth > finest + 1) depth = finest + 1;
  m.coarsest_level = finest + 1 - depth;

  m.coefficients.resize(static_cast<std::size_t>(depth));
  ProfileVariant p = finest_profiles;
  for (int l = finest; l >= m.coarsest_level; --l) {
    m.coefficients[static_cast<std::size_t>(l - m.coarsest_level)] = std::visit(
        [&](const auto& prof) { return assemble_hatted(prof, hier.grid(l), vertical, omega); },
        p);
    if (l > m.coarsest_level) p = restrict_profiles(p, hier, l - 1);
  }

  m.nu_pre.assign(static_cast<std::size_t>(depth), nu_pre);
  m.nu_post.assign(static_cast<std::size_t>(depth), nu_post);
  m.nu_pre[0] = 1;  // coarsest: one smoother iteration in total
  m.nu_post[0] = 0;
  return m;
}

/// One tensor-product V-cycle on `level`, updating u in place. Semi-coarsening
/// only: the recursion walks the horizontal hierarchy at fixed n_r.
template <typename Scalar>
void v_cycle(const MultigridHierarchy<Scalar>& m, int level, const Field<Scalar>& f,
             Field<Scalar>& u) {
  const auto& h = m.coeff(level);
  const auto& grid = m.grid(level);

  smooth(h, grid, u, f, m.smoother, m.pre_sweeps(level), m.threads);

  if (level > m.coarsest_level) {
    Field<Scalar> r;
    apply_operator(h, grid, u, r, m.threads);
    r.values = f.values - r.values;

    const Field<Scalar> fc = m.transfers.restriction == RestrictionKind::summation
                                 ? restrict_field(r, *m.grids, level - 1, m.threads)
                                 : restrict_field_transpose(r, *m.grids, level - 1, m.threads);
    Field<Scalar> uc(level - 1, fc.n_r(), fc.n_cells());
    v_cycle(m, level - 1, fc, uc);
    u.values +=
        prolongate_field(uc, *m.grids, level - 1, m.transfers.prolongation, m.threads).values;
  }

  smooth(h, grid, u, f, m.smoother, m.post_sweeps(level), m.threads);
}

/// Geometric-mean residual reduction per V-cycle, skipping the first cycle.
template <typename Scalar>
Scalar measure_cycle_rate(const MultigridHierarchy<Scalar>& m, const Field<Scalar>& f,
                          int n_cycles) {
  if (n_cycles < 2) throw config_error("measure_cycle_rate needs at least two cycles");
  const int L = m.finest_level();
  Field<Scalar> u(L, f.n_r(), f.n_cells());
  Field<Scalar> r;
  Scalar first = 0, last = 0;
  for (int i = 1; i <= n_cycles; ++i) {
    v_cycle(m, L, f, u);
    apply_operator(m.finest_coefficients(), m.grid(L), u, r, m.threads);
    r.values = f.values - r.values;
    const Scalar nrm = r.norm();
    if (i == 1) first = nrm;
    last = nrm;
  }
  if (first <= Scalar(1e-300) || first <= std::numeric_limits<Scalar>::epsilon() * f.norm())
    return Scalar(0);
  return std::pow(last / first, Scalar(1) / Scalar(n_cycles - 1));
}

/// Ratio of the strongest horizontal coupling to the weakest zero-order
/// diagonal contribution, per level. On CFL-scaled problems it shrinks by
/// about a factor of four per coarsening, which is what lets a single
/// smoother sweep stand in for a coarse solve.
template <typename Scalar>
std::vector<Scalar> horizontal_coupling_ratios(const MultigridHierarchy<Scalar>& m) {
  std::vector<Scalar> out;
  for (int l = m.coarsest_level; l <= m.finest_level(); ++l) {
    const auto& h = m.coeff(l);
    Scalar max_alpha = 0, min_beta = std::numeric_limits<Scalar>::max();
    for (Index e = 0; e < h.n_edges(); ++e)
      for (Index k = 0; k < h.n_r(); ++k) max_alpha = std::max(max_alpha, h.alpha_s(k, e));
    for (Index T = 0; T < h.n_cells(); ++T)
      for (Index k = 0; k < h.n_r(); ++k) min_beta = std::min(min_beta, h.beta(k, T));
    out.push_back(max_alpha / min_beta);
  }
  return out;
}

}  // namespace tpmg

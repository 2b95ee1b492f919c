#pragma once

#include "tpmg/discretization.hpp"
#include "tpmg/geometry.hpp"
#include "tpmg/parallel.hpp"
#include "tpmg/types.hpp"

namespace tpmg {

enum class SmootherKind { block_jacobi, block_sor };
enum class SweepOrder { natural, reversed };

// Vertical line relaxation: all unknowns of one column are updated together
// through a tridiagonal solve. block_jacobi reads a pre-sweep snapshot and is
// safe to run data-parallel; block_sor uses latest values and is sequential
// by contract.
template <typename Scalar = double>
struct SmootherConfig {
  SmootherKind kind = SmootherKind::block_sor;
  Scalar relax = Scalar(1);  // overrelaxation factor, in (0, 2)
  SweepOrder order = SweepOrder::natural;
};

namespace detail {

template <typename Scalar>
struct ColumnWorkspace {
  ColumnMatrix<Scalar> col;
  Vector<Scalar> residual;
  Vector<Scalar> scratch;
};

}  // namespace detail

/// Thomas algorithm on the tridiagonal part of a column block. No pivoting;
/// a vanishing pivot raises singular_error instead of propagating NaNs.
template <typename Scalar, typename Rhs>
void thomas_solve_inplace(const ColumnMatrix<Scalar>& m, Rhs&& x, Vector<Scalar>& scratch) {
  const Index n = m.diag.size();
  scratch.resize(n);
  Scalar pivot = m.diag[0];
  if (pivot == Scalar(0)) throw singular_error("thomas_solve: zero pivot at row 0");
  x[0] /= pivot;
  for (Index k = 1; k < n; ++k) {
    scratch[k] = m.upper[k - 1] / pivot;
    pivot = m.diag[k] - m.lower[k] * scratch[k];
    if (pivot == Scalar(0))
      throw singular_error("thomas_solve: zero pivot at row " + std::to_string(k));
    x[k] = (x[k] - m.lower[k] * x[k - 1]) / pivot;
  }
  for (Index k = n - 2; k >= 0; --k) x[k] -= scratch[k + 1] * x[k + 1];
}

template <typename Scalar>
Vector<Scalar> thomas_solve(const ColumnMatrix<Scalar>& m, Vector<Scalar> rhs) {
  Vector<Scalar> scratch;
  thomas_solve_inplace(m, rhs, scratch);
  return rhs;
}

/// `sweeps` relaxation steps of u <- u + relax * A_T^{-1} (f - A u)_T over all
/// columns. block_jacobi is deterministic for any thread count.
template <typename Scalar>
void smooth(const HattedCoefficients<Scalar>& h, const HorizontalGrid<Scalar>& grid,
            Field<Scalar>& u, const Field<Scalar>& f, const SmootherConfig<Scalar>& cfg,
            int sweeps, int threads = 1) {
  if (!(cfg.relax > Scalar(0) && cfg.relax < Scalar(2)))
    throw config_error("smoother relaxation factor must lie in (0, 2)");
  if (u.n_r() != h.n_r() || u.n_cells() != h.n_cells() || f.n_r() != h.n_r() ||
      f.n_cells() != h.n_cells())
    throw shape_error("smooth: field shapes do not match the coefficients");

  const Index ns = h.n_cells();
  const Index nr = h.n_r();

  // Column update reading `from`, writing `into` (may alias for SOR).
  auto relax_cell = [&](const Matrix<Scalar>& from, Matrix<Scalar>& into, Index T,
                        detail::ColumnWorkspace<Scalar>& ws) {
    build_column(h, grid, T, ws.col);
    ws.residual.resize(nr);
    ws.col.apply_tridiag(from.col(T), ws.residual);
    for (int j = 0; j < 3; ++j)
      ws.residual += ws.col.neighbor.col(j).cwiseProduct(from.col(grid.neighbors(j, T)));
    ws.residual = f.values.col(T) - ws.residual;
    thomas_solve_inplace(ws.col, ws.residual, ws.scratch);
    into.col(T) = from.col(T) + cfg.relax * ws.residual;
  };

  if (cfg.kind == SmootherKind::block_jacobi) {
    Matrix<Scalar> snapshot;
    for (int s = 0; s < sweeps; ++s) {
      snapshot = u.values;
      parallel_for(ns, threads, [&](Index T) {
        thread_local detail::ColumnWorkspace<Scalar> ws;
        relax_cell(snapshot, u.values, T, ws);
      });
    }
  } else {
    detail::ColumnWorkspace<Scalar> ws;
    for (int s = 0; s < sweeps; ++s) {
      if (cfg.order == SweepOrder::natural) {
        for (Index T = 0; T < ns; ++T) relax_cell(u.values, u.values, T, ws);
      } else {
        for (Index T = ns - 1; T >= 0; --T) relax_cell(u.values, u.values, T, ws);
      }
    }
  }
}

}  // namespace tpmg

#pragma once

#include <Eigen/Sparse>

#include <ostream>

#include "tpmg/geometry.hpp"
#include "tpmg/parallel.hpp"
#include "tpmg/profiles.hpp"
#include "tpmg/types.hpp"

namespace tpmg {

// One scalar unknown per (horizontal cell, vertical level); each column of
// `values` is one vertical column, contiguous in memory with k fastest.
template <typename Scalar = double>
struct Field {
  int level = 0;
  Matrix<Scalar> values;  // n_r x n_cells

  Field() = default;
  Field(int lvl, Index n_r, Index n_cells)
      : level(lvl), values(Matrix<Scalar>::Zero(n_r, n_cells)) {}

  Index n_r() const { return values.rows(); }
  Index n_cells() const { return values.cols(); }
  Scalar norm() const { return values.norm(); }
};

// Discrete coefficient field that is either stored in full or as an outer
// product of a shared vertical vector and per-cell/per-edge scalars.
template <typename Scalar = double>
struct HattedComponent {
  bool separable = false;
  Matrix<Scalar> dense;  // rows x cols      (when !separable)
  Vector<Scalar> vert;   // rows             (when separable)
  Vector<Scalar> horiz;  // cols             (when separable)

  Scalar operator()(Index k, Index j) const {
    return separable ? vert[k] * horiz[j] : dense(k, j);
  }
  Index rows() const { return separable ? vert.size() : dense.rows(); }
  Index cols() const { return separable ? horiz.size() : dense.cols(); }

  Matrix<Scalar> densified() const {
    return separable ? Matrix<Scalar>(vert * horiz.transpose()) : dense;
  }
};

// Precomputed discretization-scaled profile samples; the tridiagonal and
// neighbor-coupling matrix entries are rebuilt from these on the fly. The
// omega^2 factor lives inside these quantities.
template <typename Scalar = double>
struct HattedCoefficients {
  int level = 0;
  HattedComponent<Scalar> beta;     // n_r   x n_cells
  HattedComponent<Scalar> alpha_s;  // n_r   x n_edges
  HattedComponent<Scalar> alpha_r;  // n_r+1 x n_cells, zero on boundary faces
  HattedComponent<Scalar> xi_r;     // n_r+1 x n_cells, zero on boundary faces

  Index n_r() const { return beta.rows(); }
  Index n_cells() const { return beta.cols(); }
  Index n_edges() const { return alpha_s.cols(); }
  bool fully_separable() const {
    return beta.separable && alpha_s.separable && alpha_r.separable && xi_r.separable;
  }
};

namespace detail {

// sigma_k 2 r_k^2 / (r_{k+1} - r_{k-1}) on every face.
template <typename Scalar>
Vector<Scalar> diffusion_face_factor(const VerticalGrid<Scalar>& v) {
  Vector<Scalar> f = Vector<Scalar>::Zero(v.n_r + 1);
  for (Index k = 1; k < v.n_r; ++k)
    f[k] = 2 * v.r[k] * v.r[k] / (v.r[k + 1] - v.r[k - 1]);
  return f;
}

// sigma_k r_k^2 (r_{k+1} - r_k) / (r_{k+1} - r_{k-1}) on every face.
template <typename Scalar>
Vector<Scalar> advection_face_factor(const VerticalGrid<Scalar>& v) {
  Vector<Scalar> f = Vector<Scalar>::Zero(v.n_r + 1);
  for (Index k = 1; k < v.n_r; ++k)
    f[k] = v.r[k] * v.r[k] * (v.r[k + 1] - v.r[k]) / (v.r[k + 1] - v.r[k - 1]);
  return f;
}

template <typename Scalar>
void check_grid_shapes(const HorizontalGrid<Scalar>& grid, const VerticalGrid<Scalar>& vert,
                       Index n_r, Index n_cells, Index n_edges) {
  if (n_r != vert.n_r || n_cells != grid.n_cells() || n_edges != grid.n_edges())
    throw shape_error("profile arrays do not match the grid");
}

template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw nonfinite_error(std::string("non-finite values in ") + what);
}

}  // namespace detail

/// Hatted coefficients from full profiles.
template <typename Scalar>
HattedCoefficients<Scalar> assemble_hatted(const ProfileSet<Scalar>& p,
                                           const HorizontalGrid<Scalar>& grid,
                                           const VerticalGrid<Scalar>& vert, Scalar omega) {
  detail::check_grid_shapes(grid, vert, p.n_r(), p.n_cells(), p.n_edges());
  detail::check_finite(p.beta, "beta");
  detail::check_finite(p.alpha_s, "alpha_s");
  detail::check_finite(p.alpha_r, "alpha_r");
  detail::check_finite(p.xi_r, "xi_r");

  const Index nr = vert.n_r, ns = grid.n_cells(), ne = grid.n_edges();
  const Scalar w2 = omega * omega;
  const auto fdiff = detail::diffusion_face_factor(vert);
  const auto fadv = detail::advection_face_factor(vert);

  HattedCoefficients<Scalar> h;
  h.level = grid.level;

  h.beta.dense.resize(nr, ns);
  for (Index T = 0; T < ns; ++T)
    h.beta.dense.col(T) = grid.areas[T] * vert.volumes.cwiseProduct(p.beta.col(T));

  h.alpha_s.dense.resize(nr, ne);
  for (Index e = 0; e < ne; ++e) {
    const Scalar ge = grid.edge_geometry_factor(e);
    for (Index k = 0; k < nr; ++k)
      h.alpha_s.dense(k, e) = w2 * (vert.r[k + 1] - vert.r[k]) * ge * p.alpha_s(k, e);
  }

  h.alpha_r.dense.resize(nr + 1, ns);
  h.xi_r.dense.resize(nr + 1, ns);
  for (Index T = 0; T < ns; ++T)
    for (Index k = 0; k <= nr; ++k) {
      h.alpha_r.dense(k, T) = w2 * grid.areas[T] * fdiff[k] * p.alpha_r(k, T);
      h.xi_r.dense(k, T) = w2 * grid.areas[T] * fadv[k] * p.xi_r(k, T);
    }
  return h;
}

/// Hatted coefficients from separated profiles; the result stays separated.
template <typename Scalar>
HattedCoefficients<Scalar> assemble_hatted(const FactorizedProfileSet<Scalar>& p,
                                           const HorizontalGrid<Scalar>& grid,
                                           const VerticalGrid<Scalar>& vert, Scalar omega) {
  detail::check_grid_shapes(grid, vert, p.n_r(), p.n_cells(), p.n_edges());
  detail::check_finite(p.beta_r, "beta_r");
  detail::check_finite(p.alpha_s_r, "alpha_s_r");
  detail::check_finite(p.alpha_r_r, "alpha_r_r");
  detail::check_finite(p.xi_r_r, "xi_r_r");
  detail::check_finite(p.beta_s, "beta_s");
  detail::check_finite(p.alpha_r_s, "alpha_r_s");
  detail::check_finite(p.xi_r_s, "xi_r_s");
  detail::check_finite(p.alpha_s_s, "alpha_s_s");

  const Index nr = vert.n_r, ns = grid.n_cells(), ne = grid.n_edges();
  const Scalar w2 = omega * omega;

  HattedCoefficients<Scalar> h;
  h.level = grid.level;

  h.beta.separable = true;
  h.beta.vert = vert.volumes.cwiseProduct(p.beta_r);
  h.beta.horiz = grid.areas.cwiseProduct(p.beta_s);

  h.alpha_s.separable = true;
  h.alpha_s.vert.resize(nr);
  for (Index k = 0; k < nr; ++k)
    h.alpha_s.vert[k] = (vert.r[k + 1] - vert.r[k]) * p.alpha_s_r[k];
  h.alpha_s.horiz.resize(ne);
  for (Index e = 0; e < ne; ++e)
    h.alpha_s.horiz[e] = w2 * grid.edge_geometry_factor(e) * p.alpha_s_s[e];

  h.alpha_r.separable = true;
  h.alpha_r.vert = detail::diffusion_face_factor(vert).cwiseProduct(p.alpha_r_r);
  h.alpha_r.horiz = w2 * grid.areas.cwiseProduct(p.alpha_r_s);

  h.xi_r.separable = true;
  h.xi_r.vert = detail::advection_face_factor(vert).cwiseProduct(p.xi_r_r);
  h.xi_r.horiz = w2 * grid.areas.cwiseProduct(p.xi_r_s);
  return h;
}

/// Partial factorization: only alpha_r is assembled in full.
template <typename Scalar>
HattedCoefficients<Scalar> assemble_hatted(const MixedProfileSet<Scalar>& p,
                                           const HorizontalGrid<Scalar>& grid,
                                           const VerticalGrid<Scalar>& vert, Scalar omega) {
  HattedCoefficients<Scalar> h = assemble_hatted(p.separated, grid, vert, omega);
  detail::check_finite(p.alpha_r, "alpha_r");
  if (p.alpha_r.rows() != vert.n_r + 1 || p.alpha_r.cols() != grid.n_cells())
    throw shape_error("mixed profile set: alpha_r shape does not match the grid");

  const Scalar w2 = omega * omega;
  const auto fdiff = detail::diffusion_face_factor(vert);
  h.alpha_r = HattedComponent<Scalar>{};
  h.alpha_r.dense.resize(vert.n_r + 1, grid.n_cells());
  for (Index T = 0; T < grid.n_cells(); ++T)
    for (Index k = 0; k <= vert.n_r; ++k)
      h.alpha_r.dense(k, T) = w2 * grid.areas[T] * fdiff[k] * p.alpha_r(k, T);
  return h;
}

// Per-column operator blocks: the tridiagonal A_T and the three neighbor
// diagonals. `upper[n_r-1]` and `lower[0]` are structural zeros.
template <typename Scalar = double>
struct ColumnMatrix {
  Vector<Scalar> diag, upper, lower;  // a, b, c
  Matrix<Scalar> neighbor;            // n_r x 3, column j couples to neighbors(j, T)

  void resize(Index n_r) {
    diag.resize(n_r);
    upper.resize(n_r);
    lower.resize(n_r);
    neighbor.resize(n_r, 3);
  }

  /// Tridiagonal part applied to one column.
  template <typename In, typename Out>
  void apply_tridiag(const In& x, Out&& y) const {
    const Index n = diag.size();
    for (Index k = 0; k < n; ++k) {
      Scalar v = diag[k] * x[k];
      if (k + 1 < n) v += upper[k] * x[k + 1];
      if (k > 0) v += lower[k] * x[k - 1];
      y[k] = v;
    }
  }
};

/// Rebuilds the column blocks of cell T from the hatted coefficients. Touches
/// O(n_r) data, plus O(1) horizontal scalars when they are separated.
template <typename Scalar>
void build_column(const HattedCoefficients<Scalar>& h, const HorizontalGrid<Scalar>& grid,
                  Index T, ColumnMatrix<Scalar>& out) {
  const Index nr = h.n_r();
  out.resize(nr);
  for (Index k = 0; k < nr; ++k) {
    out.upper[k] = -h.alpha_r(k + 1, T) - h.xi_r(k + 1, T);
    out.lower[k] = -h.alpha_r(k, T) + h.xi_r(k, T);
  }
  for (int j = 0; j < 3; ++j) {
    const Index e = grid.cell_edges(j, T);
    for (Index k = 0; k < nr; ++k) out.neighbor(k, j) = -h.alpha_s(k, e);
  }
  for (Index k = 0; k < nr; ++k)
    out.diag[k] = h.beta(k, T) -
                  (out.upper[k] + out.lower[k] + out.neighbor.row(k).sum());
}

template <typename Scalar>
ColumnMatrix<Scalar> column_matrix(const HattedCoefficients<Scalar>& h,
                                   const HorizontalGrid<Scalar>& grid, Index T) {
  ColumnMatrix<Scalar> m;
  build_column(h, grid, T, m);
  return m;
}

/// Matrix-free operator application, (A u)_T = A_T u_T + sum A_TT' u_T'.
template <typename Scalar>
void apply_operator(const HattedCoefficients<Scalar>& h, const HorizontalGrid<Scalar>& grid,
                    const Field<Scalar>& u, Field<Scalar>& out, int threads = 1) {
  if (u.n_r() != h.n_r() || u.n_cells() != h.n_cells() || u.level != h.level)
    throw shape_error("apply_operator: field does not match the coefficients");
  out.level = u.level;
  out.values.resize(u.n_r(), u.n_cells());

  parallel_for(u.n_cells(), threads, [&](Index T) {
    thread_local ColumnMatrix<Scalar> col;
    build_column(h, grid, T, col);
    auto y = out.values.col(T);
    col.apply_tridiag(u.values.col(T), y);
    for (int j = 0; j < 3; ++j)
      y += col.neighbor.col(j).cwiseProduct(u.values.col(grid.neighbors(j, T)));
  });
}

template <typename Scalar>
Field<Scalar> apply_operator(const HattedCoefficients<Scalar>& h,
                             const HorizontalGrid<Scalar>& grid, const Field<Scalar>& u,
                             int threads = 1) {
  Field<Scalar> out;
  apply_operator(h, grid, u, out, threads);
  return out;
}

/// Explicit sparse matrix with rows in (T, k) order, k fastest. Verification
/// only; refuses problems above the cap.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> dense_assemble(const HattedCoefficients<Scalar>& h,
                                           const HorizontalGrid<Scalar>& grid,
                                           Index cap = 100000) {
  const Index nr = h.n_r(), ns = h.n_cells();
  if (nr * ns > cap)
    throw cap_error("dense_assemble: " + std::to_string(nr * ns) + " unknowns exceed cap " +
                    std::to_string(cap));
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(static_cast<std::size_t>(ns * nr * 6));
  ColumnMatrix<Scalar> col;
  for (Index T = 0; T < ns; ++T) {
    build_column(h, grid, T, col);
    for (Index k = 0; k < nr; ++k) {
      const Index row = T * nr + k;
      trip.emplace_back(row, row, col.diag[k]);
      if (k + 1 < nr) trip.emplace_back(row, row + 1, col.upper[k]);
      if (k > 0) trip.emplace_back(row, row - 1, col.lower[k]);
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(row, grid.neighbors(j, T) * nr + k, col.neighbor(k, j));
    }
  }
  Eigen::SparseMatrix<Scalar> A(ns * nr, ns * nr);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

/// Coordinate-format text dump (row col value per line) for inspection.
template <typename Scalar>
void dump_coordinate_format(const Eigen::SparseMatrix<Scalar>& A, std::ostream& os) {
  for (int outer = 0; outer < A.outerSize(); ++outer)
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, outer); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

}  // namespace tpmg

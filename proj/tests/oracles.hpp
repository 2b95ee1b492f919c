// Test-only reference implementations, kept independent of the library paths
// they are used to check.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <vector>

#include "tpmg/geometry.hpp"
#include "tpmg/profiles.hpp"

namespace oracles {

using tpmg::Index;

/// Spherical triangle area by Girard's theorem (angle excess), as an
/// independent cross-check of the L'Huilier path used by the grid.
inline double girard_area(const Eigen::Vector3d& v0, const Eigen::Vector3d& v1,
                          const Eigen::Vector3d& v2) {
  auto corner = [](const Eigen::Vector3d& at, const Eigen::Vector3d& p,
                   const Eigen::Vector3d& q) {
    // Angle between the great-circle tangents at `at` towards p and q.
    const Eigen::Vector3d tp = (p - at.dot(p) * at).normalized();
    const Eigen::Vector3d tq = (q - at.dot(q) * at).normalized();
    return std::atan2(tp.cross(tq).norm(), tp.dot(tq));
  };
  return corner(v0, v1, v2) + corner(v1, v2, v0) + corner(v2, v0, v1) - M_PI;
}

/// Composite Simpson quadrature with a fixed panel count.
inline double composite_simpson(const std::function<double(double)>& f, double a,
                                double b, int panels) {
  double sum = f(a) + f(b);
  const double h = (b - a) / (2.0 * panels);
  for (int i = 1; i < 2 * panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * h / 3.0;
}

// Dense finite-volume assembly straight from the profile samples and grid
// geometry, term by term (mass, horizontal diffusion, vertical diffusion,
// vertical advection). This deliberately does not go through the hatted
// coefficients, so it can vouch for their index conventions.
inline Eigen::SparseMatrix<double> fv_term_by_term(
    const tpmg::HorizontalGrid<double>& grid, const tpmg::VerticalGrid<double>& vert,
    const tpmg::ProfileSet<double>& p, double omega) {
  const Index ns = grid.n_cells(), nr = vert.n_r;
  const double w2 = omega * omega;
  std::vector<Eigen::Triplet<double>> trip;
  auto idx = [nr](Index T, Index k) { return T * nr + k; };
  const auto& r = vert.r;
  const auto& sig = vert.sigma;

  for (Index T = 0; T < ns; ++T) {
    const double area = grid.areas[T];
    for (Index k = 0; k < nr; ++k) {
      const Index row = idx(T, k);
      // mass
      trip.emplace_back(row, row, area * vert.volumes[k] * p.beta(k, T));
      // horizontal diffusion: -w^2 sum_T' dr_k * g_e * alpha_s * (u_T' - u_T)
      for (int j = 0; j < 3; ++j) {
        const Index e = grid.cell_edges(j, T);
        const Index Tn = grid.neighbors(j, T);
        const double ge = grid.edge_geometry_factor(e);
        const double coef = w2 * (r[k + 1] - r[k]) * ge * p.alpha_s(k, e);
        trip.emplace_back(row, idx(Tn, k), -coef);
        trip.emplace_back(row, row, coef);
      }
      // vertical diffusion: -w^2 |T| (F_{k+1} - F_k),
      // F_j = sigma_j 2 r_j^2 alpha_r(r_j) (u_j - u_{j-1}) / (r_{j+1} - r_{j-1})
      if (sig[k + 1] != 0.0) {
        const double coef =
            w2 * area * 2.0 * r[k + 1] * r[k + 1] / (r[k + 2] - r[k]) * p.alpha_r(k + 1, T);
        trip.emplace_back(row, idx(T, k + 1), -coef);
        trip.emplace_back(row, row, coef);
      }
      if (sig[k] != 0.0) {
        const double coef =
            w2 * area * 2.0 * r[k] * r[k] / (r[k + 1] - r[k - 1]) * p.alpha_r(k, T);
        trip.emplace_back(row, idx(T, k - 1), -coef);
        trip.emplace_back(row, row, coef);
      }
      // vertical advection: -w^2 |T| dr_k [ sigma_{k+1} r_{k+1}^2 xi(k+1) (u_{k+1}-u_k)/(r_{k+2}-r_k)
      //                                   + sigma_k     r_k^2     xi(k)   (u_k-u_{k-1})/(r_{k+1}-r_{k-1}) ]
      const double drk = r[k + 1] - r[k];
      if (sig[k + 1] != 0.0) {
        const double coef =
            w2 * area * drk * r[k + 1] * r[k + 1] / (r[k + 2] - r[k]) * p.xi_r(k + 1, T);
        trip.emplace_back(row, idx(T, k + 1), -coef);
        trip.emplace_back(row, row, coef);
      }
      if (sig[k] != 0.0) {
        const double coef =
            w2 * area * drk * r[k] * r[k] / (r[k + 1] - r[k - 1]) * p.xi_r(k, T);
        trip.emplace_back(row, row, -coef);
        trip.emplace_back(row, idx(T, k - 1), coef);
      }
    }
  }
  Eigen::SparseMatrix<double> A(ns * nr, ns * nr);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

}  // namespace oracles

#pragma once

#include <cmath>
#include <numbers>

#include "tpmg/geometry.hpp"
#include "tpmg/parallel.hpp"
#include "tpmg/types.hpp"

namespace tpmg {

// Reference constants of the model atmosphere. p_0 and T_0 follow the
// balanced-flow test case; the remaining values are standard and configurable.
template <typename Scalar = double>
struct PhysicalConstants {
  Scalar p_0 = Scalar(10000);            // Pa
  Scalar T_0 = Scalar(273);              // K
  Scalar R_d = Scalar(287.05);           // J/(kg K)
  Scalar c_p = Scalar(1005.0);           // J/(kg K)
  Scalar g = Scalar(9.80665);            // m/s^2
  Scalar R_earth = Scalar(6.371229e6);   // m
  Scalar Omega_earth = Scalar(2) * std::numbers::pi_v<Scalar> / Scalar(86400);  // 1/s

  Scalar kappa() const { return R_d / c_p; }
  Scalar gamma() const { return (Scalar(1) - kappa()) / kappa(); }
  Scalar c_s() const { return std::sqrt(c_p * T_0 / gamma()); }
  Scalar c_h() const { return std::sqrt(gamma()) * c_s(); }  // = sqrt(c_p T_0)
  /// Reference buoyancy frequency: the separability point of the balanced
  /// flow family (epsilon = 0). Numerically 0.0187 1/s for the defaults.
  Scalar N_star() const { return g / c_h(); }
};

/// omega = c_h mu*dt / R_earth couples the implicit step size to the
/// dimensionless Helmholtz operator.
template <typename Scalar = double>
struct OperatorParameters {
  Scalar omega = Scalar(0);
  Scalar mu_dt = Scalar(0);  // seconds

  static OperatorParameters from_omega(Scalar omega, const PhysicalConstants<Scalar>& c) {
    if (!(omega > Scalar(0))) throw config_error("omega must be positive");
    return {omega, omega * c.R_earth / c.c_h()};
  }
  static OperatorParameters from_mu_dt(Scalar mu_dt, const PhysicalConstants<Scalar>& c) {
    if (!(mu_dt > Scalar(0))) throw config_error("mu*dt must be positive");
    return {mu_dt * c.c_h() / c.R_earth, mu_dt};
  }
  /// Default step: horizontal acoustic Courant number omega/h ~ 10 on the
  /// given finest grid, h taken as the mean great-circle edge length.
  static OperatorParameters courant_default(const HorizontalGrid<Scalar>& finest,
                                            const PhysicalConstants<Scalar>& c,
                                            Scalar courant = Scalar(10)) {
    return from_omega(courant * mean_edge_length(finest), c);
  }
};

/// Two mid-latitude zonal jets; peak speed u_0 at phi_M in each hemisphere.
template <typename Scalar = double>
struct JetParameters {
  Scalar u_0 = Scalar(100);                            // m/s
  Scalar phi_m = std::numbers::pi_v<Scalar> / Scalar(4);
  Scalar sigma = Scalar(0.1);
};

namespace detail {

// Adaptive Simpson with absolute tolerance, classic halving scheme.
template <typename Scalar, typename Fn>
Scalar adaptive_simpson_rec(const Fn& f, Scalar a, Scalar b, Scalar fa, Scalar fm,
                            Scalar fb, Scalar whole, Scalar tol, int depth) {
  const Scalar m = (a + b) / 2;
  const Scalar lm = (a + m) / 2, rm = (m + b) / 2;
  const Scalar flm = f(lm), frm = f(rm);
  const Scalar left = (m - a) / 6 * (fa + 4 * flm + fm);
  const Scalar right = (b - m) / 6 * (fm + 4 * frm + fb);
  const Scalar delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15 * tol)
    return left + right + delta / 15;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

template <typename Scalar, typename Fn>
Scalar adaptive_simpson(const Fn& f, Scalar a, Scalar b, Scalar tol) {
  if (a == b) return Scalar(0);
  const Scalar fa = f(a), fb = f(b), fm = f((a + b) / 2);
  const Scalar whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

template <typename Scalar>
Scalar jet_velocity(Scalar phi, const JetParameters<Scalar>& jet) {
  const Scalar d = std::cos(phi) - std::cos(jet.phi_m);
  return jet.u_0 * std::cos(phi) / std::cos(jet.phi_m) *
         std::exp(-d * d / (2 * jet.sigma * jet.sigma));
}

/// Gradient-wind integral F(phi) with F(0) = 0:
/// dF/dphi = 2 R_e Omega_e u_S sin(phi) + u_S^2 tan(phi). The tan(phi) factor
/// is folded into the cos^2 carried by u_S^2, so the integrand stays bounded
/// at the poles.
template <typename Scalar>
Scalar jet_function(Scalar phi, const JetParameters<Scalar>& jet,
                    const PhysicalConstants<Scalar>& c) {
  const auto integrand = [&](Scalar p) {
    const Scalar us = jet_velocity(p, jet);
    const Scalar d = std::cos(p) - std::cos(jet.phi_m);
    const Scalar us2_tan = jet.u_0 * jet.u_0 * std::cos(p) * std::sin(p) /
                           (std::cos(jet.phi_m) * std::cos(jet.phi_m)) *
                           std::exp(-d * d / (jet.sigma * jet.sigma));
    return 2 * c.R_earth * c.Omega_earth * us * std::sin(p) + us2_tan;
  };
  const Scalar tol = Scalar(1e-8) * c.R_earth * c.Omega_earth * jet.u_0;
  if (phi >= Scalar(0)) return detail::adaptive_simpson<Scalar>(integrand, Scalar(0), phi, tol);
  return -detail::adaptive_simpson<Scalar>(integrand, phi, Scalar(0), tol);
}

template <typename Scalar>
struct BalancedFlowState {
  Scalar exner, theta, rho;
};

// Balanced zonal flow with constant buoyancy frequency N >= N*. The whole
// family is controlled by epsilon = (N/N*)^2 - 1; profiles factorise exactly
// at epsilon = 0.
template <typename Scalar = double>
class BalancedFlow {
 public:
  BalancedFlow(Scalar buoyancy_frequency, const PhysicalConstants<Scalar>& constants,
               const JetParameters<Scalar>& jet = {})
      : c_(constants), jet_(jet), n_(buoyancy_frequency) {
    const Scalar ns = c_.N_star();
    eps_ = (n_ / ns) * (n_ / ns) - Scalar(1);
    if (eps_ < -Scalar(1e-12))
      throw config_error("buoyancy frequency below N*: epsilon < 0 unsupported");
    eps_ = std::max(eps_, Scalar(0));
  }

  Scalar epsilon() const { return eps_; }
  Scalar buoyancy_frequency() const { return n_; }
  const PhysicalConstants<Scalar>& constants() const { return c_; }

  Scalar horizontal_exp(Scalar phi) const {  // E^S
    return std::exp(-n_ * n_ / (c_.g * c_.g) * jet_function(phi, jet_, c_));
  }
  Scalar vertical_exp(Scalar r) const {  // E^r
    return std::exp(-n_ * n_ * c_.R_earth / c_.g * (r - Scalar(1)));
  }

  BalancedFlowState<Scalar> state(Scalar phi, Scalar r) const {
    return state_from_exp(horizontal_exp(phi), vertical_exp(r));
  }
  BalancedFlowState<Scalar> state(const Vector3<Scalar>& rhat, Scalar r) const {
    return state(latitude(rhat), r);
  }

  BalancedFlowState<Scalar> state_from_exp(Scalar es, Scalar er) const {
    const Scalar e = es * er;
    BalancedFlowState<Scalar> s;
    s.exner = (eps_ + e) / (Scalar(1) + eps_);
    s.theta = c_.T_0 / e;
    s.rho = c_.p_0 / (c_.R_d * c_.T_0) * std::pow(s.exner, c_.gamma()) * e;
    return s;
  }

  static Scalar latitude(const Vector3<Scalar>& rhat) {
    return std::asin(std::clamp(rhat[2], Scalar(-1), Scalar(1)));
  }

 private:
  PhysicalConstants<Scalar> c_;
  JetParameters<Scalar> jet_;
  Scalar n_, eps_;
};

// Coefficient fields of the Helmholtz operator on one grid level, sampled at
// the points the finite-volume assembly expects. Layout: k fastest (rows),
// cells/edges across columns.
template <typename Scalar = double>
struct ProfileSet {
  int level = 0;
  Matrix<Scalar> beta;     // n_r     x n_cells, at (center, r_{k+1/2})
  Matrix<Scalar> alpha_s;  // n_r     x n_edges, at (edge midpoint, r_{k+1/2})
  Matrix<Scalar> alpha_r;  // n_r + 1 x n_cells, at (center, r_k)
  Matrix<Scalar> xi_r;     // n_r + 1 x n_cells, at (center, r_{k-1/2})

  Index n_r() const { return beta.rows(); }
  Index n_cells() const { return beta.cols(); }
  Index n_edges() const { return alpha_s.cols(); }
};

// Separated profiles: four vertical vectors shared by the entire grid plus
// one scalar per cell (or edge).
template <typename Scalar = double>
struct FactorizedProfileSet {
  int level = 0;
  Vector<Scalar> beta_r;     // n_r
  Vector<Scalar> alpha_s_r;  // n_r
  Vector<Scalar> alpha_r_r;  // n_r + 1
  Vector<Scalar> xi_r_r;     // n_r + 1
  Vector<Scalar> beta_s;     // n_cells
  Vector<Scalar> alpha_r_s;  // n_cells
  Vector<Scalar> xi_r_s;     // n_cells
  Vector<Scalar> alpha_s_s;  // n_edges

  Index n_r() const { return beta_r.size(); }
  Index n_cells() const { return beta_s.size(); }
  Index n_edges() const { return alpha_s_s.size(); }

  /// Outer products as a dense ProfileSet (verification helper).
  ProfileSet<Scalar> densify() const {
    ProfileSet<Scalar> p;
    p.level = level;
    p.beta = beta_r * beta_s.transpose();
    p.alpha_s = alpha_s_r * alpha_s_s.transpose();
    p.alpha_r = alpha_r_r * alpha_r_s.transpose();
    p.xi_r = xi_r_r * xi_r_s.transpose();
    return p;
  }
};

// Partial factorisation: alpha_r kept in full, everything else separated.
template <typename Scalar = double>
struct MixedProfileSet {
  int level = 0;
  FactorizedProfileSet<Scalar> separated;  // beta, alpha_s, xi_r parts used
  Matrix<Scalar> alpha_r;                  // n_r + 1 x n_cells, full

  Index n_r() const { return separated.n_r(); }
  Index n_cells() const { return separated.n_cells(); }
  Index n_edges() const { return separated.n_edges(); }
};

/// alpha_r taken from `full`, the rest from `fac`. Both must live on the same
/// grid level with identical shapes.
template <typename Scalar>
MixedProfileSet<Scalar> build_partial_factorization(const ProfileSet<Scalar>& full,
                                                    const FactorizedProfileSet<Scalar>& fac) {
  if (full.level != fac.level || full.n_r() != fac.n_r() ||
      full.n_cells() != fac.n_cells() || full.n_edges() != fac.n_edges())
    throw shape_error("partial factorization: profile sets live on different grids");
  MixedProfileSet<Scalar> m;
  m.level = full.level;
  m.separated = fac;
  m.alpha_r = full.alpha_r;
  return m;
}

namespace detail {

// The dimensionless reference state entering the profiles: theta is scaled by
// T_0 and radial derivatives are taken in units of R_earth, so that the mass
// term and the omega^2-scaled derivative terms are balanced the way the
// continuum operator prescribes.
template <typename Scalar>
struct ProfileFactors {
  Scalar beta, alpha_s, alpha_r_over_r2, xi_r;
};

template <typename Scalar>
ProfileFactors<Scalar> profile_factors(const BalancedFlow<Scalar>& flow, Scalar es,
                                       Scalar er, Scalar lambda_bar) {
  const auto& c = flow.constants();
  const auto s = flow.state_from_exp(es, er);
  const Scalar theta_nd = Scalar(1) / (es * er);
  const Scalar dlog_theta = flow.buoyancy_frequency() * flow.buoyancy_frequency() *
                            c.R_earth / c.g;  // d(ln theta)/dr, scaled coords
  ProfileFactors<Scalar> f;
  f.beta = c.gamma() * s.rho / s.exner;
  f.alpha_s = s.rho * theta_nd;
  f.alpha_r_over_r2 = lambda_bar * s.rho * theta_nd;
  f.xi_r = lambda_bar * s.rho * theta_nd * dlog_theta;
  return f;
}

}  // namespace detail

/// Full (non-separated) balanced-flow profiles on one grid level.
template <typename Scalar>
ProfileSet<Scalar> balanced_flow_profiles(const HorizontalGrid<Scalar>& grid,
                                          const VerticalGrid<Scalar>& vert,
                                          const BalancedFlow<Scalar>& flow,
                                          const OperatorParameters<Scalar>& op,
                                          int threads = 1) {
  const Index ns = grid.n_cells(), ne = grid.n_edges(), nr = vert.n_r;
  const Scalar n2 = flow.buoyancy_frequency() * flow.buoyancy_frequency();
  const Scalar lambda_bar = Scalar(1) / (Scalar(1) + op.mu_dt * op.mu_dt * n2);

  ProfileSet<Scalar> p;
  p.level = grid.level;
  p.beta.resize(nr, ns);
  p.alpha_s.resize(nr, ne);
  p.alpha_r.resize(nr + 1, ns);
  p.xi_r.resize(nr + 1, ns);

  parallel_for(ns, threads, [&](Index T) {
    const Scalar es = flow.horizontal_exp(BalancedFlow<Scalar>::latitude(grid.centers.col(T)));
    for (Index k = 0; k < nr; ++k) {
      const auto f = detail::profile_factors(flow, es, flow.vertical_exp(vert.r_half(k)),
                                             lambda_bar);
      p.beta(k, T) = f.beta;
    }
    for (Index k = 0; k <= nr; ++k) {
      const Scalar rk = vert.r[k];
      const auto fd = detail::profile_factors(flow, es, flow.vertical_exp(rk), lambda_bar);
      p.alpha_r(k, T) = rk * rk * fd.alpha_r_over_r2;
      const auto fa =
          detail::profile_factors(flow, es, flow.vertical_exp(vert.r_half_below(k)), lambda_bar);
      p.xi_r(k, T) = fa.xi_r;
    }
  });
  parallel_for(ne, threads, [&](Index e) {
    const Scalar es =
        flow.horizontal_exp(BalancedFlow<Scalar>::latitude(grid.edge_midpoints.col(e)));
    for (Index k = 0; k < nr; ++k) {
      const auto f =
          detail::profile_factors(flow, es, flow.vertical_exp(vert.r_half(k)), lambda_bar);
      p.alpha_s(k, e) = f.alpha_s;
    }
  });
  return p;
}

/// Separated profiles built from the factorised Exner pressure
/// pi = [(eps + E^r)/(1 + eps)] E^S; reproduces the full profiles exactly at
/// eps = 0.
template <typename Scalar>
FactorizedProfileSet<Scalar> factorize_balanced_flow(const HorizontalGrid<Scalar>& grid,
                                                     const VerticalGrid<Scalar>& vert,
                                                     const BalancedFlow<Scalar>& flow,
                                                     const OperatorParameters<Scalar>& op,
                                                     int threads = 1) {
  const auto& c = flow.constants();
  const Index ns = grid.n_cells(), ne = grid.n_edges(), nr = vert.n_r;
  const Scalar eps = flow.epsilon();
  const Scalar n2 = flow.buoyancy_frequency() * flow.buoyancy_frequency();
  const Scalar lambda_bar = Scalar(1) / (Scalar(1) + op.mu_dt * op.mu_dt * n2);
  const Scalar dlog_theta = n2 * c.R_earth / c.g;
  const Scalar gam = c.gamma();

  FactorizedProfileSet<Scalar> f;
  f.level = grid.level;

  // Vertical factors carry all dimensional constants.
  auto vertical = [&](Scalar r) {
    const Scalar er = flow.vertical_exp(r);
    const Scalar pi_r = (eps + er) / (Scalar(1) + eps);
    const Scalar rho_r = c.p_0 / (c.R_d * c.T_0) * std::pow(pi_r, gam) * er;
    const Scalar theta_r = Scalar(1) / er;
    struct {
      Scalar beta, alpha_s, alpha_r_over_r2, xi;
    } v{gam * rho_r / pi_r, rho_r * theta_r, lambda_bar * rho_r * theta_r,
        lambda_bar * rho_r * theta_r * dlog_theta};
    return v;
  };
  f.beta_r.resize(nr);
  f.alpha_s_r.resize(nr);
  f.alpha_r_r.resize(nr + 1);
  f.xi_r_r.resize(nr + 1);
  for (Index k = 0; k < nr; ++k) {
    const auto v = vertical(vert.r_half(k));
    f.beta_r[k] = v.beta;
    f.alpha_s_r[k] = v.alpha_s;
  }
  for (Index k = 0; k <= nr; ++k) {
    const Scalar rk = vert.r[k];
    f.alpha_r_r[k] = rk * rk * vertical(rk).alpha_r_over_r2;
    f.xi_r_r[k] = vertical(vert.r_half_below(k)).xi;
  }

  // Horizontal factors: rho^S theta^S = (E^S)^gamma for every profile.
  auto horizontal = [&](Scalar phi) {
    return std::pow(flow.horizontal_exp(phi), gam);
  };
  f.beta_s.resize(ns);
  f.alpha_r_s.resize(ns);
  f.xi_r_s.resize(ns);
  parallel_for(ns, threads, [&](Index T) {
    const Scalar h = horizontal(BalancedFlow<Scalar>::latitude(grid.centers.col(T)));
    f.beta_s[T] = h;
    f.alpha_r_s[T] = h;
    f.xi_r_s[T] = h;
  });
  f.alpha_s_s.resize(ne);
  parallel_for(ne, threads, [&](Index e) {
    f.alpha_s_s[e] = horizontal(BalancedFlow<Scalar>::latitude(grid.edge_midpoints.col(e)));
  });
  return f;
}

/// Copy with the advection profile zeroed (symmetric-operator instances).
template <typename Scalar>
ProfileSet<Scalar> without_advection(ProfileSet<Scalar> p) {
  p.xi_r.setZero();
  return p;
}
template <typename Scalar>
FactorizedProfileSet<Scalar> without_advection(FactorizedProfileSet<Scalar> p) {
  p.xi_r_r.setZero();
  return p;
}

}  // namespace tpmg

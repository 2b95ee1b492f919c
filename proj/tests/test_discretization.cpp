#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "oracles.hpp"
#include "tpmg/discretization.hpp"
#include "tpmg/geometry.hpp"
#include "tpmg/profiles.hpp"

using namespace tpmg;

namespace {

const PhysicalConstants<double> kConst{};

ProfileSet<double> ones_profiles(const HorizontalGrid<double>& g, Index n_r) {
  ProfileSet<double> p;
  p.level = g.level;
  p.beta = Matrix<double>::Ones(n_r, g.n_cells());
  p.alpha_s = Matrix<double>::Ones(n_r, g.n_edges());
  p.alpha_r = Matrix<double>::Ones(n_r + 1, g.n_cells());
  p.xi_r = Matrix<double>::Ones(n_r + 1, g.n_cells());
  return p;
}

HattedCoefficients<double> identity_like(const HorizontalGrid<double>& g, Index n_r) {
  HattedCoefficients<double> h;
  h.level = g.level;
  h.beta.dense = Matrix<double>::Ones(n_r, g.n_cells());
  h.alpha_s.dense = Matrix<double>::Zero(n_r, g.n_edges());
  h.alpha_r.dense = Matrix<double>::Zero(n_r + 1, g.n_cells());
  h.xi_r.dense = Matrix<double>::Zero(n_r + 1, g.n_cells());
  return h;
}

double matrix_scale(const Eigen::SparseMatrix<double>& A) {
  double m = 0.0;
  for (int o = 0; o < A.outerSize(); ++o)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, o); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace

TEST_CASE("unit profiles, single vertical cell") {
  auto hier = build_icosahedral_hierarchy(0);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(1, 0.1);
  const auto h = assemble_hatted(ones_profiles(g, 1), g, vert, 1.0);

  for (Index T = 0; T < g.n_cells(); ++T) {
    CHECK(h.beta(0, T) == doctest::Approx(g.areas[T] * vert.volumes[0]).epsilon(1e-15));
    CHECK(h.alpha_r(0, T) == 0.0);  // both faces masked
    CHECK(h.alpha_r(1, T) == 0.0);
    CHECK(h.xi_r(0, T) == 0.0);
    CHECK(h.xi_r(1, T) == 0.0);
  }
}

TEST_CASE("interior face on a uniform grid: hand evaluation") {
  auto hier = build_icosahedral_hierarchy(0);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(4, 0.04);  // dr = 0.01
  const double omega = 0.7;
  const auto h = assemble_hatted(ones_profiles(g, 4), g, vert, omega);
  const double dr = 0.01;
  for (Index k = 1; k < 4; ++k) {
    const double rk = vert.r[k];
    const double expected = omega * omega * g.areas[0] * rk * rk / dr;
    CHECK(h.alpha_r(k, 0) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("factorized and full assembly agree at epsilon = 0") {
  auto hier = build_icosahedral_hierarchy(1);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(4, 0.0126);
  BalancedFlow<double> flow(kConst.N_star(), kConst);
  const auto op = OperatorParameters<double>::courant_default(g, kConst);

  const auto hf = assemble_hatted(balanced_flow_profiles(g, vert, flow, op), g, vert, op.omega);
  const auto hx = assemble_hatted(factorize_balanced_flow(g, vert, flow, op), g, vert, op.omega);
  CHECK(hx.fully_separable());
  CHECK(!hf.beta.separable);

  auto rel = [](const Matrix<double>& a, const Matrix<double>& b) {
    return ((a - b).array().abs() / b.array().abs().max(1e-300)).maxCoeff();
  };
  CHECK(rel(hx.beta.densified(), hf.beta.densified()) <= 1e-12);
  CHECK(rel(hx.alpha_s.densified(), hf.alpha_s.densified()) <= 1e-12);
  // Boundary faces are exact zeros in both; compare interior rows relatively.
  CHECK(rel(hx.alpha_r.densified().middleRows(1, 3), hf.alpha_r.densified().middleRows(1, 3)) <=
        1e-12);
  CHECK(rel(hx.xi_r.densified().middleRows(1, 3), hf.xi_r.densified().middleRows(1, 3)) <= 1e-12);

  const Eigen::MatrixXd Af = dense_assemble(hf, g).toDense();
  const Eigen::MatrixXd Ax = dense_assemble(hx, g).toDense();
  CHECK((Af - Ax).cwiseAbs().maxCoeff() <= 1e-12 * Af.cwiseAbs().maxCoeff());
}

TEST_CASE("identity-like coefficients give the identity column and matrix") {
  auto hier = build_icosahedral_hierarchy(0);
  const auto& g = hier.finest();
  const auto h = identity_like(g, 3);

  const auto col = column_matrix(h, g, 5);
  CHECK((col.diag.array() == 1.0).all());
  CHECK((col.upper.array() == 0.0).all());
  CHECK((col.lower.array() == 0.0).all());
  CHECK((col.neighbor.array() == 0.0).all());

  const Eigen::MatrixXd A = dense_assemble(h, g).toDense();
  CHECK((A - Eigen::MatrixXd::Identity(A.rows(), A.cols())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("row-sum identity and vertical coupling symmetry") {
  auto hier = build_icosahedral_hierarchy(1);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(5, 0.0126, VerticalGrading::geometric, 1.2);
  BalancedFlow<double> flow(0.028, kConst);
  const auto op = OperatorParameters<double>::courant_default(g, kConst);
  const auto h = assemble_hatted(balanced_flow_profiles(g, vert, flow, op), g, vert, op.omega);
  const auto h0 = assemble_hatted(without_advection(balanced_flow_profiles(g, vert, flow, op)),
                                  g, vert, op.omega);

  for (Index T = 0; T < g.n_cells(); T += 7) {
    const auto col = column_matrix(h, g, T);
    for (Index k = 0; k < 5; ++k) {
      const double row_sum = col.upper[k] + col.lower[k] + col.neighbor.row(k).sum();
      CHECK(col.diag[k] == h.beta(k, T) - row_sum);  // exact, as constructed
    }
    const auto sym = column_matrix(h0, g, T);
    for (Index k = 0; k + 1 < 5; ++k)
      CHECK(sym.upper[k] == doctest::Approx(sym.lower[k + 1]).epsilon(1e-15));
  }
}

TEST_CASE("operator with zero mass and advection annihilates constants") {
  auto hier = build_icosahedral_hierarchy(1);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(4, 0.0126);
  BalancedFlow<double> flow(0.022, kConst);
  const auto op = OperatorParameters<double>::courant_default(g, kConst);
  auto p = without_advection(balanced_flow_profiles(g, vert, flow, op));
  p.beta.setZero();
  const auto h = assemble_hatted(p, g, vert, op.omega);

  Field<double> ones(g.level, 4, g.n_cells());
  ones.values.setOnes();
  const auto Au = apply_operator(h, g, ones);
  const double scale = matrix_scale(dense_assemble(h, g));
  CHECK(Au.values.cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

TEST_CASE("matrix-free apply matches the explicit matrix") {
  auto hier = build_icosahedral_hierarchy(1);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(4, 0.0126);
  BalancedFlow<double> flow(0.028, kConst);
  const auto op = OperatorParameters<double>::courant_default(g, kConst);

  const auto full = balanced_flow_profiles(g, vert, flow, op);
  const auto fac = factorize_balanced_flow(g, vert, flow, op);
  const auto mixed = build_partial_factorization(full, fac);

  std::mt19937 rng(11);
  std::normal_distribution<double> dist;

  for (int variant = 0; variant < 3; ++variant) {
    const HattedCoefficients<double> h = variant == 0 ? assemble_hatted(full, g, vert, op.omega)
                                         : variant == 1
                                             ? assemble_hatted(fac, g, vert, op.omega)
                                             : assemble_hatted(mixed, g, vert, op.omega);
    const Eigen::SparseMatrix<double> A = dense_assemble(h, g);

    Field<double> u(g.level, 4, g.n_cells());
    // u = 0 -> 0
    const auto zero = apply_operator(h, g, u);
    CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);

    for (int trial = 0; trial < 10; ++trial) {
      for (Index i = 0; i < u.values.size(); ++i) u.values.data()[i] = dist(rng);
      const auto out = apply_operator(h, g, u);
      const Eigen::VectorXd flat =
          Eigen::Map<const Eigen::VectorXd>(u.values.data(), u.values.size());
      const Eigen::VectorXd ref = A * flat;
      const Eigen::VectorXd got =
          Eigen::Map<const Eigen::VectorXd>(out.values.data(), out.values.size());
      CHECK((got - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("impulse response has the five-point column stencil support") {
  auto hier = build_icosahedral_hierarchy(1);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(4, 0.0126);
  BalancedFlow<double> flow(0.022, kConst);
  const auto op = OperatorParameters<double>::courant_default(g, kConst);
  const auto h = assemble_hatted(balanced_flow_profiles(g, vert, flow, op), g, vert, op.omega);

  const Index T0 = 13;
  const Index k0 = 2;
  Field<double> u(g.level, 4, g.n_cells());
  u.values(k0, T0) = 1.0;
  const auto out = apply_operator(h, g, u);

  for (Index T = 0; T < g.n_cells(); ++T) {
    bool is_nb = false;
    for (int j = 0; j < 3; ++j) is_nb |= (g.neighbors(j, T0) == T);
    for (Index k = 0; k < 4; ++k) {
      const bool expected = (T == T0 && std::abs(k - k0) <= 1) || (is_nb && k == k0);
      if (!expected) CHECK(out.values(k, T) == 0.0);
    }
  }
  CHECK(out.values(k0, T0) != 0.0);
  CHECK(out.values(k0 + 1, T0) != 0.0);
  CHECK(out.values(k0 - 1, T0) != 0.0);
}

TEST_CASE("symmetry without advection, positive definiteness") {
  auto hier = build_icosahedral_hierarchy(1);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(3, 0.0126);
  BalancedFlow<double> flow(0.028, kConst);
  const auto op = OperatorParameters<double>::courant_default(g, kConst);
  const auto h = assemble_hatted(without_advection(balanced_flow_profiles(g, vert, flow, op)),
                                 g, vert, op.omega);
  const Eigen::MatrixXd A = dense_assemble(h, g).toDense();
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * A.cwiseAbs().maxCoeff());

  std::mt19937 rng(3);
  std::normal_distribution<double> dist;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd x(A.rows());
    for (Index i = 0; i < x.size(); ++i) x[i] = dist(rng);
    CHECK(x.dot(A * x) > 0.0);
  }
}

TEST_CASE("symmetry of the inner product form") {
  auto hier = build_icosahedral_hierarchy(1);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(4, 0.0126);
  BalancedFlow<double> flow(0.025, kConst);
  const auto op = OperatorParameters<double>::courant_default(g, kConst);
  const auto h = assemble_hatted(without_advection(balanced_flow_profiles(g, vert, flow, op)),
                                 g, vert, op.omega);
  std::mt19937 rng(5);
  std::normal_distribution<double> dist;
  for (int t = 0; t < 10; ++t) {
    Field<double> u(g.level, 4, g.n_cells()), v(g.level, 4, g.n_cells());
    for (Index i = 0; i < u.values.size(); ++i) u.values.data()[i] = dist(rng);
    for (Index i = 0; i < v.values.size(); ++i) v.values.data()[i] = dist(rng);
    const auto Au = apply_operator(h, g, u);
    const auto Av = apply_operator(h, g, v);
    const double a = (Au.values.array() * v.values.array()).sum();
    const double b = (u.values.array() * Av.values.array()).sum();
    CHECK(std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)));
  }
}

TEST_CASE("hatted path agrees with the term-by-term finite-volume oracle") {
  auto hier = build_icosahedral_hierarchy(1);
  const auto& g = hier.finest();
  BalancedFlow<double> flow(0.028, kConst);

  SUBCASE("uniform vertical grid, advection included") {
    auto vert = build_vertical_grid<double>(5, 0.0126);
    const auto op = OperatorParameters<double>::courant_default(g, kConst);
    const auto p = balanced_flow_profiles(g, vert, flow, op);
    const auto h = assemble_hatted(p, g, vert, op.omega);
    const Eigen::MatrixXd A = dense_assemble(h, g).toDense();
    const Eigen::MatrixXd B = oracles::fv_term_by_term(g, vert, p, op.omega).toDense();
    CHECK((A - B).cwiseAbs().maxCoeff() <= 1e-12 * B.cwiseAbs().maxCoeff());
  }
  SUBCASE("graded vertical grid, no advection") {
    auto vert = build_vertical_grid<double>(5, 0.0126, VerticalGrading::geometric, 1.3);
    const auto op = OperatorParameters<double>::courant_default(g, kConst);
    const auto p = without_advection(balanced_flow_profiles(g, vert, flow, op));
    const auto h = assemble_hatted(p, g, vert, op.omega);
    const Eigen::MatrixXd A = dense_assemble(h, g).toDense();
    const Eigen::MatrixXd B = oracles::fv_term_by_term(g, vert, p, op.omega).toDense();
    CHECK((A - B).cwiseAbs().maxCoeff() <= 1e-12 * B.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("mixed coefficients differ from factorized only through alpha_r") {
  auto hier = build_icosahedral_hierarchy(1);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(4, 0.0126);
  BalancedFlow<double> flow(0.028, kConst);
  const auto op = OperatorParameters<double>::courant_default(g, kConst);

  const auto full = balanced_flow_profiles(g, vert, flow, op);
  const auto fac = factorize_balanced_flow(g, vert, flow, op);
  const auto hm = assemble_hatted(build_partial_factorization(full, fac), g, vert, op.omega);
  const auto hx = assemble_hatted(fac, g, vert, op.omega);
  const auto hf = assemble_hatted(full, g, vert, op.omega);

  CHECK(hm.beta.separable);
  CHECK(hm.alpha_s.separable);
  CHECK(hm.xi_r.separable);
  CHECK(!hm.alpha_r.separable);
  CHECK((hm.beta.vert.array() == hx.beta.vert.array()).all());
  CHECK((hm.beta.horiz.array() == hx.beta.horiz.array()).all());
  CHECK((hm.alpha_s.vert.array() == hx.alpha_s.vert.array()).all());
  CHECK((hm.alpha_s.horiz.array() == hx.alpha_s.horiz.array()).all());
  CHECK((hm.xi_r.vert.array() == hx.xi_r.vert.array()).all());
  CHECK((hm.alpha_r.dense.array() == hf.alpha_r.dense.array()).all());
  // At epsilon = 1.23 the alpha_r fields genuinely differ.
  CHECK(((hm.alpha_r.densified() - hx.alpha_r.densified()).cwiseAbs().maxCoeff()) > 0.0);
}

TEST_CASE("shape, finiteness and cap guards") {
  auto hier = build_icosahedral_hierarchy(1);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(4, 0.0126);

  auto bad = ones_profiles(g, 3);  // wrong n_r
  CHECK_THROWS_AS((void)assemble_hatted(bad, g, vert, 1.0), shape_error);

  auto nan = ones_profiles(g, 4);
  nan.alpha_s(1, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)assemble_hatted(nan, g, vert, 1.0), nonfinite_error);

  const auto h = assemble_hatted(ones_profiles(g, 4), g, vert, 1.0);
  CHECK_THROWS_AS((void)dense_assemble(h, g, 10), cap_error);

  Field<double> wrong(g.level, 3, g.n_cells());
  CHECK_THROWS_AS((void)apply_operator(h, g, wrong), shape_error);
}

TEST_CASE("apply is bitwise independent of the thread count") {
  auto hier = build_icosahedral_hierarchy(2);
  const auto& g = hier.finest();
  auto vert = build_vertical_grid<double>(6, 0.0126);
  BalancedFlow<double> flow(0.022, kConst);
  const auto op = OperatorParameters<double>::courant_default(g, kConst);
  const auto h = assemble_hatted(balanced_flow_profiles(g, vert, flow, op), g, vert, op.omega);

  Field<double> u(g.level, 6, g.n_cells());
  std::mt19937 rng(17);
  std::normal_distribution<double> dist;
  for (Index i = 0; i < u.values.size(); ++i) u.values.data()[i] = dist(rng);

  const auto a = apply_operator(h, g, u, 1);
  const auto b = apply_operator(h, g, u, 4);
  CHECK((a.values.array() == b.values.array()).all());
}

#include <cmath>

#include <gtest/gtest.h>

#include "casimir/errors.hpp"
#include "casimir/fdfd.hpp"
#include "casimir/lifshitz.hpp"

using namespace casimir;
using namespace casimir::fdfd;

namespace {

const double kPi = 3.14159265358979323846;

MaterialLibrary test_library() {
  auto lib = MaterialLibrary::builtin();
  lib.set("four", Constant{4.0});
  return lib;
}

// PEC circle in a PEC square, constant fluid: small enough for unit tests
Scene2D small_scene(double d_over_a, const std::string& fluid = "four") {
  auto sc = make_scene(Circle{1}, Square{1}, 1.0, 0.3, d_over_a, 0.0);
  sc.inner_material = "pec";
  sc.fluid_material = fluid;
  return sc;
}

GridScene vacuum_box(double length, double spacing) {
  // a unit-permittivity "slab" leaves the cell homogeneous
  return GridScene::plate_proxy(Constant{1.0}, DielectricModel{Constant{1.0}}, 0.375 * length, 0.25 * length,
                                0.375 * length, spacing, false);
}

}  // namespace

TEST(Fdfd, LatticeBookkeeping) {
  YeeGrid g{0.1, 5, 4, Vec2::Zero(), false};
  EXPECT_EQ(g.e_size(), 5 * 5 + 6 * 4 + 6 * 5);
  EXPECT_EQ(g.h_size(), 6 * 4 + 5 * 5 + 5 * 4);
  std::vector<int> seen(g.e_size(), 0);
  g.for_each_e([&](Component, int, int, int idx) { ++seen[idx]; });
  for (int s : seen) EXPECT_EQ(s, 1);
  YeeGrid p{0.1, 5, 1, Vec2::Zero(), true};
  EXPECT_EQ(p.e_index(Component::y, 2, -1), p.e_index(Component::y, 2, 0));
}

TEST(Fdfd, OperatorReproducesTheSymbol) {
  // E_z ~ sin(m pi x / L) vanishes on both walls: A E = (k_lattice^2 + xi^2) E
  const double L = 2.0;
  for (double h : {L / 32, L / 64}) {
    const auto box = vacuum_box(L, h);
    const double xi = 1.3;
    const auto op = assemble_operator(box, xi, 0.0);
    const auto& g = box.grid();
    const int m = 3;
    const double k = m * kPi / L;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(box.active_count());
    for (int i = 1; i < g.nx; ++i) e[box.active_index()[g.e_index(Component::z, i, 0)]] = std::sin(k * i * h);
    const Eigen::VectorXd ae = op.matrix * e;
    const double lattice = 4 / (h * h) * std::pow(std::sin(k * h / 2), 2) + xi * xi;
    EXPECT_LT((ae - lattice * e).norm(), 1e-10 * ae.norm());
    // the continuum symbol up to O(h^2)
    const double cont = k * k + xi * xi;
    EXPECT_LT(std::abs(lattice - cont) / cont, 0.1 * (k * h) * (k * h));
  }
}

TEST(Fdfd, UnitFillGivesTheReferenceMatrix) {
  const auto box = vacuum_box(1.0, 1.0 / 32);
  const auto a = assemble_operator(box, 0.7, 1.1).matrix;
  const auto b = assemble_operator(box.reference(), 0.7, 1.1).matrix;
  EXPECT_EQ((a - b).norm(), 0.0);
}

TEST(Fdfd, PositiveDefiniteProbes) {
  const auto lib = MaterialLibrary::builtin();
  const auto sc = make_scene(Circle{1}, Circle{1}, 0.0955, 0.25, 0.3, 0);
  const auto gs = GridScene::from_scene(sc, lib, {});
  EXPECT_NO_THROW(assemble_operator(gs, 1.0, 0.0, true));
  SparseMatrix neg(3, 3);
  neg.setIdentity();
  neg *= -1;
  EXPECT_THROW(check_positive_definite(neg), AssemblyError);
  EXPECT_THROW(assemble_operator(gs, 0.0, 1.0), DomainError);
}

TEST(Fdfd, GreenColumnResidualAndReciprocity) {
  const auto lib = test_library();
  GridOptions go;
  go.resolution = 8;
  const auto gs = GridScene::from_scene(small_scene(0.3), lib, go);
  const auto op = assemble_operator(gs, 1.0, 0.5);
  for (auto kind : {SolverKind::cholesky, SolverKind::conjugate_gradient}) {
    const SpdSolver solver(op.matrix, {kind, 1e-8, 20000});
    const Vec2 p1(-1.2, 0.3), p2(0.9, -0.8);
    const auto g1 = green_column(gs, op, solver, Component::x, p1);
    const auto g2 = green_column(gs, op, solver, Component::y, p2);

    // residual of the first solve in the active space
    Eigen::VectorXd x(gs.active_count()), b = Eigen::VectorXd::Zero(gs.active_count());
    for (int n = 0; n < gs.active_count(); ++n) x[n] = g1[gs.active_dofs()[n]];
    int src = -1;
    double best = 1e300;
    gs.grid().for_each_e([&](Component c, int i, int j, int idx) {
      if (c != Component::x || gs.active_index()[idx] < 0) return;
      const double d = (gs.grid().e_position(c, i, j) - p1).norm();
      if (d < best) best = d, src = idx;
    });
    b[gs.active_index()[src]] = 1.0 / gs.cell_measure();
    EXPECT_LT((op.matrix * x - b).norm(), 1e-8 * b.norm());

    int dst = -1;
    best = 1e300;
    gs.grid().for_each_e([&](Component c, int i, int j, int idx) {
      if (c != Component::y || gs.active_index()[idx] < 0) return;
      const double d = (gs.grid().e_position(c, i, j) - p2).norm();
      if (d < best) best = d, dst = idx;
    });
    EXPECT_NEAR(g1[dst], g2[src], 1e-6 * std::abs(g1[dst]));
  }
}

TEST(Fdfd, FieldDecaysAwayFromTheSource) {
  const auto box = vacuum_box(2.0, 1.0 / 32);
  const auto op = assemble_operator(box, 2.0, 0.0);
  const SpdSolver solver(op.matrix, {});
  const auto g = green_column(box, op, solver, Component::z, Vec2(1.0, 0.0));
  const auto& grid = box.grid();
  const int ic = grid.nx / 2;
  double last = g[grid.e_index(Component::z, ic, 0)];
  for (int i = ic + 1; i < grid.nx; ++i) {
    const double v = g[grid.e_index(Component::z, i, 0)];
    EXPECT_GT(v, 0);
    EXPECT_LT(v, last);
    last = v;
  }
}

TEST(Fdfd, HomogeneousSceneHasZeroFlux) {
  const auto lib = test_library();
  GridOptions go;
  go.resolution = 8;
  const auto ref = GridScene::from_scene(small_scene(0.3), lib, go).reference();
  const auto f = stress_flux(ref, ref, 0.8, 0.4);
  EXPECT_EQ(f[0], 0.0);
  EXPECT_EQ(f[1], 0.0);
  EXPECT_EQ(f[2], 0.0);
}

TEST(Fdfd, ConcentricSceneHasNoNetFlux) {
  const auto lib = test_library();
  GridOptions go;
  go.resolution = 8;
  const auto off = GridScene::from_scene(small_scene(0.3), lib, go);
  const auto on = GridScene::from_scene(small_scene(0.0), lib, go);
  for (double xi : {0.3, 2.0}) {
    const double scale = std::abs(stress_flux(off, off.reference(), xi, 0.5)[0]);
    ASSERT_GT(scale, 0);
    const auto f = stress_flux(on, on.reference(), xi, 0.5);
    EXPECT_LT(std::abs(f[0]), 1e-7 * scale);
    EXPECT_LT(std::abs(f[1]), 1e-7 * scale);
  }
}

TEST(Fdfd, BoundaryTiesBreakSymmetrically) {
  // at 6 cells per a both radii are whole numbers of cells, so lattice
  // points sit exactly on the interfaces
  const auto lib = MaterialLibrary::builtin();
  GridOptions go;
  go.resolution = 6;
  const auto on = GridScene::from_scene(make_scene(Circle{1}, Circle{1}, 0.0955, 0.25, 0.0, 0), lib, go);
  // force scale from a displaced scene; at this resolution none has room for a contour
  GridOptions fine = go;
  fine.resolution = 8;
  const auto off = GridScene::from_scene(make_scene(Circle{1}, Circle{1}, 0.0955, 0.25, 0.3, 0), lib, fine);
  const auto& g = on.grid();
  EXPECT_EQ(g.node(3, 5).x(), -g.node(g.nx - 3, 5).x());
  EXPECT_EQ(g.e_position(Component::x, 2, 4).x(), -g.e_position(Component::x, g.nx - 3, 4).x());
  for (double xi : {1.0, 30.0}) {
    const double scale = std::abs(stress_flux(off, off.reference(), xi, 5.0)[0]);
    const auto f = stress_flux(on, on.reference(), xi, 5.0);
    EXPECT_LT(std::abs(f[0]), 1e-7 * scale);
    EXPECT_LT(std::abs(f[1]), 1e-7 * scale);
  }
}

TEST(Fdfd, ContourChoiceRespectsClearance) {
  const auto lib = test_library();
  GridOptions go;
  go.resolution = 8;
  const auto gs = GridScene::from_scene(small_scene(0.3), lib, go);
  const auto [lo, hi] = gs.contour_range();
  ASSERT_LE(lo, hi);
  EXPECT_GE(gs.contour_half_width(), lo);
  EXPECT_LE(gs.contour_half_width(), hi);
  EXPECT_THROW(gs.with_contour(hi + 1), GeometryError);
  EXPECT_THROW(gs.with_contour(lo - 1), GeometryError);
  // closure of the contour weights
  Vec2 closure = Vec2::Zero();
  for (const auto& p : gs.contour()) closure += p.weight * p.normal;
  EXPECT_LT(closure.norm(), 1e-14);
  EXPECT_EQ(gs.hash(), GridScene::from_scene(small_scene(0.3), lib, go).hash());
  EXPECT_NE(gs.hash(), GridScene::from_scene(small_scene(0.2), lib, go).hash());
}

TEST(Fdfd, RejectsUnsupportedScenes) {
  auto lib = test_library();
  auto sc = small_scene(0.3);
  sc.outer_material = "au";
  EXPECT_THROW(GridScene::from_scene(sc, lib, {}), DomainError);
  sc = small_scene(1.0);
  EXPECT_THROW(GridScene::from_scene(sc, lib, {}), ContactError);
  EXPECT_THROW(GridScene::plate_proxy(Constant{1.0}, std::nullopt, 0.1, 0.05, 0.1, 0.03), DomainError);
}

TEST(Fdfd, PlateProxyConvergesToLifshitz) {
  // perfect-metal slab between perfect-metal walls, gaps 1 and 2
  const double exact = kPi * kPi / 240 * (1.0 / 16 - 1.0);
  ExactOptions o;
  o.n_xi = 24;
  o.n_kz = 24;
  double last_err = 1e300;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    const auto r = casimir_force_torque(GridScene::plate_proxy(Constant{1.0}, std::nullopt, 1.0, 0.5, 2.0, h), o);
    const double err = std::abs(r.value[0] - exact);
    EXPECT_LT(err, last_err);
    last_err = err;
  }
  EXPECT_LT(last_err, 0.1 * std::abs(exact));
}

TEST(Fdfd, WorkerCountDoesNotChangeBits) {
  const auto lib = test_library();
  GridOptions go;
  go.resolution = 6;
  const auto gs = GridScene::from_scene(small_scene(0.3), lib, go);
  ExactOptions o;
  o.n_xi = 4;
  o.n_kz = 4;
  const auto one = casimir_force_torque(gs, o);
  o.workers = 3;
  const auto three = casimir_force_torque(gs, o);
  EXPECT_EQ(one.value, three.value);
  EXPECT_EQ(one.spectral_error, three.spectral_error);
}

TEST(Fdfd, SolversAgree) {
  const auto lib = test_library();
  GridOptions go;
  go.resolution = 8;
  const auto gs = GridScene::from_scene(small_scene(0.3), lib, go);
  const auto a = stress_flux(gs, gs.reference(), 1.0, 0.5, {SolverKind::cholesky});
  const auto b = stress_flux(gs, gs.reference(), 1.0, 0.5, {SolverKind::conjugate_gradient, 1e-10});
  EXPECT_NEAR(a[0], b[0], 1e-6 * std::abs(a[0]));
}

TEST(Fdfd, AbsorbedPathMatchesFullQuadrature) {
  const auto lib = test_library();
  GridOptions go;
  go.resolution = 12;
  const auto gs = GridScene::from_scene(small_scene(0.3), lib, go);
  ExactOptions o;
  o.n_xi = 16;
  o.n_kz = 16;
  const auto full = casimir_force_torque(gs, o);
  const auto abs = casimir_force_torque_absorbed(gs, 24);
  // attraction toward the nearer wall
  EXPECT_GT(full.value[0], 0);
  EXPECT_NEAR(abs.value[0], full.value[0], 0.02 * std::abs(full.value[0]) + full.spectral_error[0]);
  auto dielectric = small_scene(0.3);
  dielectric.fluid_material = "ethanol";
  EXPECT_THROW(casimir_force_torque_absorbed(GridScene::from_scene(dielectric, lib, go), 8), DomainError);
}

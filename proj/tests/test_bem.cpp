#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "acbem/bem.hpp"
#include "acbem/error.hpp"
#include "acbem/harness.hpp"
#include "acbem/mesh.hpp"
#include "support.hpp"

using namespace acbem;
using std::numbers::pi;

namespace {

Eigen::VectorXd cos_trace(const BoundaryMesh& bm, int k) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(bm.size()));
  for (std::size_t i = 0; i < bm.size(); ++i) {
    const Vec2& x = bm.vertices()[i];
    u[static_cast<Eigen::Index>(i)] = std::cos(k * std::atan2(x.y(), x.x()));
  }
  return u;
}

Eigen::VectorXd panel_lengths(const BoundaryMesh& bm) {
  Eigen::VectorXd l(static_cast<Eigen::Index>(bm.size()));
  for (std::size_t k = 0; k < bm.size(); ++k) l[static_cast<Eigen::Index>(k)] = bm.panel(k).length;
  return l;
}

double log_green(const Vec2& x, const Vec2& y) { return -std::log((x - y).norm()) / (2.0 * pi); }

}  // namespace

TEST(BoundaryMesh, Validation) {
  EXPECT_THROW(BoundaryMesh({Vec2(0, 0), Vec2(1, 0)}), MeshError);
  EXPECT_THROW(BoundaryMesh({Vec2(0, 0), Vec2(0, 1), Vec2(1, 0)}), MeshError);
  EXPECT_THROW(BoundaryMesh({Vec2(0, 0), Vec2(1, 0), Vec2(1, 0), Vec2(0, 1)}), MeshError);
  const BoundaryMesh sq({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)});
  EXPECT_NEAR(sq.length(), 4.0, 1e-15);
  EXPECT_NEAR(sq.signed_area(), 1.0, 1e-15);
  EXPECT_NEAR((sq.panel(0).normal - Vec2(0, -1)).norm(), 0.0, 1e-15);
}

TEST(BoundaryMesh, FromFem) {
  const FemMesh m = build_mesh(4, 8);
  const BoundaryMesh bm = BoundaryMesh::from_fem(m);
  EXPECT_EQ(bm.size(), m.boundary().size());
  EXPECT_NEAR(bm.signed_area(), m.area(), 1e-9 * m.area());
}

TEST(SingleLayer, SelfEntries) {
  const BoundaryMesh unit({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)});
  EXPECT_NEAR(single_layer_entry(unit.panel(0), unit.panel(0), true), 3.0 / (4.0 * pi), 1e-14);
  const BoundaryMesh two({Vec2(0, 0), Vec2(2, 0), Vec2(0, 2)});
  EXPECT_NEAR(single_layer_entry(two.panel(0), two.panel(0), true), -2.0 / pi * (std::log(2.0) - 1.5), 1e-14);
}

TEST(SingleLayer, FarEntryMatchesMidpointRule) {
  const BoundaryMesh bm({Vec2(0, 0), Vec2(0.01, 0), Vec2(5, 5), Vec2(4.99, 5)});
  const Panel& p = bm.panel(0);
  const Panel& q = bm.panel(2);
  const double approx = p.length * q.length * log_green(p.midpoint(), q.midpoint());
  EXPECT_NEAR(single_layer_entry(p, q, false), approx, 1e-8 * std::abs(approx));
}

TEST(SingleLayer, SymmetricAndCircleSpectrum) {
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(64);
  const Eigen::MatrixXd V = assemble_single_layer(bm);
  EXPECT_LE((V - V.transpose()).norm(), 1e-13 * V.norm());
  const Eigen::VectorXd l = panel_lengths(bm);
  for (int k = 1; k <= 4; ++k) {
    Eigen::VectorXd w(64);
    for (int i = 0; i < 64; ++i) w[i] = std::cos(k * (2.0 * i + 1.0) * pi / 64.0);
    const double rq = w.dot(V * w) / w.dot(l.asDiagonal() * w);
    EXPECT_NEAR(rq, 1.0 / (2.0 * k), 0.02 / (2.0 * k)) << "k=" << k;
  }
}

TEST(SingleLayer, ScalingLaw) {
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(24, 1.0, 0.3);
  const Eigen::MatrixXd V1 = assemble_single_layer(bm);
  const Eigen::VectorXd l = panel_lengths(bm);
  for (double R : {2.0, 8.0, 32.0}) {
    const Eigen::MatrixXd VR = assemble_single_layer(bm.scaled(R));
    const Eigen::MatrixXd expect = R * R * (V1 - std::log(R) / (2.0 * pi) * l * l.transpose());
    EXPECT_LE((VR - expect).norm(), 1e-11 * expect.norm());
  }
}

TEST(DoubleLayer, ConstantAndCircleModes) {
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(64);
  const Eigen::MatrixXd K = assemble_double_layer(bm);
  const Eigen::VectorXd l = panel_lengths(bm);
  const Eigen::VectorXd K1 = K * Eigen::VectorXd::Ones(64);
  EXPECT_LE((K1 + 0.5 * l).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd M = boundary_mass(bm);
  for (int k = 1; k <= 3; ++k) {
    const Eigen::VectorXd c = cos_trace(bm, k);
    EXPECT_LE((K * c).norm(), 1e-2 * (M * c).norm()) << "k=" << k;
  }
}

TEST(DoubleLayer, ConstantOnIrregularPolygon) {
  const FemMesh m = build_mesh(4, 10);
  const BoundaryMesh bm = BoundaryMesh::from_fem(m);
  const Eigen::VectorXd K1 = assemble_double_layer(bm) * Eigen::VectorXd::Ones(static_cast<Eigen::Index>(bm.size()));
  EXPECT_LE((K1 + 0.5 * panel_lengths(bm)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Mass, RowsAndTotals) {
  const BoundaryMesh bm({Vec2(0, 0), Vec2(2, 0), Vec2(2, 1), Vec2(0, 1)});
  const Eigen::MatrixXd M = boundary_mass(bm);
  EXPECT_NEAR(M(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(M(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(M(1, 1), 0.5, 1e-15);
  EXPECT_NEAR(M.sum(), bm.length(), 1e-14);
  const Eigen::MatrixXd L2 = boundary_l2_mass(bm);
  EXPECT_NEAR(L2.sum(), bm.length(), 1e-14);
  EXPECT_NEAR(L2(0, 1), 2.0 / 6.0, 1e-15);
}

TEST(EquilibriumDensity, UniformOnRegularPolygon) {
  for (double R : {1.0, 3.0}) {
    const BoundaryMesh bm = BoundaryMesh::regular_polygon(48, R);
    const Eigen::VectorXd w = equilibrium_density(assemble_single_layer(bm), bm);
    EXPECT_NEAR(w.maxCoeff() - w.minCoeff(), 0.0, 1e-10 / R);
    EXPECT_NEAR(w.dot(panel_lengths(bm)), 1.0, 1e-12);
    EXPECT_NEAR(w[0], 1.0 / bm.length(), 1e-10);
    EXPECT_NEAR(w[0], 1.0 / (2.0 * pi * R), 1e-3 / R);
  }
}

TEST(EquilibriumDensity, VwIsConstant) {
  const BoundaryMesh bm = BoundaryMesh::from_fem(build_mesh(4, 8));
  const Eigen::MatrixXd V = assemble_single_layer(bm);
  const Eigen::VectorXd w = equilibrium_density(V, bm);
  const Eigen::VectorXd Vw = (V * w).cwiseQuotient(panel_lengths(bm));
  EXPECT_LE(Vw.maxCoeff() - Vw.minCoeff(), 1e-10 * Vw.cwiseAbs().maxCoeff());
  EXPECT_NEAR(boundary_pairing(w, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(bm.size())), bm), 1.0, 1e-12);
}

TEST(ProjectStar, ConstantsAndIdempotence) {
  const BemOperators ops(BoundaryMesh::regular_polygon(32, 2.0, 0.1));
  EXPECT_LE(ops.project_star(Eigen::VectorXd::Constant(32, 3.0)).norm(), 1e-12);
  const Eigen::VectorXd u = test::random_vector(32);
  const Eigen::VectorXd p = ops.project_star(u);
  EXPECT_LE((ops.project_star(p) - p).norm(), 1e-13);
  EXPECT_NEAR(ops.gauge().dot(p), 0.0, 1e-14);
  EXPECT_NEAR(ops.gauge().sum(), 1.0, 1e-12);
}

TEST(Steklov, CircleOracle) {
  for (const CircleOracle& o : circle_steklov_oracles(128)) {
    EXPECT_LE(o.rel_error, 0.01) << "k=" << o.k;
    EXPECT_LE(o.rel_error_interp, 0.01) << "k=" << o.k;
  }
}

TEST(Steklov, RefinementOrder) {
  std::vector<double> h, err;
  for (int M : {32, 64, 128, 256}) {
    const auto o = circle_steklov_oracles(M, 2);
    h.push_back(1.0 / M);
    err.push_back(o[1].rel_error_interp);
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_LT(err[i], err[i - 1]);
  EXPECT_GE(fit_loglog(h, err).slope, 2.0 - 0.05);
}

TEST(Steklov, FormProperties) {
  const BemOperators ops(BoundaryMesh::from_fem(build_mesh(4, 8)));
  const Eigen::MatrixXd& S = ops.steklov_form();
  const auto n = S.rows();
  EXPECT_LE((S - S.transpose()).norm(), 1e-12 * S.norm());
  EXPECT_LE((S * Eigen::VectorXd::Ones(n)).norm(), 1e-10 * S.norm());
  for (int t = 0; t < 5; ++t) {
    const Eigen::VectorXd u = test::random_vector(n);
    EXPECT_NEAR(u.dot(S * u), ops.quadratic_form(u), 1e-9 * std::abs(u.dot(S * u)));
    EXPECT_GE(ops.quadratic_form(u), 0.0);
  }
}

TEST(Steklov, RescaleInvariance) {
  const BoundaryMesh bm = BoundaryMesh::from_fem(build_mesh(4, 8));
  const BemOperators ops(bm);
  const Eigen::VectorXd u = ops.project_star(test::random_vector(static_cast<Eigen::Index>(bm.size())));
  const double q1 = ops.quadratic_form(u);
  const double n1 = fractional_half_norm(u, bm);
  for (double R : {2.0, 8.0, 32.0}) {
    const BemOperators opsR(bm.scaled(R));
    const Eigen::VectorXd uR = opsR.project_star(u);
    EXPECT_LE(std::abs(opsR.quadratic_form(uR) - q1), 1e-8 * q1) << "R=" << R;
    EXPECT_LE(std::abs(fractional_half_norm(uR, bm.scaled(R)) - n1), 1e-8 * n1) << "R=" << R;
  }
}

TEST(Steklov, ExteriorRepresentationOfDecayingField) {
  // G(·, y0) − G(·, y1) is harmonic outside Γ and vanishes at infinity.
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(256);
  const BemOperators ops(bm);
  const Vec2 y0(0.2, 0.1), y1(-0.1, -0.25);
  auto field = [&](const Vec2& x) { return log_green(x, y0) - log_green(x, y1); };
  Eigen::VectorXd u(256);
  for (int i = 0; i < 256; ++i) u[i] = field(bm.vertices()[static_cast<std::size_t>(i)]);
  EXPECT_NEAR(ops.gauge().dot(u), 0.0, 1e-3 * u.cwiseAbs().maxCoeff());
  const Eigen::VectorXd v = ops.steklov_apply(u);
  for (const Vec2& x : {Vec2(2.0, 0.0), Vec2(-1.5, 2.5), Vec2(0.0, -4.0)})
    EXPECT_NEAR(ops.exterior_field(x, u, v), field(x), 1e-3 * std::abs(field(x)) + 1e-6);
}

TEST(Gagliardo, CircleOracle) {
  for (const CircleOracle& o : circle_gagliardo_oracles(256)) EXPECT_LE(o.rel_error, 0.02) << "k=" << o.k;
}

TEST(Gagliardo, ConstantsAndSymmetry) {
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(40, 1.5);
  const Eigen::MatrixXd G = gagliardo_matrix(bm);
  EXPECT_LE((G - G.transpose()).norm(), 1e-12 * G.norm());
  EXPECT_LE((G * Eigen::VectorXd::Ones(40)).norm(), 1e-10 * G.norm());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * G.norm());
}

TEST(FractionalNorm, ConstantTrace) {
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(30, 2.0);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(30);
  EXPECT_NEAR(half_seminorm_squared(one, bm), 0.0, 1e-10);
  EXPECT_NEAR(fractional_half_norm(one, bm), std::sqrt(bm.length() / (0.5 * bm.diameter())), 1e-12);
  const Eigen::MatrixXd Gram = half_norm_gram(bm);
  const Eigen::VectorXd u = test::random_vector(30);
  EXPECT_NEAR(std::sqrt(u.dot(Gram * u)), fractional_half_norm(u, bm), 1e-12 * fractional_half_norm(u, bm));
}

TEST(OperatorDump, RoundTrip) {
  const BemOperators ops(BoundaryMesh::regular_polygon(12));
  std::stringstream ss;
  write_operators(ss, ops);
  const OperatorDump d = read_operators(ss);
  EXPECT_EQ(d.header.at("format_version"), 1);
  EXPECT_EQ(d.V, ops.V());
  EXPECT_EQ(d.K, ops.K());
  EXPECT_EQ(d.mass, ops.mass());
  EXPECT_EQ(d.S, ops.steklov_form());
  EXPECT_EQ(d.w_eq, ops.w_eq());
  std::stringstream bad("{\"format_version\": 7}\n");
  EXPECT_THROW(read_operators(bad), Error);
}

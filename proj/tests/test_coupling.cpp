#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "acbem/coupling.hpp"
#include "acbem/error.hpp"
#include "acbem/harness.hpp"
#include "support.hpp"

using namespace acbem;
using acbem::test::random_vector;

namespace {

std::shared_ptr<const FemMesh> mesh_ptr(double K, double N) { return std::make_shared<const FemMesh>(build_mesh(K, N)); }

/// Slow re-assembly of E^ac_h from its definition.
double slow_energy_ac(const SitePotential& v, const FemMesh& m, const Eigen::VectorXd& u) {
  const RegionDecomposition& d = m.decomposition();
  double e = 0.0;
  for (const Site& s : d.atomistic()) e += v.value(finite_difference(m.nodes(), u, s));
  for (const Site& s : d.interface())
    e += v.value(ReconstructionStencil::build(s, d, 2.0 / 3.0).apply(finite_difference(m.nodes(), u, s)));
  const Eigen::Matrix<double, 6, 2>& A = direction_matrix();
  for (const Triangle& t : m.triangles()) {
    const Vec2 p0 = m.node_position(static_cast<std::size_t>(t.v[0]));
    const Vec2 p1 = m.node_position(static_cast<std::size_t>(t.v[1]));
    const Vec2 p2 = m.node_position(static_cast<std::size_t>(t.v[2]));
    Eigen::Matrix2d E;
    E.row(0) = (p1 - p0).transpose();
    E.row(1) = (p2 - p0).transpose();
    const Vec2 F = E.inverse() * Vec2(u[t.v[1]] - u[t.v[0]], u[t.v[2]] - u[t.v[0]]);
    e += t.continuum_weight * std::abs(E.determinant()) / 2.0 * v.value(A * F) / kCellVolume;
  }
  return e;
}

}  // namespace

TEST(Reconstruction, IdentityWhenNoContinuumNeighbour) {
  ReconstructionStencil st;
  st.lambda.fill(1.0);
  const Vec6 g = random_vector(6);
  EXPECT_EQ(st.apply(g), g);
  EXPECT_EQ(st.matrix(), Mat6::Identity());
}

TEST(Reconstruction, HandComputedPattern) {
  ReconstructionStencil st;
  st.lambda.fill(1.0);
  st.lambda[0] = 2.0 / 3.0;
  Vec6 g;
  g << 0.3, -0.1, 0.7, 0.2, -0.5, 0.4;
  Vec6 r = g;
  r[0] = (g[5] + g[1]) / 3.0 + 2.0 * g[0] / 3.0;
  EXPECT_NEAR((reconstruct(st, g) - r).norm(), 0.0, 1e-15);
}

TEST(Reconstruction, HomogeneousExactness) {
  const FemMesh m = build_mesh(4, 5);
  const Vec6 Fa = direction_matrix() * Vec2(0.17, -0.29);
  for (const Site& s : m.decomposition().interface()) {
    const auto st = ReconstructionStencil::build(s, m.decomposition());
    EXPECT_NEAR((st.apply(Fa) - Fa).norm(), 0.0, 1e-15);
    for (int j = 0; j < 6; ++j) {
      const bool cont = m.decomposition().region(s + kNeighbourOffsets[j]) == Region::Continuum;
      EXPECT_EQ(st.lambda[j], cont ? 2.0 / 3.0 : 1.0);
    }
  }
}

TEST(Reconstruction, RejectsNonInterfaceSite) {
  const FemMesh m = build_mesh(4, 5);
  EXPECT_THROW(ReconstructionStencil::build({0, 0}, m.decomposition()), DomainError);
  EXPECT_THROW(ReconstructionStencil::build({40, 0}, m.decomposition()), DomainError);
}

TEST(EnergyAc, ZeroAndHomogeneous) {
  const auto v = default_potential(0.3, 0.2);
  const auto m = mesh_ptr(4, 12);
  const AcEnergy E(v, m);
  const auto n = static_cast<Eigen::Index>(m->node_count());
  EXPECT_EQ(E.energy(Eigen::VectorXd::Zero(n)), 0.0);
  EXPECT_EQ(energy_ac(E, Eigen::VectorXd::Zero(n)), 0.0);
  const Vec2 F(0.12, 0.2);
  const CauchyBorn W(v);
  EXPECT_NEAR(E.energy(homogeneous_displacement(*m, F)), m->area() * W.value(F), 1e-11 * m->area());
  const auto parts = E.energy_parts(homogeneous_displacement(*m, F));
  const double vF = v->value(direction_matrix() * F);
  EXPECT_NEAR(parts[0], static_cast<double>(m->decomposition().atomistic().size()) * vF, 1e-12);
  EXPECT_NEAR(parts[1], static_cast<double>(m->decomposition().interface().size()) * vF, 1e-12);
}

TEST(EnergyAc, MatchesSlowAssembly) {
  const auto v = default_potential(0.3, 0.2);
  for (auto [K, N] : {std::pair{4.0, 5.0}, {8.0, 20.0}}) {
    const auto m = mesh_ptr(K, N);
    const AcEnergy E(v, m);
    const Eigen::VectorXd u = random_vector(static_cast<Eigen::Index>(m->node_count()));
    const double slow = slow_energy_ac(*v, *m, u);
    EXPECT_NEAR(E.energy(u), slow, 1e-11 * std::abs(slow));
  }
}

TEST(EnergyAc, DerivativesMatchFiniteDifferences) {
  const auto m = mesh_ptr(4, 10);
  const AcEnergy E(default_potential(0.3, 0.2), m);
  const auto n = static_cast<Eigen::Index>(m->node_count());
  auto energy = [&](const Eigen::VectorXd& x) { return E.energy(x); };
  auto grad = [&](const Eigen::VectorXd& x) { return E.gradient(x); };
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd u = random_vector(n), phi = random_vector(n, -1, 1), psi = random_vector(n, -1, 1);
    EXPECT_LE(test::directional_error(energy, E.gradient(u), u, phi), 1e-5);
    EXPECT_LE(test::hessian_error(grad, E.hessian_apply(u, psi), u, phi, psi), 1e-5);
    if (k < 5) EXPECT_LE((E.hessian(u) * psi - E.hessian_apply(u, psi)).norm(), 1e-11 * psi.norm());
  }
}

TEST(EnergyAc, Locality) {
  const auto m = mesh_ptr(4, 16);
  const AcEnergy E(default_potential(0.3, 0.2), m);
  const auto n = static_cast<Eigen::Index>(m->node_count());
  const Eigen::VectorXd u = random_vector(n);
  const auto H = E.hessian(u);
  // A continuum node away from the interface and from Γ_h.
  const auto& d = m->decomposition();
  for (std::size_t k = 0; k < m->node_count(); ++k) {
    const Site s = m->nodes()[k];
    if (d.region(s) != Region::Continuum || m->is_boundary()[k] || hex_radius(s) < d.atomistic_hex_radius() + 4) continue;
    std::set<int> adjacent;
    for (const Triangle& t : m->triangles())
      if (std::find(t.v.begin(), t.v.end(), static_cast<int>(k)) != t.v.end()) adjacent.insert(t.v.begin(), t.v.end());
    std::set<int> pattern;
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, static_cast<Eigen::Index>(k)); it; ++it)
      if (it.value() != 0.0) pattern.insert(static_cast<int>(it.row()));
    EXPECT_TRUE(std::includes(adjacent.begin(), adjacent.end(), pattern.begin(), pattern.end()));
    Eigen::VectorXd bump = u;
    bump[static_cast<Eigen::Index>(k)] += 0.1;
    const Eigen::VectorXd dg = E.gradient(bump) - E.gradient(u);
    for (Eigen::Index a = 0; a < n; ++a)
      if (!adjacent.contains(static_cast<int>(a))) EXPECT_EQ(dg[a], 0.0);
    break;
  }
}

TEST(PatchTest, ZeroStrain) {
  const AcEnergy E(default_potential(0.3, 0.2), mesh_ptr(4, 5));
  const PatchTestResult r = patch_test(Vec2::Zero(), E);
  EXPECT_EQ(r.energy_residual, 0.0);
  EXPECT_EQ(r.force_residual, 0.0);
}

TEST(PatchTest, G23IsGhostForceFree) {
  for (auto [K, N] : {std::pair{4.0, 5.0}, {8.0, 30.0}}) {
    const AcEnergy E(default_potential(0.3, 0.2), mesh_ptr(K, N));
    for (const PatchSample& s : patch_test_sweep(E, 20, 99)) {
      EXPECT_LE(s.energy_residual, 1e-10);
      EXPECT_LE(s.force_residual, 1e-10);
    }
  }
}

TEST(PatchTest, PerturbedCoefficientShowsGhostForces) {
  const AcEnergy E(default_potential(0.3, 0.2), mesh_ptr(8, 9), 0.7);
  double worst_force = 0.0, worst_energy = 0.0;
  for (int k = 0; k < 12; ++k) {
    const double th = k * std::numbers::pi / 6.0;
    const PatchTestResult r = patch_test(Vec2(0.3 * std::cos(th), 0.3 * std::sin(th)), E);
    worst_force = std::max(worst_force, r.force_residual);
    worst_energy = std::max(worst_energy, r.energy_residual);
  }
  EXPECT_GT(worst_force, 1e-4);
  // Any λ reproduces F·a exactly, so only the forces see the perturbation.
  EXPECT_LE(worst_energy, 1e-12);
}

TEST(StabilityAc, PositiveOnZeroMeanSpace) {
  const auto v = default_potential(0.3, 0.2);
  std::vector<double> values;
  for (double K : {4.0, 8.0, 16.0}) {
    const auto m = mesh_ptr(K, K + 1);
    const AcEnergy E(v, m);
    const auto n = static_cast<Eigen::Index>(m->node_count());
    const Eigen::MatrixXd H(E.hessian(Eigen::VectorXd::Zero(n)));
    const Eigen::MatrixXd A(fem_stiffness(*m));
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::VectorXd::Ones(n));
    const Eigen::MatrixXd Z = Eigen::MatrixXd(qr.householderQ()).rightCols(n - 1);
    const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Z.transpose() * H * Z, Z.transpose() * A * Z,
                                                                       Eigen::EigenvaluesOnly);
    values.push_back(es.eigenvalues().minCoeff());
  }
  for (double c : values) EXPECT_GT(c, 0.0);
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  EXPECT_LE((hi - lo) / hi, 0.2);
}

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "acbem/error.hpp"
#include "acbem/mesh.hpp"
#include "support.hpp"

using namespace acbem;
using acbem::test::random_vector;

namespace {

std::string dump(const FemMesh& m) {
  std::ostringstream os;
  write_mesh(os, m);
  return os.str();
}

long euler_characteristic(const FemMesh& m) {
  std::set<std::pair<int, int>> edges;
  for (const Triangle& t : m.triangles())
    for (int a = 0; a < 3; ++a) edges.insert(std::minmax(t.v[a], t.v[(a + 1) % 3]));
  return static_cast<long>(m.node_count()) - static_cast<long>(edges.size()) + static_cast<long>(m.triangles().size());
}

}  // namespace

TEST(BuildMesh, CanonicalWhenNEqualsK) {
  const FemMesh m = build_mesh(4, 4);
  for (const Triangle& t : m.triangles()) EXPECT_TRUE(t.canonical);
  EXPECT_EQ(m.node_count(), hexagon_sites(m.outer_radius()).size());
}

TEST(BuildMesh, GradedQuality) {
  const FemMesh m = build_mesh(4, 16);
  const MeshQuality q = mesh_quality(m);
  EXPECT_LE(q.max_h, 16.0 / 4.0 + 1.0);
  EXPECT_LE(q.max_shape, 10.0);
  EXPECT_GT(m.rings().size(), 1u);
}

TEST(BuildMesh, Invariants) {
  for (auto [K, N] : {std::pair{2.0, 2.0}, {4.0, 5.0}, {4.0, 16.0}, {8.0, 9.0}, {8.0, 40.0}, {16.0, 17.0}, {24.0, 25.0}}) {
    SCOPED_TRACE("K=" + std::to_string(K) + " N=" + std::to_string(N));
    const FemMesh m = build_mesh(K, N);
    const MeshQuality q = mesh_quality(m);
    EXPECT_EQ(euler_characteristic(m), 1);
    EXPECT_EQ(q.euler, 1);
    EXPECT_LE(q.max_shape, 10.0);
    EXPECT_LE(q.boundary_ratio, 4.0);
    EXPECT_GE(q.min_panel, 1.0 - 1e-12);
    EXPECT_TRUE(q.boundary_aligned);
    EXPECT_GE(m.outer_radius() * std::sqrt(3.0) / 2.0, N - 1e-12);

    const RegionDecomposition& d = m.decomposition();
    for (const Triangle& t : m.triangles()) {
      EXPECT_GT(t.area, 0.0);
      bool touches = false;
      for (int v : t.v) touches |= d.region(m.nodes()[static_cast<std::size_t>(v)]) != Region::Continuum;
      if (touches) EXPECT_TRUE(t.canonical);
    }
    for (const Site& s : generate_sites(K)) EXPECT_TRUE(m.nodes().contains(s));

    // Ω^c is Ω_h minus one Voronoi cell per site of A ∪ I.
    const double cells = static_cast<double>(d.atomistic().size() + d.interface().size()) * kCellVolume;
    EXPECT_NEAR(m.continuum_area(), m.area() - cells, 1e-9 * m.area());
    EXPECT_NEAR(m.area(), 1.5 * std::sqrt(3.0) * m.outer_radius() * m.outer_radius(), 1e-9 * m.area());

    // Boundary is a counter-clockwise simple loop of boundary-flagged nodes.
    double signed_area = 0.0;
    const auto& b = m.boundary();
    std::set<int> unique(b.begin(), b.end());
    EXPECT_EQ(unique.size(), b.size());
    for (std::size_t k = 0; k < b.size(); ++k) {
      const Vec2 p = m.node_position(static_cast<std::size_t>(b[k]));
      const Vec2 r = m.node_position(static_cast<std::size_t>(b[(k + 1) % b.size()]));
      signed_area += 0.5 * (p.x() * r.y() - p.y() * r.x());
      EXPECT_TRUE(m.is_boundary()[static_cast<std::size_t>(b[k])]);
    }
    EXPECT_NEAR(signed_area, m.area(), 1e-9 * m.area());
  }
}

TEST(BuildMesh, Deterministic) {
  EXPECT_EQ(dump(build_mesh(8, 20)), dump(build_mesh(8, 20)));
}

TEST(BuildMesh, Errors) {
  EXPECT_THROW(build_mesh(8, 6), MeshError);
  EXPECT_THROW(build_mesh(1, 4), MeshError);
}

TEST(BuildMesh, OuterRadius) {
  EXPECT_EQ(outer_hex_radius(8, 9), 11);
  EXPECT_GE(outer_hex_radius(4, 40) * std::sqrt(3.0) / 2.0, 40.0);
  EXPECT_LT((outer_hex_radius(4, 40) - 1) * std::sqrt(3.0) / 2.0, 40.0);
}

TEST(NodalInterpolant, AffineAndConstant) {
  const FemMesh m = build_mesh(4, 12);
  Eigen::VectorXd gauge = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m.boundary().size()),
                                                    1.0 / static_cast<double>(m.boundary().size()));
  const Eigen::VectorXd c = nodal_interpolant([](const Vec2&) { return 4.2; }, m, gauge);
  EXPECT_LE(c.cwiseAbs().maxCoeff(), 1e-14);

  auto affine = [](const Vec2& x) { return 0.3 * x.x() - 1.1 * x.y() + 2.0; };
  const Eigen::VectorXd u = nodal_interpolant(affine, m, gauge);
  double shift = 0.0;
  for (std::size_t b = 0; b < m.boundary().size(); ++b)
    shift += gauge[static_cast<Eigen::Index>(b)] * affine(m.node_position(static_cast<std::size_t>(m.boundary()[b])));
  for (std::size_t t = 0; t < m.triangles().size(); ++t) {
    const Triangle& tr = m.triangles()[t];
    Vec2 cen = Vec2::Zero();
    double val = 0.0;
    for (int a = 0; a < 3; ++a) {
      cen += m.node_position(static_cast<std::size_t>(tr.v[a])) / 3.0;
      val += u[tr.v[a]] / 3.0;
    }
    EXPECT_NEAR(val, affine(cen) - shift, 1e-12);
    EXPECT_NEAR((element_gradient(m, t, u) - Vec2(0.3, -1.1)).norm(), 0.0, 1e-12);
  }
}

TEST(NodalInterpolant, QuadraticErrorScalesWithH2) {
  const FemMesh m = build_mesh(4, 16);
  auto q = [](const Vec2& x) { return x.squaredNorm(); };
  const Eigen::VectorXd u = nodal_interpolant(q, m);
  for (std::size_t t = 0; t < m.triangles().size(); ++t) {
    const Triangle& tr = m.triangles()[t];
    Vec2 cen = Vec2::Zero();
    double val = 0.0;
    for (int a = 0; a < 3; ++a) {
      cen += m.node_position(static_cast<std::size_t>(tr.v[a])) / 3.0;
      val += u[tr.v[a]] / 3.0;
    }
    const double h = m.diameter(t);
    EXPECT_LE(std::abs(val - q(cen)), 0.5 * h * h);
  }
}

TEST(FemEnergy, ZeroAndHomogeneous) {
  const FemMesh m = build_mesh(4, 12);
  const CauchyBorn W(default_potential(0.3, 0.2));
  const auto n = static_cast<Eigen::Index>(m.node_count());
  const auto [e0, g0] = fem_energy_gradient(Eigen::VectorXd::Zero(n), m, W);
  EXPECT_EQ(e0, 0.0);
  EXPECT_EQ(g0.norm(), 0.0);
  const Vec2 F(0.21, -0.13);
  const Eigen::VectorXd uF = nodal_interpolant([&](const Vec2& x) { return F.dot(x); }, m);
  EXPECT_NEAR(fem_energy(uF, m, W), m.continuum_area() * W.value(F), 1e-12 * m.continuum_area());
}

TEST(FemEnergy, DerivativesMatchFiniteDifferences) {
  const FemMesh m = build_mesh(4, 10);
  const CauchyBorn W(default_potential(0.3, 0.2));
  const auto n = static_cast<Eigen::Index>(m.node_count());
  auto energy = [&](const Eigen::VectorXd& x) { return fem_energy(x, m, W); };
  auto grad = [&](const Eigen::VectorXd& x) { return fem_energy_gradient(x, m, W).second; };
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd u = random_vector(n), phi = random_vector(n, -1, 1), psi = random_vector(n, -1, 1);
    EXPECT_LE(test::directional_error(energy, grad(u), u, phi), 1e-6);
    std::vector<Eigen::Triplet<double>> trip;
    add_fem_hessian(u, m, W, trip);
    Eigen::SparseMatrix<double> H(n, n);
    H.setFromTriplets(trip.begin(), trip.end());
    EXPECT_LE(test::hessian_error(grad, H * psi, u, phi, psi), 1e-5);
  }
}

TEST(FemStiffness, ConstantsAndArea) {
  const FemMesh m = build_mesh(8, 20);
  const auto A = fem_stiffness(m);
  const auto n = static_cast<Eigen::Index>(m.node_count());
  EXPECT_LE((A * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::VectorXd x = nodal_interpolant([](const Vec2& p) { return p.x(); }, m);
  EXPECT_NEAR(x.dot(A * x), m.area(), 1e-9 * m.area());
}

TEST(MeshText, Header) {
  const FemMesh m = build_mesh(2, 2);
  std::istringstream is(dump(m));
  std::string first;
  std::getline(is, first);
  EXPECT_NE(first.find("acbem-mesh"), std::string::npos);
  EXPECT_NE(dump(m).find("format_version"), std::string::npos);
}

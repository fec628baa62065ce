#include "acbem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include "acbem/error.hpp"

namespace acbem {

namespace {

constexpr std::array<int, 6> kSideDirection = {2, 3, 4, 5, 0, 1};

Site corner(int r, int k) {
  const Site d = kNeighbourOffsets[wrap6(k)];
  return {d.i * r, d.j * r};
}

/// Points on side k of the hexagon ring (r, m), both corners included.
std::vector<Site> ring_side(int r, int m, int k) {
  std::vector<Site> pts;
  const Site step = kNeighbourOffsets[kSideDirection[k]];
  Site c = corner(r, k);
  for (int q = 0; q <= r / m; ++q) {
    pts.push_back(c);
    c = c + Site{step.i * m, step.j * m};
  }
  return pts;
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

void push_ccw(std::vector<std::array<Site, 3>>& out, Site a, Site b, Site c) {
  if (signed_area(position(a), position(b), position(c)) < 0.0) std::swap(b, c);
  out.push_back({a, b, c});
}

/// Triangulates the strip between two parallel chains by always closing the shorter diagonal.
void zipper(const std::vector<Site>& inner, const std::vector<Site>& outer,
            std::vector<std::array<Site, 3>>& out) {
  std::size_t a = 0, b = 0;
  const std::size_t p = inner.size() - 1, q = outer.size() - 1;
  while (a < p || b < q) {
    bool advance_inner;
    if (a == p) advance_inner = false;
    else if (b == q) advance_inner = true;
    else {
      const double d_inner = (position(inner[a + 1]) - position(outer[b])).norm();
      const double d_outer = (position(inner[a]) - position(outer[b + 1])).norm();
      advance_inner = d_inner <= d_outer + 1e-12;
    }
    if (advance_inner) {
      push_ccw(out, inner[a], inner[a + 1], outer[b]);
      ++a;
    } else {
      push_ccw(out, inner[a], outer[b + 1], outer[b]);
      ++b;
    }
  }
}

}  // namespace

double FemMesh::area() const {
  double a = 0.0;
  for (const Triangle& t : triangles_) a += t.area;
  return a;
}

double FemMesh::continuum_area() const {
  double a = 0.0;
  for (const Triangle& t : triangles_) a += t.continuum_weight * t.area;
  return a;
}

double FemMesh::diameter(std::size_t t) const {
  const auto& v = triangles_[t].v;
  double d = 0.0;
  for (int e = 0; e < 3; ++e)
    d = std::max(d, (node_position(v[e]) - node_position(v[(e + 1) % 3])).norm());
  return d;
}

int outer_hex_radius(double K, double N) {
  const int core = atomistic_hex_radius_for(K) + 2;
  const int r = static_cast<int>(std::ceil(2.0 * N / std::numbers::sqrt3 - 1e-12));
  return std::max(core, r);
}

std::vector<Ring> grading_schedule(int core_radius, int outer_radius, double K) {
  auto need = [](int m) { return 2 * m - 2; };
  std::vector<Ring> rings{{core_radius, 1}};
  int s = core_radius, m = 1;
  while (s < outer_radius) {
    const int next = s + m;
    if ((s / m) % 2 == 1 && 2 * m <= next / K && outer_radius - next >= need(2 * m)) {
      m *= 2;
    } else if (outer_radius - next >= need(m)) {
      // keep the spacing
    } else {
      m /= 2;
    }
    s = next;
    rings.push_back({s, m});
  }
  if (rings.back().spacing != 1 || rings.back().radius != outer_radius)
    throw MeshError("grading_schedule: schedule does not close at the outer boundary");
  return rings;
}

FemMesh build_mesh(double K, double N) {
  if (!(K >= 2.0)) throw MeshError("build_mesh: K must be at least 2");
  if (!(N >= K)) throw MeshError("build_mesh: grading infeasible, N must be at least K");

  const int r_a = atomistic_hex_radius_for(K);
  const int core = r_a + 2;
  const int outer = outer_hex_radius(K, N);

  std::vector<std::array<Site, 3>> tris;
  for (const LatticeTriangle& t : canonical_triangles(core)) tris.push_back(t.v);

  const std::vector<Ring> rings = grading_schedule(core, outer, K);
  for (std::size_t b = 0; b + 1 < rings.size(); ++b)
    for (int k = 0; k < 6; ++k)
      zipper(ring_side(rings[b].radius, rings[b].spacing, k),
             ring_side(rings[b + 1].radius, rings[b + 1].spacing, k), tris);

  std::vector<Site> node_sites;
  node_sites.reserve(3 * tris.size());
  for (const auto& t : tris)
    for (const Site& s : t) node_sites.push_back(s);

  FemMesh mesh;
  mesh.K_ = K;
  mesh.N_ = N;
  mesh.core_radius_ = core;
  mesh.outer_radius_ = outer;
  mesh.rings_ = rings;
  mesh.nodes_ = SiteSet(std::move(node_sites));
  mesh.decomp_ = decompose_regions(K, mesh.nodes_);

  std::vector<std::array<int, 3>> idx;
  idx.reserve(tris.size());
  for (const auto& t : tris)
    idx.push_back({static_cast<int>(*mesh.nodes_.find(t[0])), static_cast<int>(*mesh.nodes_.find(t[1])),
                   static_cast<int>(*mesh.nodes_.find(t[2]))});
  for (const Site& s : hex_ring(outer, 1)) mesh.boundary_.push_back(static_cast<int>(*mesh.nodes_.find(s)));
  mesh.finalise(std::move(idx));
  return mesh;
}

FemMesh mesh_from_parts(double K, double N, const RegionDecomposition& decomp,
                        std::vector<Site> nodes, std::vector<std::array<int, 3>> tris,
                        std::vector<int> boundary) {
  FemMesh mesh;
  mesh.K_ = K;
  mesh.N_ = N;
  mesh.decomp_ = decomp;
  const std::size_t n = nodes.size();
  mesh.nodes_ = SiteSet(nodes);
  if (mesh.nodes_.size() != n) throw MeshError("mesh_from_parts: duplicate nodes");
  // Re-index into the sorted node order.
  std::vector<int> perm(n);
  for (std::size_t k = 0; k < n; ++k) perm[k] = static_cast<int>(*mesh.nodes_.find(nodes[k]));
  for (auto& t : tris)
    for (int& v : t) {
      if (v < 0 || static_cast<std::size_t>(v) >= n) throw MeshError("mesh_from_parts: bad triangle index");
      v = perm[v];
    }
  for (int& v : boundary) v = perm.at(v);
  mesh.boundary_ = std::move(boundary);
  int rmax = 0;
  for (const Site& s : mesh.nodes_) rmax = std::max(rmax, hex_radius(s));
  mesh.outer_radius_ = rmax;
  mesh.core_radius_ = rmax;
  mesh.finalise(std::move(tris));
  return mesh;
}

void FemMesh::finalise(std::vector<std::array<int, 3>> tris) {
  triangles_.clear();
  triangles_.reserve(tris.size());
  for (const auto& v : tris) {
    Triangle t;
    t.v = v;
    const Vec2 p0 = node_position(v[0]), p1 = node_position(v[1]), p2 = node_position(v[2]);
    t.area = signed_area(p0, p1, p2);
    if (!(t.area > 0.0)) throw MeshError("FemMesh: degenerate or clockwise triangle");
    const std::array<Vec2, 3> p = {p0, p1, p2};
    for (int a = 0; a < 3; ++a) {
      const Vec2 e = p[(a + 2) % 3] - p[(a + 1) % 3];
      t.grad[a] = Vec2(-e.y(), e.x()) / (2.0 * t.area);
    }
    t.canonical = std::abs(t.area - 0.25 * std::numbers::sqrt3) < 1e-12;
    bool touches_ai = false;
    int n_cont = 0;
    for (int a = 0; a < 3; ++a) {
      const Region r = decomp_.region(nodes_[v[a]]);
      if (r == Region::Continuum) ++n_cont;
      else touches_ai = true;
    }
    if (touches_ai && !t.canonical)
      throw MeshError("FemMesh: a triangle touching A ∪ I is not a canonical lattice triangle");
    if (t.canonical) {
      const LatticeTriangle lt{{nodes_[v[0]], nodes_[v[1]], nodes_[v[2]]}};
      t.cls = triangle_class(lt, decomp_);
    } else {
      t.cls = Region::Continuum;
    }
    // The Voronoi cell of each vertex of a canonical triangle covers exactly one third of it.
    t.continuum_weight = t.canonical ? n_cont / 3.0 : 1.0;
    triangles_.push_back(t);
  }
  is_boundary_.assign(nodes_.size(), false);
  for (int b : boundary_) is_boundary_[b] = true;
}

MeshQuality mesh_quality(const FemMesh& mesh) {
  MeshQuality q;
  q.min_h = std::numeric_limits<double>::infinity();
  std::set<std::pair<int, int>> edges;
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const double d = mesh.diameter(t);
    q.max_h = std::max(q.max_h, d);
    q.min_h = std::min(q.min_h, d);
    q.max_shape = std::max(q.max_shape, d * d / mesh.triangles()[t].area);
    const auto& v = mesh.triangles()[t].v;
    for (int e = 0; e < 3; ++e) edges.insert(std::minmax(v[e], v[(e + 1) % 3]));
  }
  q.euler = static_cast<long>(mesh.node_count()) - static_cast<long>(edges.size()) +
            static_cast<long>(mesh.triangles().size());
  const auto& b = mesh.boundary();
  q.min_panel = std::numeric_limits<double>::infinity();
  q.boundary_aligned = true;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const int p = b[k], r = b[(k + 1) % b.size()];
    const double len = (mesh.node_position(p) - mesh.node_position(r)).norm();
    q.min_panel = std::min(q.min_panel, len);
    q.max_panel = std::max(q.max_panel, len);
    const Site d = mesh.nodes()[r] - mesh.nodes()[p];
    if (std::find(kNeighbourOffsets.begin(), kNeighbourOffsets.end(), d) == kNeighbourOffsets.end())
      q.boundary_aligned = false;
    if (!edges.contains(std::minmax(p, r))) q.boundary_aligned = false;
  }
  q.boundary_ratio = q.max_panel / q.min_panel;
  return q;
}

Eigen::VectorXd nodal_interpolant(const std::function<double(const Vec2&)>& u, const FemMesh& mesh,
                                  const Eigen::VectorXd& gauge) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t k = 0; k < mesh.node_count(); ++k) v[k] = u(mesh.node_position(k));
  if (gauge.size() > 0) {
    if (gauge.size() != static_cast<Eigen::Index>(mesh.boundary().size()))
      throw DomainError("nodal_interpolant: gauge weights do not match the boundary");
    double f0 = 0.0;
    for (std::size_t b = 0; b < mesh.boundary().size(); ++b) f0 += gauge[b] * v[mesh.boundary()[b]];
    v.array() -= f0;
  }
  return v;
}

Vec2 element_gradient(const FemMesh& mesh, std::size_t t, const Eigen::VectorXd& u) {
  const Triangle& tr = mesh.triangles()[t];
  return u[tr.v[0]] * tr.grad[0] + u[tr.v[1]] * tr.grad[1] + u[tr.v[2]] * tr.grad[2];
}

double fem_energy(const Eigen::VectorXd& u, const FemMesh& mesh, const CauchyBorn& W) {
  double e = 0.0;
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const Triangle& tr = mesh.triangles()[t];
    if (tr.continuum_weight == 0.0) continue;
    e += tr.continuum_weight * tr.area * W.value(element_gradient(mesh, t, u));
  }
  return e;
}

std::pair<double, Eigen::VectorXd> fem_energy_gradient(const Eigen::VectorXd& u, const FemMesh& mesh,
                                                       const CauchyBorn& W) {
  double e = 0.0;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(u.size());
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const Triangle& tr = mesh.triangles()[t];
    if (tr.continuum_weight == 0.0) continue;
    const double w = tr.continuum_weight * tr.area;
    const Vec2 F = element_gradient(mesh, t, u);
    e += w * W.value(F);
    const Vec2 dW = W.gradient(F);
    for (int a = 0; a < 3; ++a) g[tr.v[a]] += w * dW.dot(tr.grad[a]);
  }
  return {e, g};
}

void add_fem_hessian(const Eigen::VectorXd& u, const FemMesh& mesh, const CauchyBorn& W,
                     std::vector<Eigen::Triplet<double>>& trip) {
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const Triangle& tr = mesh.triangles()[t];
    if (tr.continuum_weight == 0.0) continue;
    const double w = tr.continuum_weight * tr.area;
    const Eigen::Matrix2d h = W.hessian(element_gradient(mesh, t, u));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(tr.v[a], tr.v[b], w * tr.grad[a].dot(h * tr.grad[b]));
  }
}

Eigen::SparseMatrix<double> fem_stiffness(const FemMesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.triangles().size());
  for (const Triangle& tr : mesh.triangles())
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(tr.v[a], tr.v[b], tr.area * tr.grad[a].dot(tr.grad[b]));
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

void write_mesh(std::ostream& os, const FemMesh& mesh, const Eigen::VectorXd* values) {
  os.precision(17);
  os << "acbem-mesh\nformat_version 1\n";
  os << "K " << mesh.K() << "\nN " << mesh.N() << "\n";
  os << "nodes " << mesh.node_count() << (values ? " value" : "") << "\n";
  for (std::size_t k = 0; k < mesh.node_count(); ++k) {
    const Site s = mesh.nodes()[k];
    const Vec2 x = position(s);
    os << s.i << ' ' << s.j << ' ' << x.x() << ' ' << x.y();
    if (values) os << ' ' << (*values)[static_cast<Eigen::Index>(k)];
    os << '\n';
  }
  os << "triangles " << mesh.triangles().size() << "\n";
  for (const Triangle& t : mesh.triangles())
    os << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << to_string(t.cls) << ' '
       << t.continuum_weight << '\n';
  os << "boundary " << mesh.boundary().size() << "\n";
  for (int b : mesh.boundary()) os << b << '\n';
}

void write_mesh(const std::string& path, const FemMesh& mesh, const Eigen::VectorXd* values) {
  std::ofstream os(path);
  if (!os) throw Error("write_mesh: cannot open " + path);
  write_mesh(os, mesh, values);
}

}  // namespace acbem

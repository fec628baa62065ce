#include "acbem/coupling.hpp"

#include <cmath>
#include <string>

#include "acbem/error.hpp"

namespace acbem {

ReconstructionStencil ReconstructionStencil::build(Site site, const RegionDecomposition& decomp,
                                                   double lambda_c) {
  if (decomp.region(site) != Region::Interface)
    throw DomainError("reconstruct: (" + std::to_string(site.i) + "," + std::to_string(site.j) +
                      ") is not an interface site");
  ReconstructionStencil st;
  st.site = site;
  for (int j = 0; j < 6; ++j)
    st.lambda[j] = decomp.region(site + kNeighbourOffsets[j]) == Region::Continuum ? lambda_c : 1.0;
  return st;
}

Vec6 ReconstructionStencil::apply(const Vec6& du) const {
  Vec6 r;
  for (int j = 0; j < 6; ++j)
    r[j] = (1.0 - lambda[j]) * (du[wrap6(j - 1)] + du[wrap6(j + 1)]) + lambda[j] * du[j];
  return r;
}

Mat6 ReconstructionStencil::matrix() const {
  Mat6 m = Mat6::Zero();
  for (int j = 0; j < 6; ++j) {
    m(j, j) = lambda[j];
    m(j, wrap6(j - 1)) += 1.0 - lambda[j];
    m(j, wrap6(j + 1)) += 1.0 - lambda[j];
  }
  return m;
}

Vec6 reconstruct(const ReconstructionStencil& st, const Vec6& du) { return st.apply(du); }

namespace {

std::array<int, 7> resolve(const SiteSet& nodes, Site s) {
  std::array<int, 7> st;
  const auto c = nodes.find(s);
  if (!c) throw MeshError("AcEnergy: mesh does not contain site (" + std::to_string(s.i) + "," +
                          std::to_string(s.j) + ")");
  st[0] = static_cast<int>(*c);
  for (int j = 0; j < 6; ++j) {
    const auto nb = nodes.find(s + kNeighbourOffsets[j]);
    if (!nb)
      throw MeshError("AcEnergy: mesh and decomposition mismatch near (" + std::to_string(s.i) +
                      "," + std::to_string(s.j) + ")");
    st[j + 1] = static_cast<int>(*nb);
  }
  return st;
}

Vec6 diffs(const Eigen::VectorXd& u, const std::array<int, 7>& st) {
  Vec6 g;
  for (int j = 0; j < 6; ++j) g[j] = u[st[j + 1]] - u[st[0]];
  return g;
}

/// g += Bᵀ d for the bond-difference map B of a stencil.
void scatter(Eigen::VectorXd& g, const std::array<int, 7>& st, const Vec6& d) {
  for (int j = 0; j < 6; ++j) {
    g[st[j + 1]] += d[j];
    g[st[0]] -= d[j];
  }
}

void scatter_hessian(const std::array<int, 7>& st, const Mat6& h,
                     std::vector<Eigen::Triplet<double>>& trip) {
  const Vec6 rows = h.rowwise().sum();
  const Vec6 cols = h.colwise().sum().transpose();
  trip.emplace_back(st[0], st[0], h.sum());
  for (int a = 0; a < 6; ++a) {
    trip.emplace_back(st[a + 1], st[0], -rows[a]);
    trip.emplace_back(st[0], st[a + 1], -cols[a]);
    for (int b = 0; b < 6; ++b) trip.emplace_back(st[a + 1], st[b + 1], h(a, b));
  }
}

}  // namespace

AcEnergy::AcEnergy(std::shared_ptr<const SitePotential> v, std::shared_ptr<const FemMesh> mesh,
                   double lambda_c)
    : v_(std::move(v)), mesh_(std::move(mesh)), W_(v_) {
  const RegionDecomposition& d = mesh_->decomposition();
  for (const Site& s : d.atomistic()) atom_st_.push_back(resolve(mesh_->nodes(), s));
  for (const Site& s : d.interface()) {
    iface_st_.push_back(resolve(mesh_->nodes(), s));
    stencils_.push_back(ReconstructionStencil::build(s, d, lambda_c));
    recon_.push_back(stencils_.back().matrix());
  }
}

std::array<double, 3> AcEnergy::energy_parts(const Eigen::VectorXd& u) const {
  std::array<double, 3> e{0.0, 0.0, 0.0};
  for (const auto& st : atom_st_) e[0] += v_->value(diffs(u, st));
  for (std::size_t k = 0; k < iface_st_.size(); ++k) e[1] += v_->value(recon_[k] * diffs(u, iface_st_[k]));
  e[2] = fem_energy(u, *mesh_, W_);
  return e;
}

double AcEnergy::energy(const Eigen::VectorXd& u) const {
  const auto e = energy_parts(u);
  return e[0] + e[1] + e[2];
}

Eigen::VectorXd AcEnergy::gradient(const Eigen::VectorXd& u) const {
  Eigen::VectorXd g = fem_energy_gradient(u, *mesh_, W_).second;
  for (const auto& st : atom_st_) scatter(g, st, v_->gradient(diffs(u, st)));
  for (std::size_t k = 0; k < iface_st_.size(); ++k) {
    const Mat6& R = recon_[k];
    scatter(g, iface_st_[k], R.transpose() * v_->gradient(R * diffs(u, iface_st_[k])));
  }
  return g;
}

void AcEnergy::add_hessian_triplets(const Eigen::VectorXd& u,
                                    std::vector<Eigen::Triplet<double>>& trip) const {
  for (const auto& st : atom_st_) scatter_hessian(st, v_->hessian(diffs(u, st)), trip);
  for (std::size_t k = 0; k < iface_st_.size(); ++k) {
    const Mat6& R = recon_[k];
    scatter_hessian(iface_st_[k], R.transpose() * v_->hessian(R * diffs(u, iface_st_[k])) * R, trip);
  }
  add_fem_hessian(u, *mesh_, W_, trip);
}

Eigen::SparseMatrix<double> AcEnergy::hessian(const Eigen::VectorXd& u) const {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(49 * (atom_st_.size() + iface_st_.size()) + 9 * mesh_->triangles().size());
  add_hessian_triplets(u, trip);
  const auto n = static_cast<Eigen::Index>(dofs());
  Eigen::SparseMatrix<double> H(n, n);
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

Eigen::VectorXd AcEnergy::hessian_apply(const Eigen::VectorXd& u, const Eigen::VectorXd& phi) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
  for (const auto& st : atom_st_) scatter(out, st, v_->hessian(diffs(u, st)) * diffs(phi, st));
  for (std::size_t k = 0; k < iface_st_.size(); ++k) {
    const Mat6& R = recon_[k];
    scatter(out, iface_st_[k],
            R.transpose() * (v_->hessian(R * diffs(u, iface_st_[k])) * (R * diffs(phi, iface_st_[k]))));
  }
  for (std::size_t t = 0; t < mesh_->triangles().size(); ++t) {
    const Triangle& tr = mesh_->triangles()[t];
    if (tr.continuum_weight == 0.0) continue;
    const Vec2 hp = W_.hessian(element_gradient(*mesh_, t, u)) * element_gradient(*mesh_, t, phi);
    for (int a = 0; a < 3; ++a) out[tr.v[a]] += tr.continuum_weight * tr.area * hp.dot(tr.grad[a]);
  }
  return out;
}

double energy_ac(const AcEnergy& e, const Eigen::VectorXd& u) { return e.energy(u); }

Eigen::VectorXd homogeneous_displacement(const FemMesh& mesh, const Vec2& F) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t k = 0; k < mesh.node_count(); ++k) u[k] = F.dot(mesh.node_position(k));
  return u;
}

PatchTestResult patch_test(const Vec2& F, const AcEnergy& e) {
  PatchTestResult r;
  const Vec6 Fa = direction_matrix() * F;
  const double vF = e.potential().value(Fa);
  for (const auto& st : e.interface_stencils())
    r.energy_residual = std::max(r.energy_residual, std::abs(e.potential().value(st.apply(Fa)) - vF));
  const Eigen::VectorXd g = e.gradient(homogeneous_displacement(e.mesh(), F));
  for (std::size_t k = 0; k < e.mesh().node_count(); ++k)
    if (!e.mesh().is_boundary()[k]) r.force_residual = std::max(r.force_residual, std::abs(g[k]));
  return r;
}

}  // namespace acbem

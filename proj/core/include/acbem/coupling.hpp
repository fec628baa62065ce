#pragma once

// G23 geometry-reconstruction coupling and the assembled a/c energy E^ac_h.

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "acbem/atomistic.hpp"
#include "acbem/lattice.hpp"
#include "acbem/mesh.hpp"
#include "acbem/potential.hpp"

namespace acbem {

inline constexpr double kG23Lambda = 2.0 / 3.0;

/// Reconstruction coefficients λ_{ℓ,j} of one interface site.
struct ReconstructionStencil {
  Site site;
  std::array<double, 6> lambda;

  /// λ_{ℓ,j} = lambda_c when ℓ + a_j ∈ C, else 1. Throws DomainError if ℓ ∉ I.
  static ReconstructionStencil build(Site site, const RegionDecomposition& decomp,
                                     double lambda_c = kG23Lambda);

  /// (R Du)_j = (1−λ_j) D_{j−1} + λ_j D_j + (1−λ_j) D_{j+1}.
  Vec6 apply(const Vec6& du) const;
  Mat6 matrix() const;
};

Vec6 reconstruct(const ReconstructionStencil& st, const Vec6& du);

/// E^ac_h(u) = Σ_A V(Du) + Σ_I V(R_ℓ Du) + ∫_{Ω^c_h} W(∇u) on the nodes of a FemMesh.
class AcEnergy {
 public:
  AcEnergy(std::shared_ptr<const SitePotential> v, std::shared_ptr<const FemMesh> mesh,
           double lambda_c = kG23Lambda);

  const FemMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const FemMesh> mesh_ptr() const { return mesh_; }
  const SitePotential& potential() const { return *v_; }
  std::shared_ptr<const SitePotential> potential_ptr() const { return v_; }
  const CauchyBorn& cauchy_born() const { return W_; }
  std::size_t dofs() const { return mesh_->node_count(); }
  const std::vector<ReconstructionStencil>& interface_stencils() const { return stencils_; }

  double energy(const Eigen::VectorXd& u) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
  Eigen::SparseMatrix<double> hessian(const Eigen::VectorXd& u) const;
  Eigen::VectorXd hessian_apply(const Eigen::VectorXd& u, const Eigen::VectorXd& phi) const;

  /// The three contributions separately: atomistic, interface, continuum.
  std::array<double, 3> energy_parts(const Eigen::VectorXd& u) const;

  void add_hessian_triplets(const Eigen::VectorXd& u, std::vector<Eigen::Triplet<double>>& trip) const;

 private:
  std::shared_ptr<const SitePotential> v_;
  std::shared_ptr<const FemMesh> mesh_;
  CauchyBorn W_;
  std::vector<std::array<int, 7>> atom_st_;
  std::vector<std::array<int, 7>> iface_st_;
  std::vector<ReconstructionStencil> stencils_;
  std::vector<Mat6> recon_;
};

double energy_ac(const AcEnergy& e, const Eigen::VectorXd& u);

struct PatchTestResult {
  double energy_residual = 0.0;
  double force_residual = 0.0;
};

/// Energy and force consistency at u_F: max_I |V(R(F·a)) − V(F·a)| and the ∞-norm of the
/// assembled gradient of E^ac_h over nodes off Γ_h.
PatchTestResult patch_test(const Vec2& F, const AcEnergy& e);

/// Homogeneous displacement u_F(x) = F·x at the mesh nodes.
Eigen::VectorXd homogeneous_displacement(const FemMesh& mesh, const Vec2& F);

}  // namespace acbem

#pragma once

// Fully atomistic model: site energy sums, the defect potential and the
// Newton reference solver whose solution plays the role of the exact u^a.

#include <array>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "acbem/lattice.hpp"
#include "acbem/potential.hpp"

namespace acbem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Linear external potential f(u) = Σ σ_i (u(ℓ_i) − u(ℓ_0)).
struct DefectPotential {
  std::vector<Site> sites;
  std::vector<double> weights;
  Site anchor{0, 0};
  double core_radius = 1.0;

  double value(const SiteSet& domain, const Eigen::VectorXd& u) const;
  /// g += scale · ∂f/∂u.
  void add_gradient(const SiteSet& domain, Eigen::VectorXd& g, double scale = 1.0) const;
  /// Net force moment Σ_ℓ ∂f/∂u(ℓ)·ℓ, the dipole it induces in the far field.
  Vec2 dipole_moment() const;
};

/// Antisymmetric force dipole f(u) = α[(u(a_1) − u(0)) − (u(a_4) − u(0))].
DefectPotential default_defect(double alpha);

/// E(u) = Σ_{ℓ ∈ energy_sites} V(Du(ℓ)) for a field stored on `domain`.
///
/// The stencil (centre plus six neighbours) of every energy site is resolved at
/// construction; a missing neighbour throws MissingNeighbourError.
class AtomisticEnergy {
 public:
  AtomisticEnergy(std::shared_ptr<const SitePotential> v, const SiteSet& domain,
                  std::span<const Site> energy_sites);

  std::size_t dofs() const { return n_dofs_; }

  double energy(const Eigen::VectorXd& u) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
  SparseMatrix hessian(const Eigen::VectorXd& u) const;
  /// Hessian in reduced coordinates: dof k maps to map[k], entries with map[k] < 0 are dropped.
  SparseMatrix hessian(const Eigen::VectorXd& u, std::span<const int> map, int n_reduced) const;
  Eigen::VectorXd hessian_apply(const Eigen::VectorXd& u, const Eigen::VectorXd& phi) const;

 private:
  Vec6 differences(const Eigen::VectorXd& u, const std::array<int, 7>& st) const;

  std::shared_ptr<const SitePotential> v_;
  std::size_t n_dofs_;
  std::vector<std::array<int, 7>> stencils_;
};

double energy_atomistic(const SitePotential& v, const SiteSet& domain, const Eigen::VectorXd& u,
                        std::span<const Site> energy_sites);

enum class FarFieldClamp { Zero, DipolePredictor };

struct ReferenceOptions {
  double R_ref = 64.0;
  double tol = 1e-10;
  int max_iterations = 50;
  FarFieldClamp clamp = FarFieldClamp::DipolePredictor;
  /// Outer updates of the far-field dipole (only for DipolePredictor).
  int predictor_sweeps = 4;
};

struct ReferenceSolution {
  SiteSet domain;
  Eigen::VectorXd u;
  std::vector<bool> free;
  double R_ref = 0.0;
  double mu = 0.0;
  Vec2 dipole = Vec2::Zero();
  FarFieldClamp clamp = FarFieldClamp::DipolePredictor;
  int newton_iterations = 0;
  double gradient_norm = 0.0;

  /// Stored value inside the domain, far-field predictor outside.
  double value_at(Site s) const;
};

/// Far-field displacement p·x / (2πμ|x|²) of a force dipole p.
double dipole_field(const Vec2& p, double mu, const Vec2& x);

/// Minimises E^a − f over displacements clamped outside R_ref.
/// Throws NonConvergenceError or IndefiniteHessianError.
ReferenceSolution solve_reference(std::shared_ptr<const SitePotential> v,
                                  const DefectPotential& defect, const ReferenceOptions& opts);

struct DecayFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  std::size_t samples = 0;
};

/// Least-squares slope of log|Du(ℓ)| against log|ℓ| over r_min ≤ |ℓ| ≤ r_max.
DecayFit fit_decay(const ReferenceSolution& ref, double r_min, double r_max);

/// Smallest generalised eigenvalue of the clamped Hessian at the solution
/// against the Dirichlet P1 stiffness, by inverse iteration.
double atomistic_stability(std::shared_ptr<const SitePotential> v, const ReferenceSolution& ref,
                           int max_iterations = 300);

/// P1 stiffness of the canonical triangulation on `domain`: (1/√3) Σ_bonds (Du)².
SparseMatrix lattice_stiffness(const SiteSet& domain);

}  // namespace acbem

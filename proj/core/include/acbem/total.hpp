#pragma once

// E^tot_h = E^ac_h + (μ/2)⟨g_h^{-1} γu, γu⟩ and its minimisation over the gauged space.

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "acbem/atomistic.hpp"
#include "acbem/bem.hpp"
#include "acbem/coupling.hpp"
#include "acbem/mesh.hpp"

namespace acbem {

class TotalProblem {
 public:
  /// Throws DomainError if the defect core radius exceeds K.
  TotalProblem(std::shared_ptr<const SitePotential> v, std::shared_ptr<const FemMesh> mesh,
               DefectPotential defect);

  const FemMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const FemMesh> mesh_ptr() const { return mesh_; }
  const AcEnergy& ac() const { return ac_; }
  const BemOperators& bem() const { return bem_; }
  const DefectPotential& defect() const { return defect_; }
  double mu() const { return mu_; }
  std::size_t dofs() const { return mesh_->node_count(); }

  Eigen::VectorXd trace(const Eigen::VectorXd& u) const;
  /// Gauge functional c over all nodes: c·u = ⟨γu, w_eq⟩, zero weights off Γ_h.
  const Eigen::VectorXd& gauge_vector() const { return gauge_; }
  double gauge_value(const Eigen::VectorXd& u) const { return gauge_.dot(u); }
  /// u − (c·u)1: the representative of u with a star-projected trace.
  Eigen::VectorXd gauged(const Eigen::VectorXd& u) const;

  /// (μ/2) γuᵀ S γu.
  double boundary_energy(const Eigen::VectorXd& u) const;

 private:
  std::shared_ptr<const FemMesh> mesh_;
  AcEnergy ac_;
  BemOperators bem_;
  DefectPotential defect_;
  double mu_;
  Eigen::VectorXd gauge_;
};

inline constexpr double kGaugeTolerance = 1e-8;

/// E^ac_h(u) + (μ/2) γuᵀ S γu. Throw GaugeError if |c·u| > 1e-8.
double total_energy(const Eigen::VectorXd& u, const TotalProblem& prob);
Eigen::VectorXd total_gradient(const Eigen::VectorXd& u, const TotalProblem& prob);

/// E^tot_h(u) − f(u) and its gradient.
double total_objective(const Eigen::VectorXd& u, const TotalProblem& prob);
Eigen::VectorXd total_objective_gradient(const Eigen::VectorXd& u, const TotalProblem& prob);
/// Sparse Hessian of E^tot_h; the Steklov block is dense on the boundary nodes.
Eigen::SparseMatrix<double> total_hessian(const Eigen::VectorXd& u, const TotalProblem& prob);

/// Gram matrix of ‖·‖_E: ∫_{Ω_h}∇φ_a·∇φ_b plus the rescaled H^{1/2} Gram on the boundary nodes.
Eigen::SparseMatrix<double> energy_norm_gram(const FemMesh& mesh, const BoundaryMesh& bm);

struct SolverOptions {
  double tol = 1e-10;
  int max_iterations = 50;
  double armijo_c1 = 1e-4;
  int max_backtracks = 40;
};

struct SolveResult {
  Eigen::VectorXd u;
  int iterations = 0;
  double gradient_norm = 0.0;
  /// Dual ‖·‖_E norm of the final gradient on the gauged space.
  double dual_residual = 0.0;
  /// E^tot_h − f after each accepted iterate (first entry: initial guess).
  std::vector<double> objective;
  std::vector<double> step_lengths;
};

/// Newton with Armijo backtracking on {c·u = 0}. Throws NonConvergenceError or
/// IndefiniteHessianError (factorisation inertia of H + σccᵀ).
SolveResult minimize_total(const TotalProblem& prob, const SolverOptions& opts = {});

struct Certificate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Smallest generalised eigenvalue of δ²E^tot_h(0) against the ‖·‖_E Gram on the gauged space,
/// by inverse iteration. For an indefinite Hessian the estimate is the eigenvalue closest to 0.
Certificate stability_certificate(const TotalProblem& prob, int max_iterations = 500, double rtol = 1e-10);

/// Dense reference: the same generalised eigenvalue from a full eigen-decomposition.
double stability_certificate_dense(const TotalProblem& prob);

}  // namespace acbem

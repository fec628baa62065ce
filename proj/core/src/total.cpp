#include "acbem/total.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include "acbem/error.hpp"

namespace acbem {

namespace {

using Sparse = Eigen::SparseMatrix<double>;

void add_boundary_block(const FemMesh& mesh, const Eigen::MatrixXd& B, double scale,
                        std::vector<Eigen::Triplet<double>>& trip) {
  const auto& bd = mesh.boundary();
  for (std::size_t a = 0; a < bd.size(); ++a)
    for (std::size_t b = 0; b < bd.size(); ++b)
      if (B(a, b) != 0.0) trip.emplace_back(bd[a], bd[b], scale * B(a, b));
}

Sparse from_triplets(std::size_t n, const std::vector<Eigen::Triplet<double>>& trip) {
  Sparse A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

/// H + σccᵀ with σ scaled to the Hessian diagonal.
Sparse penalised(const Sparse& H, const Eigen::VectorXd& c) {
  const double sigma = std::max(1e-12, H.diagonal().cwiseAbs().maxCoeff()) / c.squaredNorm();
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index a = 0; a < c.size(); ++a) {
    if (c[a] == 0.0) continue;
    for (Eigen::Index b = 0; b < c.size(); ++b)
      if (c[b] != 0.0) trip.emplace_back(a, b, sigma * c[a] * c[b]);
  }
  Sparse P(H.rows(), H.cols());
  P.setFromTriplets(trip.begin(), trip.end());
  return H + P;
}

bool positive_inertia(const Eigen::SimplicialLDLT<Sparse>& ldlt) {
  return ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0;
}

/// Gradient restricted to {c·x = 0}: Πᵀg with Π = I − 1cᵀ.
Eigen::VectorXd tangential(const Eigen::VectorXd& g, const Eigen::VectorXd& c) { return g - c * g.sum(); }

}  // namespace

TotalProblem::TotalProblem(std::shared_ptr<const SitePotential> v, std::shared_ptr<const FemMesh> mesh,
                           DefectPotential defect)
    : mesh_(std::move(mesh)),
      ac_(v, mesh_),
      bem_(BoundaryMesh::from_fem(*mesh_)),
      defect_(std::move(defect)),
      mu_(shear_modulus(*v)) {
  if (defect_.core_radius > mesh_->K())
    throw DomainError("TotalProblem: defect core radius " + std::to_string(defect_.core_radius) +
                      " exceeds K = " + std::to_string(mesh_->K()));
  gauge_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_->node_count()));
  const auto& bd = mesh_->boundary();
  for (std::size_t b = 0; b < bd.size(); ++b) gauge_[bd[b]] = bem_.gauge()[b];
}

Eigen::VectorXd TotalProblem::trace(const Eigen::VectorXd& u) const {
  const auto& bd = mesh_->boundary();
  Eigen::VectorXd t(static_cast<Eigen::Index>(bd.size()));
  for (std::size_t b = 0; b < bd.size(); ++b) t[b] = u[bd[b]];
  return t;
}

Eigen::VectorXd TotalProblem::gauged(const Eigen::VectorXd& u) const {
  return u.array() - gauge_value(u);
}

double TotalProblem::boundary_energy(const Eigen::VectorXd& u) const {
  const Eigen::VectorXd t = trace(u);
  return 0.5 * mu_ * t.dot(bem_.steklov_form() * t);
}

double total_energy(const Eigen::VectorXd& u, const TotalProblem& prob) {
  const double g = prob.gauge_value(u);
  if (std::abs(g) > kGaugeTolerance)
    throw GaugeError("total_energy: trace not gauged, <trace, w_eq> = " + std::to_string(g));
  return prob.ac().energy(u) + prob.boundary_energy(u);
}

Eigen::VectorXd total_gradient(const Eigen::VectorXd& u, const TotalProblem& prob) {
  Eigen::VectorXd g = prob.ac().gradient(u);
  const Eigen::VectorXd sg = prob.mu() * (prob.bem().steklov_form() * prob.trace(u));
  const auto& bd = prob.mesh().boundary();
  for (std::size_t b = 0; b < bd.size(); ++b) g[bd[b]] += sg[b];
  return g;
}

double total_objective(const Eigen::VectorXd& u, const TotalProblem& prob) {
  return total_energy(u, prob) - prob.defect().value(prob.mesh().nodes(), u);
}

Eigen::VectorXd total_objective_gradient(const Eigen::VectorXd& u, const TotalProblem& prob) {
  Eigen::VectorXd g = total_gradient(u, prob);
  prob.defect().add_gradient(prob.mesh().nodes(), g, -1.0);
  return g;
}

Sparse total_hessian(const Eigen::VectorXd& u, const TotalProblem& prob) {
  std::vector<Eigen::Triplet<double>> trip;
  prob.ac().add_hessian_triplets(u, trip);
  add_boundary_block(prob.mesh(), prob.bem().steklov_form(), prob.mu(), trip);
  return from_triplets(prob.dofs(), trip);
}

Sparse energy_norm_gram(const FemMesh& mesh, const BoundaryMesh& bm) {
  std::vector<Eigen::Triplet<double>> trip;
  add_boundary_block(mesh, half_norm_gram(bm), 1.0, trip);
  return fem_stiffness(mesh) + from_triplets(mesh.node_count(), trip);
}

SolveResult minimize_total(const TotalProblem& prob, const SolverOptions& opts) {
  if (!(opts.tol > 0.0)) throw DomainError("minimize_total: tol must be positive");
  const Eigen::VectorXd& c = prob.gauge_vector();
  SolveResult res;
  res.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prob.dofs()));
  double obj = total_objective(res.u, prob);
  res.objective.push_back(obj);

  Eigen::SimplicialLDLT<Sparse> ldlt;
  bool analysed = false;
  for (int it = 0;; ++it) {
    const Eigen::VectorXd g = tangential(total_objective_gradient(res.u, prob), c);
    res.gradient_norm = g.norm();
    res.iterations = it;
    const Sparse A = penalised(total_hessian(res.u, prob), c);
    if (!analysed) {
      ldlt.analyzePattern(A);
      analysed = true;
    }
    ldlt.factorize(A);
    if (!positive_inertia(ldlt))
      throw IndefiniteHessianError("minimize_total: Hessian is not positive definite on the gauged space (iteration " +
                                   std::to_string(it) + ")");
    if (res.gradient_norm <= opts.tol) break;
    if (it >= opts.max_iterations)
      throw NonConvergenceError("minimize_total: gradient norm " + std::to_string(res.gradient_norm) + " after " +
                                std::to_string(it) + " Newton steps");

    Eigen::VectorXd s = ldlt.solve(-g);
    s.array() -= c.dot(s);
    const double slope = g.dot(s);
    double t = 1.0;
    double trial = obj;
    bool accepted = false;
    for (int k = 0; k <= opts.max_backtracks; ++k, t *= 0.5) {
      trial = total_objective(res.u + t * s, prob);
      if (trial <= obj + opts.armijo_c1 * t * slope + 1e-14 * std::max(1.0, std::abs(obj))) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NonConvergenceError("minimize_total: line search failed at iteration " + std::to_string(it));
    res.u = prob.gauged(res.u + t * s);
    obj = total_objective(res.u, prob);
    res.objective.push_back(obj);
    res.step_lengths.push_back(t);
  }

  const Sparse G = energy_norm_gram(prob.mesh(), prob.bem().mesh());
  Eigen::SimplicialLDLT<Sparse> gl(G);
  const Eigen::VectorXd g = tangential(total_objective_gradient(res.u, prob), c);
  const Eigen::VectorXd Gg = gl.solve(g), Gc = gl.solve(c);
  const double nu = c.dot(Gg) / c.dot(Gc);
  const Eigen::VectorXd gt = g - nu * c;
  res.dual_residual = std::sqrt(std::max(0.0, gt.dot(Gg - nu * Gc)));
  return res;
}

Certificate stability_certificate(const TotalProblem& prob, int max_iterations, double rtol) {
  const Eigen::VectorXd& c = prob.gauge_vector();
  const auto n = static_cast<Eigen::Index>(prob.dofs());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const Sparse H = total_hessian(zero, prob);
  const Sparse G = energy_norm_gram(prob.mesh(), prob.bem().mesh());
  Eigen::SimplicialLDLT<Sparse> ldlt(penalised(H, c));
  if (ldlt.info() != Eigen::Success) throw SingularSystemError("stability_certificate: factorisation failed");

  // Block inverse iteration with Rayleigh-Ritz: hexagonal symmetry pairs the low modes.
  constexpr Eigen::Index kBlock = 8;
  const Eigen::Index b = std::min<Eigen::Index>(kBlock, n - 1);
  Eigen::MatrixXd X(n, b);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index j = 0; j < b; ++j)
      X(k, j) = std::sin(1.0 + 0.7 * static_cast<double>(k) * static_cast<double>(j + 1)) + (j == 0 ? 0.3 : 0.0);

  Certificate cert;
  double prev = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::MatrixXd Y(n, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const Eigen::VectorXd Gx = G * X.col(j);
      Eigen::VectorXd y = ldlt.solve(Gx - c * Gx.sum());
      y.array() -= c.dot(y);
      Y.col(j) = y / y.norm();
    }
    const Eigen::MatrixXd Bm = Y.transpose() * (G * Y);
    const Eigen::MatrixXd Am = Y.transpose() * (H * Y);
    const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> rr(Am, Bm);
    if (rr.info() != Eigen::Success) throw SingularSystemError("stability_certificate: Rayleigh-Ritz failed");
    X = Y * rr.eigenvectors();
    // Ritz value closest to zero, the one inverse iteration resolves.
    Eigen::Index best = 0;
    rr.eigenvalues().cwiseAbs().minCoeff(&best);
    cert.value = rr.eigenvalues()[best];
    cert.iterations = it;
    if (it > 1 && std::abs(cert.value - prev) <= rtol * std::abs(cert.value)) {
      cert.converged = true;
      break;
    }
    prev = cert.value;
  }
  return cert;
}

double stability_certificate_dense(const TotalProblem& prob) {
  const Eigen::VectorXd& c = prob.gauge_vector();
  const auto n = static_cast<Eigen::Index>(prob.dofs());
  const Eigen::MatrixXd H(total_hessian(Eigen::VectorXd::Zero(n), prob));
  const Eigen::MatrixXd G(energy_norm_gram(prob.mesh(), prob.bem().mesh()));
  // Orthonormal basis of {x : c·x = 0}.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd Z = Q.rightCols(n - 1);
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      Z.transpose() * H * Z, Z.transpose() * G * Z, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SingularSystemError("stability_certificate_dense: eigensolver failed");
  return es.eigenvalues().minCoeff();
}

}  // namespace acbem

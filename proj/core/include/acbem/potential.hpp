#pragma once

#include <memory>

#include <Eigen/Core>

#include "acbem/lattice.hpp"

namespace acbem {

using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Nearest-neighbour many-body site energy V acting on the six bond differences.
class SitePotential {
 public:
  virtual ~SitePotential() = default;
  virtual double value(const Vec6& g) const = 0;
  virtual Vec6 gradient(const Vec6& g) const = 0;
  virtual Mat6 hessian(const Vec6& g) const = 0;
};

/// V(g) = ½Σ g_j² + (β/4)Σ g_j⁴ + δ Σ g_j g_{j+1}, indices mod 6.
class NeighbourPotential final : public SitePotential {
 public:
  NeighbourPotential(double beta, double delta);

  double beta() const { return beta_; }
  double delta() const { return delta_; }

  double value(const Vec6& g) const override;
  Vec6 gradient(const Vec6& g) const override;
  Mat6 hessian(const Vec6& g) const override;

 private:
  double beta_;
  double delta_;
};

/// s·V for a wrapped potential; s = −1 gives the sign-flipped test potential.
class ScaledPotential final : public SitePotential {
 public:
  ScaledPotential(std::shared_ptr<const SitePotential> base, double scale)
      : base_(std::move(base)), scale_(scale) {}

  double value(const Vec6& g) const override { return scale_ * base_->value(g); }
  Vec6 gradient(const Vec6& g) const override { return scale_ * base_->gradient(g); }
  Mat6 hessian(const Vec6& g) const override { return scale_ * base_->hessian(g); }

 private:
  std::shared_ptr<const SitePotential> base_;
  double scale_;
};

/// Throws DomainError unless β ≥ 0 and |δ| < 1.
std::shared_ptr<const NeighbourPotential> default_potential(double beta, double delta);

/// Rows are the lattice directions a_j, so that F·a = A F for a gradient F.
const Eigen::Matrix<double, 6, 2>& direction_matrix();

/// Cauchy-Born density W(F) = V(F·a)/Ω₀ for anti-plane gradients F ∈ R².
class CauchyBorn {
 public:
  explicit CauchyBorn(std::shared_ptr<const SitePotential> v) : v_(std::move(v)) {}

  double value(const Vec2& F) const;
  Vec2 gradient(const Vec2& F) const;
  Eigen::Matrix2d hessian(const Vec2& F) const;

  const SitePotential& potential() const { return *v_; }
  std::shared_ptr<const SitePotential> potential_ptr() const { return v_; }

 private:
  std::shared_ptr<const SitePotential> v_;
};

/// μ with ∇²W(0) = μI. Throws DomainError if ∇²W(0) is not isotropic to 1e-8.
/// The sign is not checked: a negated potential yields μ < 0.
double shear_modulus(const SitePotential& v);

}  // namespace acbem

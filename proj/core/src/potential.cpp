#include "acbem/potential.hpp"

#include <cmath>

#include "acbem/error.hpp"

namespace acbem {

NeighbourPotential::NeighbourPotential(double beta, double delta) : beta_(beta), delta_(delta) {
  if (!(beta >= 0.0) || !(std::abs(delta) < 1.0))
    throw DomainError("NeighbourPotential: require beta >= 0 and |delta| < 1");
}

double NeighbourPotential::value(const Vec6& g) const {
  double quad = 0.0, quart = 0.0, cross = 0.0;
  for (int j = 0; j < 6; ++j) {
    const double g2 = g[j] * g[j];
    quad += g2;
    quart += g2 * g2;
    cross += g[j] * g[wrap6(j + 1)];
  }
  return 0.5 * quad + 0.25 * beta_ * quart + delta_ * cross;
}

Vec6 NeighbourPotential::gradient(const Vec6& g) const {
  Vec6 d;
  for (int j = 0; j < 6; ++j)
    d[j] = g[j] + beta_ * g[j] * g[j] * g[j] + delta_ * (g[wrap6(j - 1)] + g[wrap6(j + 1)]);
  return d;
}

Mat6 NeighbourPotential::hessian(const Vec6& g) const {
  Mat6 h = Mat6::Zero();
  for (int j = 0; j < 6; ++j) {
    h(j, j) = 1.0 + 3.0 * beta_ * g[j] * g[j];
    h(j, wrap6(j + 1)) += delta_;
    h(j, wrap6(j - 1)) += delta_;
  }
  return h;
}

std::shared_ptr<const NeighbourPotential> default_potential(double beta, double delta) {
  return std::make_shared<const NeighbourPotential>(beta, delta);
}

const Eigen::Matrix<double, 6, 2>& direction_matrix() {
  static const Eigen::Matrix<double, 6, 2> a = [] {
    Eigen::Matrix<double, 6, 2> m;
    for (int j = 0; j < 6; ++j) m.row(j) = directions()[j].transpose();
    return m;
  }();
  return a;
}

double CauchyBorn::value(const Vec2& F) const {
  return v_->value(direction_matrix() * F) / kCellVolume;
}

Vec2 CauchyBorn::gradient(const Vec2& F) const {
  const auto& a = direction_matrix();
  return a.transpose() * v_->gradient(a * F) / kCellVolume;
}

Eigen::Matrix2d CauchyBorn::hessian(const Vec2& F) const {
  const auto& a = direction_matrix();
  return a.transpose() * v_->hessian(a * F) * a / kCellVolume;
}

double shear_modulus(const SitePotential& v) {
  const auto& a = direction_matrix();
  const Eigen::Matrix2d h = a.transpose() * v.hessian(Vec6::Zero()) * a / kCellVolume;
  const double mu = 0.5 * h.trace();
  const double residual = (h - mu * Eigen::Matrix2d::Identity()).norm();
  if (residual > 1e-8 * std::max(1.0, std::abs(mu)))
    throw DomainError("shear_modulus: Hessian of W at 0 is anisotropic");
  return mu;
}

}  // namespace acbem

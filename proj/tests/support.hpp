#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>

namespace acbem::test {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(0x5eed1234u);
  return gen;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, double lo = -0.5, double hi = 0.5) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = d(rng());
  return v;
}

inline double relative_gap(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central difference of E along phi against the analytic slope g·phi.
inline double directional_error(const std::function<double(const Eigen::VectorXd&)>& E, const Eigen::VectorXd& g,
                                const Eigen::VectorXd& u, const Eigen::VectorXd& phi, double h = 1e-5) {
  const double fd = (E(u + h * phi) - E(u - h * phi)) / (2.0 * h);
  return relative_gap(g.dot(phi), fd);
}

/// Central difference of a gradient along psi tested with phi, against phi·(H psi).
inline double hessian_error(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                            const Eigen::VectorXd& Hpsi, const Eigen::VectorXd& u, const Eigen::VectorXd& phi,
                            const Eigen::VectorXd& psi, double h = 1e-5) {
  const double fd = phi.dot(grad(u + h * psi) - grad(u - h * psi)) / (2.0 * h);
  return relative_gap(phi.dot(Hpsi), fd);
}

}  // namespace acbem::test

#include "acbem/atomistic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/SparseCholesky>

#include "acbem/error.hpp"

namespace acbem {

namespace {

std::size_t index_of(const SiteSet& domain, Site s, const char* who) {
  const auto k = domain.find(s);
  if (!k)
    throw MissingNeighbourError(std::string(who) + ": site (" + std::to_string(s.i) + "," +
                                std::to_string(s.j) + ") not in domain");
  return *k;
}

}  // namespace

double DefectPotential::value(const SiteSet& domain, const Eigen::VectorXd& u) const {
  const double u0 = u[index_of(domain, anchor, "DefectPotential")];
  double f = 0.0;
  for (std::size_t k = 0; k < sites.size(); ++k)
    f += weights[k] * (u[index_of(domain, sites[k], "DefectPotential")] - u0);
  return f;
}

void DefectPotential::add_gradient(const SiteSet& domain, Eigen::VectorXd& g, double scale) const {
  double total = 0.0;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    g[index_of(domain, sites[k], "DefectPotential")] += scale * weights[k];
    total += weights[k];
  }
  g[index_of(domain, anchor, "DefectPotential")] -= scale * total;
}

Vec2 DefectPotential::dipole_moment() const {
  Vec2 p = Vec2::Zero();
  double total = 0.0;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    p += weights[k] * position(sites[k]);
    total += weights[k];
  }
  return p - total * position(anchor);
}

DefectPotential default_defect(double alpha) {
  DefectPotential f;
  f.sites = {kNeighbourOffsets[0], kNeighbourOffsets[3]};
  f.weights = {alpha, -alpha};
  f.anchor = {0, 0};
  f.core_radius = 1.0;
  return f;
}

AtomisticEnergy::AtomisticEnergy(std::shared_ptr<const SitePotential> v, const SiteSet& domain,
                                 std::span<const Site> energy_sites)
    : v_(std::move(v)), n_dofs_(domain.size()) {
  stencils_.reserve(energy_sites.size());
  for (const Site& s : energy_sites) {
    std::array<int, 7> st;
    st[0] = static_cast<int>(index_of(domain, s, "AtomisticEnergy"));
    for (int j = 0; j < 6; ++j) {
      const auto nb = domain.find(s + kNeighbourOffsets[j]);
      if (!nb)
        throw MissingNeighbourError("AtomisticEnergy: halo missing around (" +
                                    std::to_string(s.i) + "," + std::to_string(s.j) + ")");
      st[j + 1] = static_cast<int>(*nb);
    }
    stencils_.push_back(st);
  }
}

Vec6 AtomisticEnergy::differences(const Eigen::VectorXd& u, const std::array<int, 7>& st) const {
  Vec6 g;
  for (int j = 0; j < 6; ++j) g[j] = u[st[j + 1]] - u[st[0]];
  return g;
}

double AtomisticEnergy::energy(const Eigen::VectorXd& u) const {
  double e = 0.0;
  for (const auto& st : stencils_) e += v_->value(differences(u, st));
  return e;
}

Eigen::VectorXd AtomisticEnergy::gradient(const Eigen::VectorXd& u) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_dofs_));
  for (const auto& st : stencils_) {
    const Vec6 dv = v_->gradient(differences(u, st));
    for (int j = 0; j < 6; ++j) {
      g[st[j + 1]] += dv[j];
      g[st[0]] -= dv[j];
    }
  }
  return g;
}

SparseMatrix AtomisticEnergy::hessian(const Eigen::VectorXd& u) const {
  std::vector<int> map(n_dofs_);
  for (std::size_t k = 0; k < n_dofs_; ++k) map[k] = static_cast<int>(k);
  return hessian(u, map, static_cast<int>(n_dofs_));
}

SparseMatrix AtomisticEnergy::hessian(const Eigen::VectorXd& u, std::span<const int> map,
                                      int n_reduced) const {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(stencils_.size() * 49);
  for (const auto& st : stencils_) {
    const Mat6 h = v_->hessian(differences(u, st));
    // Local 7×7 block BᵀhB with B = [−1 | I] mapping (u_0, u_1..u_6) to bond differences.
    Eigen::Matrix<double, 7, 7> loc;
    const Vec6 rows = h.rowwise().sum();
    loc(0, 0) = h.sum();
    for (int a = 0; a < 6; ++a) {
      loc(0, a + 1) = loc(a + 1, 0) = -rows[a];
      for (int b = 0; b < 6; ++b) loc(a + 1, b + 1) = h(a, b);
    }
    for (int a = 0; a < 7; ++a) {
      const int ra = map[st[a]];
      if (ra < 0) continue;
      for (int b = 0; b < 7; ++b) {
        const int cb = map[st[b]];
        if (cb >= 0) trip.emplace_back(ra, cb, loc(a, b));
      }
    }
  }
  SparseMatrix H(n_reduced, n_reduced);
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

Eigen::VectorXd AtomisticEnergy::hessian_apply(const Eigen::VectorXd& u,
                                               const Eigen::VectorXd& phi) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_dofs_));
  for (const auto& st : stencils_) {
    const Vec6 hp = v_->hessian(differences(u, st)) * differences(phi, st);
    for (int j = 0; j < 6; ++j) {
      out[st[j + 1]] += hp[j];
      out[st[0]] -= hp[j];
    }
  }
  return out;
}

double energy_atomistic(const SitePotential& v, const SiteSet& domain, const Eigen::VectorXd& u,
                        std::span<const Site> energy_sites) {
  double e = 0.0;
  for (const Site& s : energy_sites) e += v.value(finite_difference(domain, u, s));
  return e;
}

double dipole_field(const Vec2& p, double mu, const Vec2& x) {
  return p.dot(x) / (2.0 * std::numbers::pi * mu * x.squaredNorm());
}

double ReferenceSolution::value_at(Site s) const {
  if (const auto k = domain.find(s)) return u[static_cast<Eigen::Index>(*k)];
  if (clamp == FarFieldClamp::Zero) return 0.0;
  return dipole_field(dipole, mu, position(s));
}

namespace {

struct NewtonResult {
  int iterations = 0;
  double gradient_norm = 0.0;
};

NewtonResult newton_free(const AtomisticEnergy& energy, const DefectPotential& defect,
                         const SiteSet& domain, const std::vector<int>& map, int n_free,
                         Eigen::VectorXd& u, double tol, int max_iterations) {
  auto objective = [&](const Eigen::VectorXd& x) {
    return energy.energy(x) - defect.value(domain, x);
  };
  auto free_gradient = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = energy.gradient(x);
    defect.add_gradient(domain, g, -1.0);
    Eigen::VectorXd gf(n_free);
    for (std::size_t k = 0; k < map.size(); ++k)
      if (map[k] >= 0) gf[map[k]] = g[static_cast<Eigen::Index>(k)];
    return gf;
  };

  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  bool analysed = false;
  double obj = objective(u);
  NewtonResult res;
  for (int it = 0;; ++it) {
    const Eigen::VectorXd g = free_gradient(u);
    res.gradient_norm = g.norm();
    res.iterations = it;
    if (res.gradient_norm <= tol) return res;
    if (it >= max_iterations)
      throw NonConvergenceError("solve_reference: no convergence after " +
                                std::to_string(max_iterations) + " Newton iterations, |g| = " +
                                std::to_string(res.gradient_norm));

    const SparseMatrix H = energy.hessian(u, map, n_free);
    if (!analysed) {
      ldlt.analyzePattern(H);
      analysed = true;
    }
    ldlt.factorize(H);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
      throw IndefiniteHessianError("solve_reference: Hessian is not positive definite");
    const Eigen::VectorXd step = ldlt.solve(-g);
    const double slope = g.dot(step);

    double t = 1.0;
    Eigen::VectorXd trial = u;
    double trial_obj = obj;
    const double noise = 1e-14 * std::max(1.0, std::abs(obj));
    for (int ls = 0; ls < 60; ++ls) {
      trial = u;
      for (std::size_t k = 0; k < map.size(); ++k)
        if (map[k] >= 0) trial[static_cast<Eigen::Index>(k)] += t * step[map[k]];
      trial_obj = objective(trial);
      if (trial_obj <= obj + 1e-4 * t * slope + noise) break;
      t *= 0.5;
    }
    u = std::move(trial);
    obj = trial_obj;
  }
}

}  // namespace

ReferenceSolution solve_reference(std::shared_ptr<const SitePotential> v,
                                  const DefectPotential& defect, const ReferenceOptions& opts) {
  if (!(opts.R_ref >= 16.0)) throw DomainError("solve_reference: R_ref must be at least 16");
  if (!(opts.tol > 0.0)) throw DomainError("solve_reference: tol must be positive");

  ReferenceSolution ref;
  ref.R_ref = opts.R_ref;
  ref.mu = shear_modulus(*v);
  ref.clamp = opts.clamp;
  ref.domain = generate_sites(opts.R_ref + 2.0);

  const double r_free2 = opts.R_ref * opts.R_ref * (1.0 + 1e-12);
  const double r_energy2 = (opts.R_ref + 1.0) * (opts.R_ref + 1.0) * (1.0 + 1e-12);
  std::vector<Site> energy_sites;
  std::vector<int> map(ref.domain.size(), -1);
  ref.free.assign(ref.domain.size(), false);
  int n_free = 0;
  for (std::size_t k = 0; k < ref.domain.size(); ++k) {
    const double r2 = position(ref.domain[k]).squaredNorm();
    if (r2 <= r_energy2) energy_sites.push_back(ref.domain[k]);
    if (r2 <= r_free2) {
      map[k] = n_free++;
      ref.free[k] = true;
    }
  }
  const AtomisticEnergy energy(v, ref.domain, energy_sites);

  ref.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ref.domain.size()));
  ref.dipole = opts.clamp == FarFieldClamp::DipolePredictor ? defect.dipole_moment() : Vec2::Zero();
  const int sweeps = opts.clamp == FarFieldClamp::DipolePredictor ? std::max(1, opts.predictor_sweeps) : 1;

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t k = 0; k < ref.domain.size(); ++k)
      if (!ref.free[k])
        ref.u[static_cast<Eigen::Index>(k)] =
            opts.clamp == FarFieldClamp::Zero ? 0.0
                                              : dipole_field(ref.dipole, ref.mu, position(ref.domain[k]));
    const NewtonResult nr =
        newton_free(energy, defect, ref.domain, map, n_free, ref.u, opts.tol, opts.max_iterations);
    ref.newton_iterations += nr.iterations;
    ref.gradient_norm = nr.gradient_norm;
    if (opts.clamp == FarFieldClamp::Zero || sweep + 1 == sweeps) break;

    // Effective dipole: defect forces minus the nonlinear part of the lattice forces.
    Eigen::VectorXd n = energy.gradient(ref.u) - energy.hessian_apply(Eigen::VectorXd::Zero(ref.u.size()), ref.u);
    Vec2 p = defect.dipole_moment();
    for (std::size_t k = 0; k < ref.domain.size(); ++k)
      if (ref.free[k]) p -= n[static_cast<Eigen::Index>(k)] * position(ref.domain[k]);
    const double change = (p - ref.dipole).norm();
    ref.dipole = p;
    if (change <= 1e-14 * std::max(1.0, p.norm())) break;
  }
  return ref;
}

DecayFit fit_decay(const ReferenceSolution& ref, double r_min, double r_max) {
  if (!(r_min > 0.0) || !(r_max > r_min)) throw DomainError("fit_decay: need 0 < r_min < r_max");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < ref.domain.size(); ++k) {
    const Site s = ref.domain[k];
    const double r = position(s).norm();
    if (r < r_min || r > r_max) continue;
    const double d = finite_difference(ref.domain, ref.u, s).norm();
    if (!(d > 0.0)) continue;
    pts.emplace_back(std::log(r), std::log(d));
  }
  if (pts.size() < 2) throw DomainError("fit_decay: fewer than two samples in the annulus");
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  DecayFit fit;
  fit.samples = pts.size();
  fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.exponent * sx) / n;
  double rss = 0.0;
  for (const auto& [x, y] : pts) rss += std::pow(y - fit.intercept - fit.exponent * x, 2);
  fit.residual = std::sqrt(rss / n);
  return fit;
}

SparseMatrix lattice_stiffness(const SiteSet& domain) {
  const double w = 1.0 / (2.0 * std::numbers::sqrt3);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(domain.size() * 18);
  auto add_triangle = [&](Site a, Site b, Site c) {
    const auto ia = domain.find(a), ib = domain.find(b), ic = domain.find(c);
    if (!ia || !ib || !ic) return;
    const std::array<int, 3> v = {static_cast<int>(*ia), static_cast<int>(*ib), static_cast<int>(*ic)};
    for (int e = 0; e < 3; ++e) {
      const int p = v[e], q = v[(e + 1) % 3];
      trip.emplace_back(p, p, w);
      trip.emplace_back(q, q, w);
      trip.emplace_back(p, q, -w);
      trip.emplace_back(q, p, -w);
    }
  };
  for (const Site& p : domain) {
    add_triangle(p, p + Site{1, 0}, p + Site{0, 1});
    add_triangle(p + Site{1, 0}, p + Site{1, 1}, p + Site{0, 1});
  }
  const auto n = static_cast<Eigen::Index>(domain.size());
  SparseMatrix L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

double atomistic_stability(std::shared_ptr<const SitePotential> v, const ReferenceSolution& ref,
                           int max_iterations) {
  std::vector<Site> energy_sites;
  std::vector<int> map(ref.domain.size(), -1);
  int n_free = 0;
  const double r_energy2 = (ref.R_ref + 1.0) * (ref.R_ref + 1.0) * (1.0 + 1e-12);
  for (std::size_t k = 0; k < ref.domain.size(); ++k) {
    if (position(ref.domain[k]).squaredNorm() <= r_energy2) energy_sites.push_back(ref.domain[k]);
    if (ref.free[k]) map[k] = n_free++;
  }
  const AtomisticEnergy energy(std::move(v), ref.domain, energy_sites);
  const SparseMatrix H = energy.hessian(ref.u, map, n_free);

  const SparseMatrix Lfull = lattice_stiffness(ref.domain);
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < Lfull.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(Lfull, c); it; ++it)
      if (map[it.row()] >= 0 && map[it.col()] >= 0)
        trip.emplace_back(map[it.row()], map[it.col()], it.value());
  SparseMatrix L(n_free, n_free);
  L.setFromTriplets(trip.begin(), trip.end());

  Eigen::SimplicialLDLT<SparseMatrix> ldlt(H);
  if (ldlt.info() != Eigen::Success) throw SingularSystemError("atomistic_stability: factorisation failed");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n_free);
  for (int k = 0; k < n_free; ++k) x[k] += 0.1 * std::sin(0.37 * k);
  double lambda = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    x = ldlt.solve(L * x);
    x /= std::sqrt(std::abs(x.dot(L * x)));
    const double next = x.dot(H * x) / x.dot(L * x);
    if (it > 0 && std::abs(next - lambda) <= 1e-12 * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

}  // namespace acbem

#include "acbem/bem.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "acbem/error.hpp"
#include "acbem/mesh.hpp"

namespace acbem {

namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

cd to_c(const Vec2& v) { return {v.x(), v.y()}; }

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// A branch of log continuous on a convex region given by its corners, which must not
/// contain the origin except possibly at a corner.
class LogBranch {
 public:
  explicit LogBranch(std::initializer_list<cd> corners) {
    std::vector<double> args;
    for (const cd& z : corners)
      if (std::abs(z) > 0.0) args.push_back(std::arg(z));
    std::sort(args.begin(), args.end());
    double best_gap = -1.0;
    for (std::size_t k = 0; k < args.size(); ++k) {
      const double next = k + 1 < args.size() ? args[k + 1] : args.front() + kTwoPi;
      const double gap = next - args[k];
      if (gap > best_gap) {
        best_gap = gap;
        cut_ = args[k] + 0.5 * gap;
      }
    }
  }

  cd log(const cd& z) const {
    double a = std::arg(z);
    while (a > cut_) a -= kTwoPi;
    while (a <= cut_ - kTwoPi) a += kTwoPi;
    return {std::log(std::abs(z)), a};
  }

  /// z² log z / 2 − 3z²/4, with value 0 at the origin.
  cd g(const cd& z) const {
    if (std::abs(z) == 0.0) return 0.0;
    return 0.5 * z * z * log(z) - 0.75 * z * z;
  }

  /// z log z − z, with value 0 at the origin.
  cd h(const cd& z) const {
    if (std::abs(z) == 0.0) return 0.0;
    return z * log(z) - z;
  }

 private:
  double cut_ = std::numbers::pi;
};

bool collinear(const Panel& p, const Panel& q) {
  const double scale = std::max(p.length, q.length);
  return std::abs(cross(p.tangent, q.tangent)) < 1e-13 &&
         std::abs(cross(q.tangent, p.a - q.a)) < 1e-13 * scale;
}

struct GaussRule {
  std::vector<double> x, w;  // on [0, 1]
};

GaussRule gauss_legendre(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = 0.5 * (1.0 - z);
    r.w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

const GaussRule& gauss8() {
  static const GaussRule r = gauss_legendre(8);
  return r;
}

const GaussRule& gauss16() {
  static const GaussRule r = gauss_legendre(16);
  return r;
}

double point_segment_distance(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double t = std::clamp((x - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (x - a - t * d).norm();
}

double segment_distance(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
  const double c1 = cross(a1 - a0, b0 - a0), c2 = cross(a1 - a0, b1 - a0);
  const double c3 = cross(b1 - b0, a0 - b0), c4 = cross(b1 - b0, a1 - b0);
  if (((c1 > 0 && c2 < 0) || (c1 < 0 && c2 > 0)) && ((c3 > 0 && c4 < 0) || (c3 < 0 && c4 > 0)))
    return 0.0;
  return std::min({point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1),
                   point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1)});
}

/// ∫∫ c cᵀ / |x − y|² over a sub-rectangle of a panel pair, c = (φ_p0, φ_p1, −φ_q0, −φ_q1).
void gagliardo_pair(const Panel& p, double s0, double s1, const Panel& q, double t0, double t1,
                    int depth, int max_depth, Eigen::Matrix4d& acc) {
  const Vec2 a0 = p.a + s0 * p.length * p.tangent, a1 = p.a + s1 * p.length * p.tangent;
  const Vec2 b0 = q.a + t0 * q.length * q.tangent, b1 = q.a + t1 * q.length * q.tangent;
  const double len = std::max((s1 - s0) * p.length, (t1 - t0) * q.length);
  if (depth < max_depth && segment_distance(a0, a1, b0, b1) < len) {
    const double sm = 0.5 * (s0 + s1), tm = 0.5 * (t0 + t1);
    gagliardo_pair(p, s0, sm, q, t0, tm, depth + 1, max_depth, acc);
    gagliardo_pair(p, sm, s1, q, t0, tm, depth + 1, max_depth, acc);
    gagliardo_pair(p, s0, sm, q, tm, t1, depth + 1, max_depth, acc);
    gagliardo_pair(p, sm, s1, q, tm, t1, depth + 1, max_depth, acc);
    return;
  }
  const GaussRule& g = gauss8();
  const double jac = (s1 - s0) * p.length * (t1 - t0) * q.length;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    const double sigma = s0 + (s1 - s0) * g.x[i];
    const Vec2 x = p.a + sigma * p.length * p.tangent;
    for (std::size_t j = 0; j < g.x.size(); ++j) {
      const double tau = t0 + (t1 - t0) * g.x[j];
      const Vec2 y = q.a + tau * q.length * q.tangent;
      const Eigen::Vector4d c(1.0 - sigma, sigma, -(1.0 - tau), -tau);
      acc.noalias() += (jac * g.w[i] * g.w[j] / (x - y).squaredNorm()) * (c * c.transpose());
    }
  }
}

template <class Derived>
void write_block(std::ostream& os, const Eigen::MatrixBase<Derived>& m) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = m;
  os.write(reinterpret_cast<const char*>(r.data()), static_cast<std::streamsize>(r.size() * sizeof(double)));
}

Eigen::MatrixXd read_block(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r(rows, cols);
  is.read(reinterpret_cast<char*>(r.data()), static_cast<std::streamsize>(r.size() * sizeof(double)));
  if (!is) throw Error("read_operators: truncated file");
  return r;
}

}  // namespace

BoundaryMesh::BoundaryMesh(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw MeshError("BoundaryMesh: need at least three vertices");
  panels_.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Panel p;
    p.a = vertices_[k];
    p.b = vertices_[(k + 1) % n];
    p.length = (p.b - p.a).norm();
    if (!(p.length > 0.0)) throw MeshError("BoundaryMesh: degenerate panel " + std::to_string(k));
    p.tangent = (p.b - p.a) / p.length;
    p.normal = Vec2(p.tangent.y(), -p.tangent.x());
    panels_.push_back(p);
  }
  if (!(signed_area() > 0.0)) throw MeshError("BoundaryMesh: polygon is not counter-clockwise");
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      diameter_ = std::max(diameter_, (vertices_[a] - vertices_[b]).norm());
}

BoundaryMesh BoundaryMesh::from_fem(const FemMesh& mesh) {
  std::vector<Vec2> v;
  v.reserve(mesh.boundary().size());
  for (int b : mesh.boundary()) v.push_back(mesh.node_position(static_cast<std::size_t>(b)));
  return BoundaryMesh(std::move(v));
}

BoundaryMesh BoundaryMesh::regular_polygon(int M, double radius, double phase) {
  std::vector<Vec2> v;
  for (int k = 0; k < M; ++k) {
    const double th = phase + kTwoPi * k / M;
    v.emplace_back(radius * std::cos(th), radius * std::sin(th));
  }
  return BoundaryMesh(std::move(v));
}

double BoundaryMesh::length() const {
  double l = 0.0;
  for (const Panel& p : panels_) l += p.length;
  return l;
}

double BoundaryMesh::signed_area() const {
  double a = 0.0;
  for (const Panel& p : panels_) a += 0.5 * cross(p.a, p.b);
  return a;
}

BoundaryMesh BoundaryMesh::scaled(double R) const {
  std::vector<Vec2> v = vertices_;
  for (Vec2& x : v) x *= R;
  return BoundaryMesh(std::move(v));
}

double single_layer_entry(const Panel& p, const Panel& q, bool same) {
  if (same) {
    const double L = p.length;
    return L * L * (1.5 - std::log(L)) / kTwoPi;
  }
  const cd e1 = to_c(p.tangent), e2 = to_c(q.tangent);
  const cd z00 = to_c(p.a - q.a);
  const cd z10 = z00 + p.length * e1, z01 = z00 - q.length * e2, z11 = z10 - q.length * e2;
  const LogBranch br{z00, z10, z01, z11};
  const cd C = -1.0 / (e1 * e2);
  const double I = std::real(C * (br.g(z11) - br.g(z10) - br.g(z01) + br.g(z00)));
  return -I / kTwoPi;
}

std::pair<double, double> double_layer_entries(const Panel& p, const Panel& q) {
  if (collinear(p, q)) return {0.0, 0.0};
  const cd e1 = to_c(p.tangent), e2 = to_c(q.tangent), n = to_c(q.normal);
  const double L1 = p.length, L2 = q.length;
  const cd w00 = to_c(q.a - p.a);
  const cd w10 = w00 - L1 * e1, w01 = w00 + L2 * e2, w11 = w10 + L2 * e2;
  const LogBranch br{w00, w10, w01, w11};
  const cd C = -n / (e1 * e2);
  auto G0 = [&](const cd& w) { return C * br.h(w); };
  const cd mixed0 = G0(w11) - G0(w10) - G0(w01) + G0(w00);
  const cd mixed1 = (C / e2) * (br.g(w11) - br.g(w10) - br.g(w01) + br.g(w00));
  const double J0 = std::real(mixed0);
  const double J1 = std::real(L2 * (G0(w11) - G0(w01)) - mixed1);
  return {-(J0 - J1 / L2) / kTwoPi, -(J1 / L2) / kTwoPi};
}

Eigen::MatrixXd assemble_single_layer(const BoundaryMesh& bm) {
  const auto M = static_cast<Eigen::Index>(bm.size());
  Eigen::MatrixXd V(M, M);
  for (Eigen::Index k = 0; k < M; ++k)
    for (Eigen::Index l = k; l < M; ++l)
      V(k, l) = V(l, k) = single_layer_entry(bm.panel(k), bm.panel(l), k == l);
  return V;
}

Eigen::MatrixXd assemble_double_layer(const BoundaryMesh& bm) {
  const auto M = static_cast<Eigen::Index>(bm.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index k = 0; k < M; ++k)
    for (Eigen::Index l = 0; l < M; ++l) {
      if (k == l) continue;
      const auto [start, end] = double_layer_entries(bm.panel(k), bm.panel(l));
      K(k, l) += start;
      K(k, (l + 1) % M) += end;
    }
  return K;
}

Eigen::MatrixXd boundary_mass(const BoundaryMesh& bm) {
  const auto M = static_cast<Eigen::Index>(bm.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index k = 0; k < M; ++k) {
    m(k, k) += 0.5 * bm.panel(k).length;
    m(k, (k + 1) % M) += 0.5 * bm.panel(k).length;
  }
  return m;
}

Eigen::MatrixXd boundary_l2_mass(const BoundaryMesh& bm) {
  const auto M = static_cast<Eigen::Index>(bm.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index k = 0; k < M; ++k) {
    const Eigen::Index a = k, b = (k + 1) % M;
    const double L = bm.panel(k).length;
    m(a, a) += L / 3.0;
    m(b, b) += L / 3.0;
    m(a, b) += L / 6.0;
    m(b, a) += L / 6.0;
  }
  return m;
}

namespace {

Eigen::MatrixXd bordered_matrix(const Eigen::MatrixXd& V, const BoundaryMesh& bm) {
  const auto M = V.rows();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(M + 1, M + 1);
  B.topLeftCorner(M, M) = V;
  for (Eigen::Index k = 0; k < M; ++k) B(k, M) = B(M, k) = bm.panel(k).length;
  return B;
}

void check_conditioning(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, const char* who) {
  if (!(lu.rcond() > 1e-14)) throw SingularSystemError(std::string(who) + ": bordered single-layer system is singular");
}

}  // namespace

Eigen::VectorXd equilibrium_density(const Eigen::MatrixXd& V, const BoundaryMesh& bm) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bordered_matrix(V, bm));
  check_conditioning(lu, "equilibrium_density");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(V.rows() + 1);
  rhs[V.rows()] = 1.0;
  return lu.solve(rhs).head(V.rows());
}

double boundary_pairing(const Eigen::VectorXd& density, const Eigen::VectorXd& trace,
                        const BoundaryMesh& bm) {
  const auto M = static_cast<Eigen::Index>(bm.size());
  double s = 0.0;
  for (Eigen::Index k = 0; k < M; ++k)
    s += density[k] * 0.5 * bm.panel(k).length * (trace[k] + trace[(k + 1) % M]);
  return s;
}

Eigen::VectorXd project_star(const Eigen::VectorXd& trace, const Eigen::VectorXd& w_eq,
                             const BoundaryMesh& bm) {
  return trace.array() - boundary_pairing(w_eq, trace, bm);
}

BemOperators::BemOperators(BoundaryMesh bm) : bm_(std::move(bm)) {
  V_ = assemble_single_layer(bm_);
  K_ = assemble_double_layer(bm_);
  M_ = boundary_mass(bm_);
  bordered_.compute(bordered_matrix(V_, bm_));
  check_conditioning(bordered_, "BemOperators");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(V_.rows() + 1);
  rhs[V_.rows()] = 1.0;
  w_eq_ = bordered_.solve(rhs).head(V_.rows());
  gauge_ = M_.transpose() * w_eq_;
  S_ = boundary_quadratic_form(*this);
}

Eigen::VectorXd BemOperators::project_star(const Eigen::VectorXd& trace) const {
  return trace.array() - gauge_.dot(trace);
}

Eigen::VectorXd BemOperators::steklov_apply(const Eigen::VectorXd& trace) const {
  const Eigen::VectorXd u = project_star(trace);
  Eigen::VectorXd rhs(V_.rows() + 1);
  rhs.head(V_.rows()) = 0.5 * (M_ * u) - K_ * u;
  rhs[V_.rows()] = 0.0;
  return bordered_.solve(rhs).head(V_.rows());
}

double BemOperators::quadratic_form(const Eigen::VectorXd& trace) const {
  return boundary_pairing(steklov_apply(trace), project_star(trace), bm_);
}

double BemOperators::exterior_field(const Vec2& x, const Eigen::VectorXd& trace,
                                    const Eigen::VectorXd& density) const {
  const GaussRule& g = gauss16();
  constexpr int kSub = 4;
  const auto M = static_cast<Eigen::Index>(bm_.size());
  double u = 0.0;
  for (Eigen::Index k = 0; k < M; ++k) {
    const Panel& p = bm_.panel(k);
    const double ua = trace[k], ub = trace[(k + 1) % M];
    for (int sub = 0; sub < kSub; ++sub)
      for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double tau = (sub + g.x[i]) / kSub;
        const Vec2 y = p.a + tau * p.length * p.tangent;
        const Vec2 d = y - x;
        const double w = g.w[i] * p.length / kSub;
        const double G = -std::log(d.norm()) / kTwoPi;
        const double dG = -p.normal.dot(d) / (kTwoPi * d.squaredNorm());
        u += w * (((1.0 - tau) * ua + tau * ub) * dG + density[k] * G);
      }
  }
  return u;
}

Eigen::MatrixXd boundary_quadratic_form(const BemOperators& ops) {
  const auto P = static_cast<Eigen::Index>(ops.mesh().size());
  Eigen::MatrixXd S0(P, P);
  for (Eigen::Index j = 0; j < P; ++j) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(P, j);
    const Eigen::VectorXd v = ops.steklov_apply(e);
    S0.col(j) = ops.mass().transpose() * v;
  }
  // Left projection: uᵀ Pᵀ Mᵀ v.
  const Eigen::MatrixXd Pm = Eigen::MatrixXd::Identity(P, P) - Eigen::VectorXd::Ones(P) * ops.gauge().transpose();
  const Eigen::MatrixXd S1 = Pm.transpose() * S0;
  Eigen::MatrixXd S = 0.5 * (S1 + S1.transpose());
  // The P0 pairing cannot see traces in ker(mass) (the alternating mode for an even vertex
  // count), so semidefiniteness is checked on the complement of that kernel.
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ops.mass());
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd Z = lu.kernel();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(P, P);
  if (lu.dimensionOfKernel() > 0) Q -= Z * (Z.transpose() * Z).ldlt().solve(Z.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q * S * Q, Eigen::EigenvaluesOnly);
  const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-10 * top)
    throw Error("boundary_quadratic_form: Steklov form is not positive semidefinite (min eigenvalue " +
                std::to_string(es.eigenvalues().minCoeff()) + ")");
  return S;
}

Eigen::MatrixXd gagliardo_matrix(const BoundaryMesh& bm, int max_depth) {
  const auto M = static_cast<Eigen::Index>(bm.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index k = 0; k < M; ++k) {
    const Eigen::Index a = k, b = (k + 1) % M;
    G(a, a) += 1.0;
    G(b, b) += 1.0;
    G(a, b) -= 1.0;
    G(b, a) -= 1.0;
  }
  for (Eigen::Index k = 0; k < M; ++k)
    for (Eigen::Index l = k + 1; l < M; ++l) {
      Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
      gagliardo_pair(bm.panel(k), 0.0, 1.0, bm.panel(l), 0.0, 1.0, 0, max_depth, acc);
      const std::array<Eigen::Index, 4> dof = {k, (k + 1) % M, l, (l + 1) % M};
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) G(dof[i], dof[j]) += 2.0 * acc(i, j);
    }
  return G;
}

Eigen::MatrixXd half_norm_gram(const BoundaryMesh& bm) {
  return boundary_l2_mass(bm) / (0.5 * bm.diameter()) + gagliardo_matrix(bm);
}

double half_seminorm_squared(const Eigen::VectorXd& trace, const BoundaryMesh& bm) {
  return trace.dot(gagliardo_matrix(bm) * trace);
}

double fractional_half_norm(const Eigen::VectorXd& trace, const BoundaryMesh& bm) {
  const double q = trace.dot(half_norm_gram(bm) * trace);
  return std::sqrt(std::max(0.0, q));
}

void write_operators(std::ostream& os, const BemOperators& ops) {
  const auto M = ops.V().rows();
  const auto P = ops.K().cols();
  nlohmann::json header = {
      {"format_version", 1},
      {"kind", "acbem-bem-operators"},
      {"dtype", "float64"},
      {"byte_order", std::endian::native == std::endian::little ? "little" : "big"},
      {"layout", "row-major"},
      {"panels", M},
      {"vertices", P},
      {"blocks", {{{"name", "V"}, {"rows", M}, {"cols", M}},
                  {{"name", "K"}, {"rows", M}, {"cols", P}},
                  {{"name", "mass"}, {"rows", M}, {"cols", P}},
                  {{"name", "w_eq"}, {"rows", M}, {"cols", 1}},
                  {{"name", "S"}, {"rows", P}, {"cols", P}}}},
  };
  os << header.dump() << '\n';
  write_block(os, ops.V());
  write_block(os, ops.K());
  write_block(os, ops.mass());
  write_block(os, ops.w_eq());
  write_block(os, ops.steklov_form());
}

void write_operators(const std::string& path, const BemOperators& ops) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_operators: cannot open " + path);
  write_operators(os, ops);
}

OperatorDump read_operators(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("read_operators: missing header");
  OperatorDump d;
  d.header = nlohmann::json::parse(line);
  if (d.header.value("format_version", 0) != 1) throw Error("read_operators: unsupported format_version");
  const Eigen::Index M = d.header.at("panels").get<Eigen::Index>();
  const Eigen::Index P = d.header.at("vertices").get<Eigen::Index>();
  d.V = read_block(is, M, M);
  d.K = read_block(is, M, P);
  d.mass = read_block(is, M, P);
  d.w_eq = read_block(is, M, 1);
  d.S = read_block(is, P, P);
  return d;
}

OperatorDump read_operators(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_operators: cannot open " + path);
  return read_operators(is);
}

}  // namespace acbem

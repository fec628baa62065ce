#pragma once

// P0 Galerkin boundary elements for the exterior Laplace problem on a closed polygon:
// single and double layer matrices, equilibrium density, star projection, the discrete
// Steklov-Poincaré map and the H^{1/2} norm of P1 traces.

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "acbem/lattice.hpp"

namespace acbem {

class FemMesh;

struct Panel {
  Vec2 a, b;
  double length;
  Vec2 tangent;
  Vec2 normal;  ///< outward, (t_y, −t_x) for a counter-clockwise loop
  Vec2 midpoint() const { return 0.5 * (a + b); }
};

/// Closed counter-clockwise polygon; panel k runs from vertex k to vertex k+1 mod P.
class BoundaryMesh {
 public:
  /// Throws MeshError for fewer than three vertices, a zero-length panel or clockwise orientation.
  explicit BoundaryMesh(std::vector<Vec2> vertices);

  static BoundaryMesh from_fem(const FemMesh& mesh);
  static BoundaryMesh regular_polygon(int M, double radius = 1.0, double phase = 0.0);

  std::size_t size() const { return vertices_.size(); }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Panel& panel(std::size_t k) const { return panels_[k]; }
  const std::vector<Panel>& panels() const { return panels_; }

  double length() const;
  double diameter() const { return diameter_; }
  double signed_area() const;
  BoundaryMesh scaled(double R) const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<Panel> panels_;
  double diameter_ = 0.0;
};

/// V_kl = ∫_k ∫_l −(1/2π) log|x − y|, closed form.
Eigen::MatrixXd assemble_single_layer(const BoundaryMesh& bm);
/// K_kv = ∫_k ∫_Γ φ_v(y) ∂_{n(y)} G(x, y), closed form, P1 hat φ_v on the vertices.
Eigen::MatrixXd assemble_double_layer(const BoundaryMesh& bm);
/// M_kv = ∫_k φ_v.
Eigen::MatrixXd boundary_mass(const BoundaryMesh& bm);
/// ∫_Γ φ_a φ_b for P1 traces.
Eigen::MatrixXd boundary_l2_mass(const BoundaryMesh& bm);

/// Single-layer entry for one panel pair.
double single_layer_entry(const Panel& p, const Panel& q, bool same);
/// Double-layer contributions of target panel p against source panel q: (start vertex, end vertex).
std::pair<double, double> double_layer_entries(const Panel& p, const Panel& q);

/// Solves V w = c·1 with ⟨w, 1⟩ = 1 as a bordered system. Throws SingularSystemError.
Eigen::VectorXd equilibrium_density(const Eigen::MatrixXd& V, const BoundaryMesh& bm);

/// trace − ⟨trace, w_eq⟩.
Eigen::VectorXd project_star(const Eigen::VectorXd& trace, const Eigen::VectorXd& w_eq,
                             const BoundaryMesh& bm);
/// ⟨density, trace⟩_Γ for a P0 density and a P1 trace.
double boundary_pairing(const Eigen::VectorXd& density, const Eigen::VectorXd& trace,
                        const BoundaryMesh& bm);

class BemOperators {
 public:
  explicit BemOperators(BoundaryMesh bm);

  const BoundaryMesh& mesh() const { return bm_; }
  const Eigen::MatrixXd& V() const { return V_; }
  const Eigen::MatrixXd& K() const { return K_; }
  const Eigen::MatrixXd& mass() const { return M_; }
  const Eigen::VectorXd& w_eq() const { return w_eq_; }
  /// c with ⟨trace, w_eq⟩ = cᵀ trace.
  const Eigen::VectorXd& gauge() const { return gauge_; }
  /// Dense P×P matrix with uᵀSu = ⟨g_h^{-1}(Pu), Pu⟩.
  const Eigen::MatrixXd& steklov_form() const { return S_; }

  Eigen::VectorXd project_star(const Eigen::VectorXd& trace) const;
  /// g_h^{-1}: the exterior Neumann density v with V v = (½M − K) trace on the star subspace.
  Eigen::VectorXd steklov_apply(const Eigen::VectorXd& trace) const;
  /// ⟨g_h^{-1}(Pu), Pu⟩ from a fresh solve (no use of the assembled form).
  double quadratic_form(const Eigen::VectorXd& trace) const;

  /// Exterior representation u(x) = ∫ u ∂_n G + ∫ G v at a point off Γ.
  double exterior_field(const Vec2& x, const Eigen::VectorXd& trace, const Eigen::VectorXd& density) const;

 private:
  BoundaryMesh bm_;
  Eigen::MatrixXd V_, K_, M_, S_;
  Eigen::VectorXd w_eq_, gauge_;
  Eigen::PartialPivLU<Eigen::MatrixXd> bordered_;
};

/// S from the operators, symmetrised. Throws Error if S has an eigenvalue below −1e-10 (relative)
/// on the complement of ker(mass), the traces the P0 pairing can resolve.
Eigen::MatrixXd boundary_quadratic_form(const BemOperators& ops);

/// Gagliardo matrix G with fᵀGf = ∫∫ |f(x) − f(y)|²/|x − y|² for P1 traces.
Eigen::MatrixXd gagliardo_matrix(const BoundaryMesh& bm, int max_depth = 12);

/// Gram matrix of the rescaled norm: [½ diam]^{-1} L² mass + Gagliardo.
Eigen::MatrixXd half_norm_gram(const BoundaryMesh& bm);

double half_seminorm_squared(const Eigen::VectorXd& trace, const BoundaryMesh& bm);
/// ([½ diam]^{-1}‖f‖²_{L²} + |f|²_{H^{1/2}})^{1/2}.
double fractional_half_norm(const Eigen::VectorXd& trace, const BoundaryMesh& bm);

/// Binary dump: a one-line JSON header, then V, K, mass, w_eq and S as row-major doubles.
void write_operators(std::ostream& os, const BemOperators& ops);
void write_operators(const std::string& path, const BemOperators& ops);

struct OperatorDump {
  nlohmann::json header;
  Eigen::MatrixXd V, K, mass, S;
  Eigen::VectorXd w_eq;
};
OperatorDump read_operators(std::istream& is);
OperatorDump read_operators(const std::string& path);

}  // namespace acbem

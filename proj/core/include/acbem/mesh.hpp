#pragma once

// Graded P1 mesh T_h(K, N): canonical triangles around the atomistic region,
// hexagonal rings of coarsening then refining elements, and a canonical collar
// next to the hexagonal outer boundary.

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "acbem/lattice.hpp"
#include "acbem/potential.hpp"

namespace acbem {

struct Triangle {
  std::array<int, 3> v;
  Region cls = Region::Continuum;
  bool canonical = false;
  double area = 0.0;
  /// Fraction of the triangle covered by Ω^c (outside every Voronoi cell of A ∪ I).
  double continuum_weight = 1.0;
  /// Gradients of the three P1 hat functions on the triangle.
  std::array<Vec2, 3> grad;
};

/// One hexagonal ring of the grading: radius and vertex spacing.
struct Ring {
  int radius;
  int spacing;
};

class FemMesh {
 public:
  double K() const { return K_; }
  double N() const { return N_; }
  /// Hexagon radius up to which every triangle is canonical.
  int core_radius() const { return core_radius_; }
  /// Hexagon radius of Γ_h.
  int outer_radius() const { return outer_radius_; }

  const RegionDecomposition& decomposition() const { return decomp_; }
  const SiteSet& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }
  Vec2 node_position(std::size_t k) const { return position(nodes_[k]); }

  const std::vector<Triangle>& triangles() const { return triangles_; }
  /// Boundary vertex indices, counter-clockwise; panel k joins boundary[k] and boundary[k+1 mod P].
  const std::vector<int>& boundary() const { return boundary_; }
  const std::vector<Ring>& rings() const { return rings_; }
  /// is_boundary()[k] for node k.
  const std::vector<bool>& is_boundary() const { return is_boundary_; }

  double area() const;
  double continuum_area() const;
  /// Longest edge of triangle t.
  double diameter(std::size_t t) const;

  friend FemMesh build_mesh(double K, double N);
  friend FemMesh mesh_from_parts(double K, double N, const RegionDecomposition& decomp,
                                 std::vector<Site> nodes, std::vector<std::array<int, 3>> tris,
                                 std::vector<int> boundary);

 private:
  void finalise(std::vector<std::array<int, 3>> tris);

  double K_ = 0.0, N_ = 0.0;
  int core_radius_ = 0, outer_radius_ = 0;
  RegionDecomposition decomp_;
  SiteSet nodes_;
  std::vector<Triangle> triangles_;
  std::vector<int> boundary_;
  std::vector<bool> is_boundary_;
  std::vector<Ring> rings_;
};

/// Hexagon radius of Γ_h for given (K, N): the smallest lattice hexagon with inner radius ≥ N
/// that also contains the canonical core.
int outer_hex_radius(double K, double N);

/// The ring schedule from the canonical core to Γ_h. Each ring after the first is reached from
/// the previous one by a band of width equal to the previous spacing.
std::vector<Ring> grading_schedule(int core_radius, int outer_radius, double K);

/// Throws MeshError if N < K or K < 2.
FemMesh build_mesh(double K, double N);

/// Assembles a mesh from explicit parts (used by tests and by mesh readers).
FemMesh mesh_from_parts(double K, double N, const RegionDecomposition& decomp,
                        std::vector<Site> nodes, std::vector<std::array<int, 3>> tris,
                        std::vector<int> boundary);

struct MeshQuality {
  double max_shape = 0.0;  ///< max diam(T)²/|T|
  double max_h = 0.0;
  double min_h = 0.0;
  double boundary_ratio = 0.0;  ///< longest / shortest boundary panel
  double min_panel = 0.0;
  double max_panel = 0.0;
  long euler = 0;  ///< V − E + F
  bool boundary_aligned = false;  ///< every panel is a unit lattice edge
};

MeshQuality mesh_quality(const FemMesh& mesh);

/// Π_h u: nodal values u(x_k) − f₀ where f₀ = Σ_b gauge[b]·u(x_{boundary[b]}).
/// An empty gauge vector applies no shift.
Eigen::VectorXd nodal_interpolant(const std::function<double(const Vec2&)>& u, const FemMesh& mesh,
                                  const Eigen::VectorXd& gauge = {});

/// Σ_{T} w_T |T| W(∇u|_T) over the continuum part of Ω_h and its derivative.
std::pair<double, Eigen::VectorXd> fem_energy_gradient(const Eigen::VectorXd& u, const FemMesh& mesh,
                                                       const CauchyBorn& W);
double fem_energy(const Eigen::VectorXd& u, const FemMesh& mesh, const CauchyBorn& W);
void add_fem_hessian(const Eigen::VectorXd& u, const FemMesh& mesh, const CauchyBorn& W,
                     std::vector<Eigen::Triplet<double>>& trip);

/// ∇u on triangle t.
Vec2 element_gradient(const FemMesh& mesh, std::size_t t, const Eigen::VectorXd& u);

/// Full-area P1 stiffness matrix ∫_{Ω_h} ∇φ_a·∇φ_b.
Eigen::SparseMatrix<double> fem_stiffness(const FemMesh& mesh);

/// Text dump: header, nodes (i j x y), triangles (a b c class weight), boundary loop.
void write_mesh(std::ostream& os, const FemMesh& mesh, const Eigen::VectorXd* values = nullptr);
void write_mesh(const std::string& path, const FemMesh& mesh, const Eigen::VectorXd* values = nullptr);

}  // namespace acbem

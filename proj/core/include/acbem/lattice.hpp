#pragma once

// Triangular lattice Λ = A Z², its nearest-neighbour stencil and the
// atomistic / interface / continuum site decomposition.

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace acbem {

using Vec2 = Eigen::Vector2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Volume of the unit cell of the triangular lattice.
inline constexpr double kCellVolume = std::numbers::sqrt3 / 2.0;

/// A lattice site in integer coordinates of the basis A = [(1,0), (1/2, √3/2)].
struct Site {
  int i = 0;
  int j = 0;

  constexpr Site operator+(Site o) const { return {i + o.i, j + o.j}; }
  constexpr Site operator-(Site o) const { return {i - o.i, j - o.j}; }
  constexpr Site operator-() const { return {-i, -j}; }
  constexpr auto operator<=>(const Site&) const = default;
};

/// Integer offsets of the six nearest-neighbour directions a_1..a_6 (stored 0..5).
inline constexpr std::array<Site, 6> kNeighbourOffsets = {
    Site{1, 0}, Site{0, 1}, Site{-1, 1}, Site{-1, 0}, Site{0, -1}, Site{1, -1}};

inline constexpr int wrap6(int j) { return ((j % 6) + 6) % 6; }

Vec2 position(Site s);

/// Unit vectors a_j = Q6^{j} a_1, j = 0..5.
const std::array<Vec2, 6>& directions();

/// Rotation by π/3.
Eigen::Matrix2d rotation_q6();

/// Lattice-hexagon distance of a site from the origin, max(|i|, |j|, |i+j|).
int hex_radius(Site s);

/// Sites of the hexagon ring at hexagon radius r, counter-clockwise starting at (r, 0).
std::vector<Site> hex_ring(int r, int spacing = 1);

/// Sorted set of lattice sites with O(1) lookup.
///
/// Sites are kept in lexicographic order of (i, j) so that every vector indexed
/// by a SiteSet is reproducible across runs.
class SiteSet {
 public:
  SiteSet() = default;
  explicit SiteSet(std::vector<Site> sites);

  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  const Site& operator[](std::size_t k) const { return sites_[k]; }
  std::span<const Site> sites() const { return sites_; }
  auto begin() const { return sites_.begin(); }
  auto end() const { return sites_.end(); }

  std::optional<std::size_t> find(Site s) const;
  bool contains(Site s) const { return find(s).has_value(); }

 private:
  std::vector<Site> sites_;
  int i_min_ = 0, j_min_ = 0, i_extent_ = 0, j_extent_ = 0;
  std::vector<std::int32_t> lookup_;
};

/// All ℓ ∈ Λ with |ℓ| ≤ radius, lexicographic order.
SiteSet generate_sites(double radius);

/// All ℓ with hex_radius(ℓ) ≤ r.
SiteSet hexagon_sites(int r);

/// Du(ℓ) = (u(ℓ + a_j) − u(ℓ))_j for a field stored on `domain`.
/// Throws MissingNeighbourError if a neighbour is not in the domain.
Vec6 finite_difference(const SiteSet& domain, const Eigen::VectorXd& u, Site s);

enum class Region : std::uint8_t { Atomistic, Interface, Continuum };

const char* to_string(Region r);

/// The (A, I, C) split of Λ. C is the implicit complement of A ∪ I.
class RegionDecomposition {
 public:
  /// Builds I from an arbitrary atomistic set and checks the interface geometry.
  /// Throws A0ViolationError naming the first offending interface site.
  static RegionDecomposition from_atomistic_set(SiteSet atomistic, double K);

  double K() const { return K_; }
  /// Hexagon radius of A, or -1 when A was hand-built.
  int atomistic_hex_radius() const { return hex_radius_; }

  const SiteSet& atomistic() const { return atomistic_; }
  const SiteSet& interface() const { return interface_; }

  Region region(Site s) const;

 private:
  double K_ = 0.0;
  int hex_radius_ = -1;
  SiteSet atomistic_;
  SiteSet interface_;

  friend RegionDecomposition decompose_regions(double K, const SiteSet& sites);
};

/// Smallest lattice-hexagon radius whose hexagon contains B_K ∩ Λ.
int atomistic_hex_radius_for(double K);

/// Hexagonal atomistic region containing B_K ∩ Λ with one interface shell.
/// `sites` must contain A ∪ I and every neighbour of I.
RegionDecomposition decompose_regions(double K, const SiteSet& sites);

/// One lattice triangle, vertices counter-clockwise.
struct LatticeTriangle {
  std::array<Site, 3> v;
};

/// Canonical triangles with every vertex at hexagon radius ≤ r.
std::vector<LatticeTriangle> canonical_triangles(int r);

/// Class of a canonical triangle with respect to a decomposition (T_A, T_I, T_C).
Region triangle_class(const LatticeTriangle& t, const RegionDecomposition& d);

nlohmann::json to_json(const SiteSet& s);
nlohmann::json to_json(const RegionDecomposition& d);
SiteSet site_set_from_json(const nlohmann::json& j);

}  // namespace acbem

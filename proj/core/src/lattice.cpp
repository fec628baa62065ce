#include "acbem/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "acbem/error.hpp"

namespace acbem {

Vec2 position(Site s) {
  return {s.i + 0.5 * s.j, 0.5 * std::numbers::sqrt3 * s.j};
}

const std::array<Vec2, 6>& directions() {
  static const std::array<Vec2, 6> dirs = [] {
    std::array<Vec2, 6> d;
    for (int j = 0; j < 6; ++j) d[j] = position(kNeighbourOffsets[j]);
    return d;
  }();
  return dirs;
}

Eigen::Matrix2d rotation_q6() {
  const double c = 0.5, s = 0.5 * std::numbers::sqrt3;
  Eigen::Matrix2d q;
  q << c, -s, s, c;
  return q;
}

int hex_radius(Site s) {
  return std::max({std::abs(s.i), std::abs(s.j), std::abs(s.i + s.j)});
}

std::vector<Site> hex_ring(int r, int spacing) {
  if (r == 0) return {Site{0, 0}};
  if (spacing <= 0 || r % spacing != 0)
    throw DomainError("hex_ring: spacing must divide the ring radius");
  // Side k runs from corner k along direction a_{k+3 mod 6} (0-based a_2, a_3, ...).
  static constexpr std::array<int, 6> side_dir = {2, 3, 4, 5, 0, 1};
  std::vector<Site> ring;
  ring.reserve(6 * r / spacing);
  Site cursor{r, 0};
  for (int side = 0; side < 6; ++side) {
    const Site step = kNeighbourOffsets[side_dir[side]];
    for (int k = 0; k < r / spacing; ++k) {
      ring.push_back(cursor);
      cursor = cursor + Site{step.i * spacing, step.j * spacing};
    }
  }
  return ring;
}

SiteSet::SiteSet(std::vector<Site> sites) : sites_(std::move(sites)) {
  std::sort(sites_.begin(), sites_.end());
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  if (sites_.empty()) return;
  int i_max = sites_.front().i, j_max = sites_.front().j;
  i_min_ = i_max;
  j_min_ = j_max;
  for (const Site& s : sites_) {
    i_min_ = std::min(i_min_, s.i);
    i_max = std::max(i_max, s.i);
    j_min_ = std::min(j_min_, s.j);
    j_max = std::max(j_max, s.j);
  }
  i_extent_ = i_max - i_min_ + 1;
  j_extent_ = j_max - j_min_ + 1;
  lookup_.assign(static_cast<std::size_t>(i_extent_) * j_extent_, -1);
  for (std::size_t k = 0; k < sites_.size(); ++k) {
    const Site& s = sites_[k];
    lookup_[static_cast<std::size_t>(s.i - i_min_) * j_extent_ + (s.j - j_min_)] =
        static_cast<std::int32_t>(k);
  }
}

std::optional<std::size_t> SiteSet::find(Site s) const {
  const int di = s.i - i_min_, dj = s.j - j_min_;
  if (di < 0 || dj < 0 || di >= i_extent_ || dj >= j_extent_) return std::nullopt;
  const std::int32_t k = lookup_[static_cast<std::size_t>(di) * j_extent_ + dj];
  if (k < 0) return std::nullopt;
  return static_cast<std::size_t>(k);
}

SiteSet generate_sites(double radius) {
  if (!(radius > 0.0)) throw DomainError("generate_sites: radius must be positive");
  // |ℓ| ≥ (√3/2)·hex_radius(ℓ), so hex radius ≤ 2r/√3 bounds the search box.
  const int box = static_cast<int>(std::ceil(2.0 * radius / std::numbers::sqrt3)) + 1;
  const double r2 = radius * radius * (1.0 + 1e-12);
  std::vector<Site> out;
  for (int i = -box; i <= box; ++i)
    for (int j = -box; j <= box; ++j) {
      const Site s{i, j};
      if (position(s).squaredNorm() <= r2) out.push_back(s);
    }
  return SiteSet(std::move(out));
}

SiteSet hexagon_sites(int r) {
  std::vector<Site> out;
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j)
      if (hex_radius({i, j}) <= r) out.push_back({i, j});
  return SiteSet(std::move(out));
}

Vec6 finite_difference(const SiteSet& domain, const Eigen::VectorXd& u, Site s) {
  const auto centre = domain.find(s);
  if (!centre)
    throw MissingNeighbourError("finite_difference: site (" + std::to_string(s.i) + "," +
                                std::to_string(s.j) + ") not in domain");
  Vec6 d;
  for (int j = 0; j < 6; ++j) {
    const auto nb = domain.find(s + kNeighbourOffsets[j]);
    if (!nb)
      throw MissingNeighbourError("finite_difference: neighbour " + std::to_string(j + 1) +
                                  " of (" + std::to_string(s.i) + "," + std::to_string(s.j) +
                                  ") outside the stored domain");
    d[j] = u[*nb] - u[*centre];
  }
  return d;
}

const char* to_string(Region r) {
  switch (r) {
    case Region::Atomistic: return "atomistic";
    case Region::Interface: return "interface";
    case Region::Continuum: return "continuum";
  }
  return "?";
}

Region RegionDecomposition::region(Site s) const {
  if (atomistic_.contains(s)) return Region::Atomistic;
  if (interface_.contains(s)) return Region::Interface;
  return Region::Continuum;
}

RegionDecomposition RegionDecomposition::from_atomistic_set(SiteSet atomistic, double K) {
  RegionDecomposition d;
  d.K_ = K;
  std::vector<Site> iface;
  for (const Site& a : atomistic)
    for (const Site& off : kNeighbourOffsets) {
      const Site n = a + off;
      if (!atomistic.contains(n)) iface.push_back(n);
    }
  d.atomistic_ = std::move(atomistic);
  d.interface_ = SiteSet(std::move(iface));

  for (const Site& s : d.interface_) {
    int n_iface = 0, n_cont = 0;
    for (const Site& off : kNeighbourOffsets) {
      const Site n = s + off;
      if (d.interface_.contains(n)) ++n_iface;
      else if (!d.atomistic_.contains(n)) ++n_cont;
    }
    if (n_iface != 2 || n_cont < 1) {
      throw A0ViolationError("interface site (" + std::to_string(s.i) + "," +
                                 std::to_string(s.j) + ") has " + std::to_string(n_iface) +
                                 " interface and " + std::to_string(n_cont) +
                                 " continuum neighbours",
                             s.i, s.j);
    }
  }
  return d;
}

int atomistic_hex_radius_for(double K) {
  int r = 0;
  const double k2 = K * K * (1.0 + 1e-12);
  const int box = static_cast<int>(std::ceil(2.0 * K / std::numbers::sqrt3)) + 1;
  for (int i = -box; i <= box; ++i)
    for (int j = -box; j <= box; ++j)
      if (position({i, j}).squaredNorm() <= k2) r = std::max(r, hex_radius({i, j}));
  return r;
}

RegionDecomposition decompose_regions(double K, const SiteSet& sites) {
  if (!(K >= 2.0)) throw DomainError("decompose_regions: K must be at least 2");
  const int r = atomistic_hex_radius_for(K);
  for (const Site& s : hexagon_sites(r + 2))
    if (!sites.contains(s))
      throw DomainError("decompose_regions: site set does not cover the interface halo");
  RegionDecomposition d = RegionDecomposition::from_atomistic_set(hexagon_sites(r), K);
  d.hex_radius_ = r;
  return d;
}

std::vector<LatticeTriangle> canonical_triangles(int r) {
  std::vector<LatticeTriangle> tris;
  for (int i = -r - 1; i <= r; ++i)
    for (int j = -r - 1; j <= r; ++j) {
      const Site p{i, j};
      const LatticeTriangle up{{p, p + Site{1, 0}, p + Site{0, 1}}};
      const LatticeTriangle down{{p + Site{1, 0}, p + Site{1, 1}, p + Site{0, 1}}};
      for (const auto& t : {up, down})
        if (std::all_of(t.v.begin(), t.v.end(), [r](Site s) { return hex_radius(s) <= r; }))
          tris.push_back(t);
    }
  return tris;
}

Region triangle_class(const LatticeTriangle& t, const RegionDecomposition& d) {
  bool touches_a = false, touches_i = false, touches_c = false;
  for (const Site& s : t.v) {
    switch (d.region(s)) {
      case Region::Atomistic: touches_a = true; break;
      case Region::Interface: touches_i = true; break;
      case Region::Continuum: touches_c = true; break;
    }
  }
  if (!touches_i && !touches_c) return Region::Atomistic;
  if (!touches_i && !touches_a) return Region::Continuum;
  return Region::Interface;
}

nlohmann::json to_json(const SiteSet& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Site& x : s) arr.push_back({x.i, x.j});
  return arr;
}

nlohmann::json to_json(const RegionDecomposition& d) {
  nlohmann::json sites = nlohmann::json::array();
  for (const Site& s : d.atomistic()) sites.push_back({{"i", s.i}, {"j", s.j}, {"region", "atomistic"}});
  for (const Site& s : d.interface()) sites.push_back({{"i", s.i}, {"j", s.j}, {"region", "interface"}});
  return {{"format_version", 1},
          {"K", d.K()},
          {"atomistic_hex_radius", d.atomistic_hex_radius()},
          {"sites", sites}};
}

SiteSet site_set_from_json(const nlohmann::json& j) {
  std::vector<Site> out;
  for (const auto& e : j) out.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  return SiteSet(std::move(out));
}

}  // namespace acbem

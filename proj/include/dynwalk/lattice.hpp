#pragma once

// Lattice geometry: sites of Z^d (d <= 4), canonical undirected edges, and
// the torus [-M,M]^d reduction that turns a walk on Z^d into a walk over a
// periodic environment.

#include <array>
#include <cstdint>
#include <functional>

#include "dynwalk/errors.hpp"
#include "dynwalk/rng.hpp"

namespace dynwalk {

inline constexpr int kMaxDim = 4;

struct Site {
  std::array<std::int64_t, kMaxDim> c{};

  bool operator==(const Site&) const = default;
};

// Undirected edge {site, site + e_axis}, stored via its lower endpoint along
// the axis. axis is 1-based to match the e_1..e_d convention.
struct Edge {
  Site site;
  int axis = 1;

  bool operator==(const Edge&) const = default;
};

struct EdgeLess {
  bool operator()(const Edge& a, const Edge& b) const {
    for (int i = 0; i < kMaxDim; ++i) {
      if (a.site.c[i] != b.site.c[i]) return a.site.c[i] < b.site.c[i];
    }
    return a.axis < b.axis;
  }
};

struct EdgeHash {
  std::size_t operator()(const Edge& e) const {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(e.axis + 1);
    for (int i = 0; i < kMaxDim; ++i)
      h = detail::splitmix64(h ^ static_cast<std::uint64_t>(e.site.c[i]));
    return static_cast<std::size_t>(h);
  }
};

struct Geometry {
  int d = 1;
  bool torus = false;
  int M = 0;  // torus half-width; sites live in [-M, M]^d

  static Geometry lattice(int d) {
    if (d < 1 || d > kMaxDim) throw ConstructionError("geometry: d must be in [1,4]");
    return Geometry{d, false, 0};
  }

  static Geometry torus_geometry(int d, int M) {
    if (d < 1 || d > kMaxDim) throw ConstructionError("geometry: d must be in [1,4]");
    if (M < 2) throw ConstructionError("geometry: torus requires M >= 2");
    return Geometry{d, true, M};
  }

  std::int64_t period() const { return 2 * static_cast<std::int64_t>(M) + 1; }

  std::int64_t reduce_coord(std::int64_t x) const {
    std::int64_t p = period();
    std::int64_t r = (x + M) % p;
    if (r < 0) r += p;
    return r - M;
  }
};

inline Site neighbor(const Site& x, int axis, int sign) {
  Site y = x;
  y.c[axis - 1] += sign;
  return y;
}

// Edge from x toward sign * e_axis; stored canonically by lower endpoint.
inline Edge incident_edge(const Site& x, int axis, int sign) {
  if (sign > 0) return Edge{x, axis};
  return Edge{neighbor(x, axis, -1), axis};
}

// On the torus the base site is reduced into the fundamental domain, so all
// periodic translates of an edge share one representative; on Z^d, identity.
inline Edge canonical_edge(const Geometry& g, Edge e) {
  if (!g.torus) return e;
  for (int i = 0; i < g.d; ++i) e.site.c[i] = g.reduce_coord(e.site.c[i]);
  return e;
}

}  // namespace dynwalk

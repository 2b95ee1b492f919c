#pragma once

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "tpmg/types.hpp"

namespace tpmg {

/// Great-circle arc length between two unit vectors.
template <typename Scalar>
Scalar arc_length(const Vector3<Scalar>& a, const Vector3<Scalar>& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

/// Spherical triangle area by L'Huilier's theorem.
template <typename Scalar>
Scalar spherical_triangle_area(const Vector3<Scalar>& v0, const Vector3<Scalar>& v1,
                               const Vector3<Scalar>& v2) {
  const Scalar a = arc_length<Scalar>(v1, v2);
  const Scalar b = arc_length<Scalar>(v2, v0);
  const Scalar c = arc_length<Scalar>(v0, v1);
  const Scalar s = (a + b + c) / Scalar(2);
  const Scalar t = std::tan(s / 2) * std::tan((s - a) / 2) * std::tan((s - b) / 2) *
                   std::tan((s - c) / 2);
  return Scalar(4) * std::atan(std::sqrt(std::max(t, Scalar(0))));
}

// Triangulated sphere surface at one refinement level. Cells are spherical
// triangles; every geometric factor the finite-volume assembly needs is
// precomputed here. Immutable after construction.
template <typename Scalar>
struct HorizontalGrid {
  int level = 0;

  Matrix3X<Scalar> vertices;  // unit vectors
  Index3X tri;                // vertex indices per cell, outward orientation

  Matrix3X<Scalar> centers;  // normalised vertex centroids
  Vector<Scalar> areas;      // spherical excess, steradian

  // Edge j of cell T is the one opposite tri(j, T).
  Index3X neighbors;   // neighbors(j, T): cell across edge j
  Index3X cell_edges;  // cell_edges(j, T): global edge id of edge j

  // Each edge appears once, oriented from cell_a to cell_b (cell_a < cell_b).
  IndexVector edge_cell_a, edge_cell_b;
  IndexVector edge_vert_a, edge_vert_b;
  Vector<Scalar> edge_lengths;    // great-circle arcs
  Matrix3X<Scalar> edge_normals;  // unit, tangent at midpoint, a -> b
  Matrix3X<Scalar> edge_midpoints;

  Index n_cells() const { return tri.cols(); }
  Index n_edges() const { return edge_cell_a.size(); }

  /// |S_TT'| n_TT'.(center_b - center_a) / |center_b - center_a|^2 for edge e.
  Scalar edge_geometry_factor(Index e) const {
    const Vector3<Scalar> chord =
        centers.col(edge_cell_b[e]) - centers.col(edge_cell_a[e]);
    return edge_lengths[e] * edge_normals.col(e).dot(chord) / chord.squaredNorm();
  }
};

// Nested icosahedral grids; the children of coarse cell i are the fine cells
// 4i..4i+3, with 4i+3 the central (medial) triangle.
template <typename Scalar>
struct GridHierarchy {
  std::vector<HorizontalGrid<Scalar>> grids;

  // colinear_edges[l](,:e): the two fine edges (level l+1) that tile coarse
  // edge e of level l.
  std::vector<Index2X> colinear_edges;

  int finest_level() const { return static_cast<int>(grids.size()) - 1; }
  const HorizontalGrid<Scalar>& grid(int level) const {
    return grids[static_cast<std::size_t>(level)];
  }
  const HorizontalGrid<Scalar>& finest() const { return grids.back(); }

  static Index parent_of(Index fine_cell) { return fine_cell / 4; }
  static Index child_of(Index coarse_cell, int j) { return 4 * coarse_cell + j; }
};

enum class VerticalGrading { uniform, geometric };

// 1D radial grid for the shell [1, 1+H], in units of the planet radius.
// Faces k = 0..n_r bound cells k = 0..n_r-1; sigma masks the boundary faces
// to enforce homogeneous Neumann conditions.
template <typename Scalar>
struct VerticalGrid {
  Index n_r = 0;
  Scalar depth = 0;        // H
  Vector<Scalar> r;        // face radii, size n_r+1, r[0]=1, r[n_r]=1+H
  Vector<Scalar> volumes;  // v_k = (r_{k+1}^3 - r_k^3)/3, size n_r
  Vector<Scalar> sigma;    // face masks, size n_r+1, 0 at both boundaries

  Scalar r_half(Index k) const { return (r[k] + r[k + 1]) / Scalar(2); }
  /// Half level below face k (clamped at the bottom; masked there anyway).
  Scalar r_half_below(Index k) const {
    return k == 0 ? r[0] : (r[k - 1] + r[k]) / Scalar(2);
  }
};

namespace detail {

template <typename Scalar>
HorizontalGrid<Scalar> base_icosahedron() {
  using V3 = Vector3<Scalar>;
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;

  HorizontalGrid<Scalar> g;
  g.level = 0;
  g.vertices.resize(3, 12);
  g.vertices.col(0) = V3(0, 0, 1);
  g.vertices.col(11) = V3(0, 0, -1);
  const Scalar lat = std::atan(Scalar(0.5));
  for (int j = 0; j < 5; ++j) {
    const Scalar lon_u = Scalar(2) * pi * Scalar(j) / Scalar(5);
    const Scalar lon_l = Scalar(2) * pi * (Scalar(j) + Scalar(0.5)) / Scalar(5);
    g.vertices.col(1 + j) =
        V3(std::cos(lat) * std::cos(lon_u), std::cos(lat) * std::sin(lon_u), std::sin(lat));
    g.vertices.col(6 + j) =
        V3(std::cos(lat) * std::cos(lon_l), std::cos(lat) * std::sin(lon_l), -std::sin(lat));
  }

  g.tri.resize(3, 20);
  Index t = 0;
  auto U = [](int j) { return Index(1 + (j % 5)); };
  auto Lo = [](int j) { return Index(6 + (j % 5)); };
  for (int j = 0; j < 5; ++j) g.tri.col(t++) = Eigen::Vector3<Index>(0, U(j), U(j + 1));
  for (int j = 0; j < 5; ++j) g.tri.col(t++) = Eigen::Vector3<Index>(U(j), Lo(j), U(j + 1));
  for (int j = 0; j < 5; ++j) g.tri.col(t++) = Eigen::Vector3<Index>(Lo(j), Lo(j + 1), U(j + 1));
  for (int j = 0; j < 5; ++j) g.tri.col(t++) = Eigen::Vector3<Index>(11, Lo(j + 1), Lo(j));

  // Outward (counterclockwise from outside) orientation for every face.
  for (Index c = 0; c < 20; ++c) {
    const V3 v0 = g.vertices.col(g.tri(0, c));
    const V3 v1 = g.vertices.col(g.tri(1, c));
    const V3 v2 = g.vertices.col(g.tri(2, c));
    if (v0.dot(v1.cross(v2)) < Scalar(0)) std::swap(g.tri(1, c), g.tri(2, c));
  }
  return g;
}

// Edge-midpoint subdivision; midpoints are projected back onto the sphere.
template <typename Scalar>
HorizontalGrid<Scalar> refine(const HorizontalGrid<Scalar>& coarse,
                              std::map<std::pair<Index, Index>, Index>& midpoint_of) {
  HorizontalGrid<Scalar> fine;
  fine.level = coarse.level + 1;

  std::vector<Vector3<Scalar>> new_vertices;
  midpoint_of.clear();
  auto midpoint = [&](Index a, Index b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint_of.find(key);
    if (it != midpoint_of.end()) return it->second;
    const Index id = coarse.vertices.cols() + static_cast<Index>(new_vertices.size());
    new_vertices.push_back(
        (coarse.vertices.col(a) + coarse.vertices.col(b)).normalized());
    midpoint_of.emplace(key, id);
    return id;
  };

  fine.tri.resize(3, 4 * coarse.n_cells());
  for (Index c = 0; c < coarse.n_cells(); ++c) {
    const Index v0 = coarse.tri(0, c), v1 = coarse.tri(1, c), v2 = coarse.tri(2, c);
    const Index m01 = midpoint(v0, v1), m12 = midpoint(v1, v2), m20 = midpoint(v2, v0);
    fine.tri.col(4 * c + 0) = Eigen::Vector3<Index>(v0, m01, m20);
    fine.tri.col(4 * c + 1) = Eigen::Vector3<Index>(v1, m12, m01);
    fine.tri.col(4 * c + 2) = Eigen::Vector3<Index>(v2, m20, m12);
    fine.tri.col(4 * c + 3) = Eigen::Vector3<Index>(m01, m12, m20);
  }

  fine.vertices.resize(3, coarse.vertices.cols() + static_cast<Index>(new_vertices.size()));
  fine.vertices.leftCols(coarse.vertices.cols()) = coarse.vertices;
  for (std::size_t i = 0; i < new_vertices.size(); ++i)
    fine.vertices.col(coarse.vertices.cols() + static_cast<Index>(i)) = new_vertices[i];
  return fine;
}

// Centers, areas, edge records, neighbor maps.
template <typename Scalar>
void finalize(HorizontalGrid<Scalar>& g,
              std::map<std::pair<Index, Index>, Index>* edge_of_vertex_pair = nullptr) {
  const Index n = g.n_cells();
  g.centers.resize(3, n);
  g.areas.resize(n);
  for (Index c = 0; c < n; ++c) {
    const Vector3<Scalar> v0 = g.vertices.col(g.tri(0, c));
    const Vector3<Scalar> v1 = g.vertices.col(g.tri(1, c));
    const Vector3<Scalar> v2 = g.vertices.col(g.tri(2, c));
    g.centers.col(c) = (v0 + v1 + v2).normalized();
    g.areas[c] = spherical_triangle_area<Scalar>(v0, v1, v2);
  }

  g.neighbors.setConstant(3, n, Index(-1));
  g.cell_edges.setConstant(3, n, Index(-1));

  // First pass: pair up cells over shared vertex pairs (edge j opposite tri(j,.)).
  std::map<std::pair<Index, Index>, std::pair<Index, int>> first_seen;
  std::vector<std::array<Index, 4>> edge_list;  // cell_a, cell_b, vert_a, vert_b
  for (Index c = 0; c < n; ++c) {
    for (int j = 0; j < 3; ++j) {
      const Index va = g.tri((j + 1) % 3, c);
      const Index vb = g.tri((j + 2) % 3, c);
      const auto key = std::minmax(va, vb);
      auto it = first_seen.find(key);
      if (it == first_seen.end()) {
        first_seen.emplace(key, std::make_pair(c, j));
        continue;
      }
      const auto [c0, j0] = it->second;
      g.neighbors(j0, c0) = c;
      g.neighbors(j, c) = c0;
      const Index e = static_cast<Index>(edge_list.size());
      g.cell_edges(j0, c0) = e;
      g.cell_edges(j, c) = e;
      const Index ca = std::min(c0, c), cb = std::max(c0, c);
      edge_list.push_back({ca, cb, key.first, key.second});
      if (edge_of_vertex_pair) edge_of_vertex_pair->emplace(key, e);
    }
  }

  const Index ne = static_cast<Index>(edge_list.size());
  g.edge_cell_a.resize(ne);
  g.edge_cell_b.resize(ne);
  g.edge_vert_a.resize(ne);
  g.edge_vert_b.resize(ne);
  g.edge_lengths.resize(ne);
  g.edge_normals.resize(3, ne);
  g.edge_midpoints.resize(3, ne);
  for (Index e = 0; e < ne; ++e) {
    const auto [ca, cb, va, vb] = edge_list[static_cast<std::size_t>(e)];
    g.edge_cell_a[e] = ca;
    g.edge_cell_b[e] = cb;
    g.edge_vert_a[e] = va;
    g.edge_vert_b[e] = vb;
    const Vector3<Scalar> pa = g.vertices.col(va), pb = g.vertices.col(vb);
    g.edge_lengths[e] = arc_length<Scalar>(pa, pb);
    g.edge_midpoints.col(e) = (pa + pb).normalized();
    // The in-sphere normal of the edge's great circle is its plane normal;
    // orient it from cell_a towards cell_b.
    Vector3<Scalar> nrm = pa.cross(pb).normalized();
    if (nrm.dot(g.centers.col(cb) - g.centers.col(ca)) < Scalar(0)) nrm = -nrm;
    g.edge_normals.col(e) = nrm;
  }
}

}  // namespace detail

/// Nested icosahedral grids for levels 0..L in canonical orientation
/// (poles on the z axis). Deterministic: equal L gives bit-identical geometry.
template <typename Scalar = double>
GridHierarchy<Scalar> build_icosahedral_hierarchy(int levels) {
  constexpr int max_levels = 9;  // 20*4^9 cells; beyond this is a config error
  if (levels < 0 || levels > max_levels)
    throw config_error("level count must be in [0, " + std::to_string(max_levels) + "]");

  GridHierarchy<Scalar> h;
  h.grids.push_back(detail::base_icosahedron<Scalar>());
  detail::finalize(h.grids[0]);
  for (int l = 0; l < levels; ++l) {
    std::map<std::pair<Index, Index>, Index> midpoint_of;
    HorizontalGrid<Scalar> fine = detail::refine(h.grids.back(), midpoint_of);
    std::map<std::pair<Index, Index>, Index> fine_edge_of;
    detail::finalize(fine, &fine_edge_of);

    const HorizontalGrid<Scalar>& coarse = h.grids.back();
    Index2X colinear(2, coarse.n_edges());
    for (Index e = 0; e < coarse.n_edges(); ++e) {
      const Index va = coarse.edge_vert_a[e], vb = coarse.edge_vert_b[e];
      const Index m = midpoint_of.at(std::minmax(va, vb));
      colinear(0, e) = fine_edge_of.at(std::minmax(va, m));
      colinear(1, e) = fine_edge_of.at(std::minmax(m, vb));
    }
    h.colinear_edges.push_back(std::move(colinear));
    h.grids.push_back(std::move(fine));
  }
  return h;
}

/// Radial grid with n_r cells over depth H. Geometric grading scales each
/// spacing by `ratio` relative to the one below.
template <typename Scalar = double>
VerticalGrid<Scalar> build_vertical_grid(Index n_r, Scalar depth,
                                         VerticalGrading grading = VerticalGrading::uniform,
                                         Scalar ratio = Scalar(1)) {
  if (n_r < 1) throw config_error("vertical grid needs at least one cell");
  if (!(depth > Scalar(0))) throw config_error("vertical depth must be positive");
  if (!(ratio > Scalar(0))) throw config_error("grading ratio must be positive");

  VerticalGrid<Scalar> v;
  v.n_r = n_r;
  v.depth = depth;
  v.r.resize(n_r + 1);
  if (grading == VerticalGrading::uniform || ratio == Scalar(1)) {
    for (Index k = 0; k <= n_r; ++k)
      v.r[k] = Scalar(1) + depth * Scalar(k) / Scalar(n_r);
  } else {
    const Scalar dr0 =
        depth * (ratio - Scalar(1)) / (std::pow(ratio, Scalar(n_r)) - Scalar(1));
    v.r[0] = Scalar(1);
    Scalar dr = dr0;
    for (Index k = 0; k < n_r; ++k, dr *= ratio) v.r[k + 1] = v.r[k] + dr;
  }
  v.r[0] = Scalar(1);
  v.r[n_r] = Scalar(1) + depth;

  v.volumes.resize(n_r);
  for (Index k = 0; k < n_r; ++k)
    v.volumes[k] = (std::pow(v.r[k + 1], Scalar(3)) - std::pow(v.r[k], Scalar(3))) / Scalar(3);

  v.sigma = Vector<Scalar>::Ones(n_r + 1);
  v.sigma[0] = Scalar(0);
  v.sigma[n_r] = Scalar(0);
  return v;
}

/// Mean great-circle edge length: the typical cell diameter at this level.
template <typename Scalar>
Scalar mean_edge_length(const HorizontalGrid<Scalar>& g) {
  return g.edge_lengths.mean();
}

/// FNV-1a 64-bit hash of the cell centers in canonical order.
template <typename Scalar>
std::uint64_t grid_fingerprint(const HorizontalGrid<Scalar>& g) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](double x) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(double));
    std::memcpy(&bits, &x, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffull;
      h *= 0x100000001b3ull;
    }
  };
  for (Index c = 0; c < g.n_cells(); ++c)
    for (int i = 0; i < 3; ++i) mix(static_cast<double>(g.centers(i, c)));
  return h;
}

}  // namespace tpmg

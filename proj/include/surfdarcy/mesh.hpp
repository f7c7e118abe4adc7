#pragma once

#include <surfdarcy/error.hpp>
#include <surfdarcy/geometry.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace surfdarcy {

using Index = std::int64_t;

struct Box {
  Vec3 lo = Vec3::Constant(-1.65);
  Vec3 hi = Vec3::Constant(1.65);
};

/// Structured tetrahedral mesh of a box: n^3 cubes, each split into the
/// six Kuhn tetrahedra sharing the cube diagonal from corner (0,0,0) to
/// corner (1,1,1).
///
/// Vertices and tets are generated from their indices on demand so that the
/// finest levels never materialize the full background mesh. Vertex (i,j,k)
/// has index (i*(n+1) + j)*(n+1) + k; cube (i,j,k) owns tets
/// 6*((i*n + j)*n + k) + m for m = 0..5.
class BackgroundMesh {
public:
  BackgroundMesh() = default;

  BackgroundMesh(const Box &box, Index n_cells) : box_(box), n_(n_cells) {
    if (n_cells < 1)
      throw ConfigError("n_cells must be >= 1");
    for (int d = 0; d < 3; ++d)
      if (!(box.hi[d] > box.lo[d]))
        throw ConfigError("degenerate bounding box");
    // 6 n^3 tets must stay representable
    if (n_cells > 1'000'000 ||
        static_cast<double>(n_cells) * n_cells * n_cells * 6.0 >
            static_cast<double>(std::numeric_limits<Index>::max() / 8))
      throw ConfigError("n_cells = " + std::to_string(n_cells) +
                        " overflows mesh index arithmetic");
    spacing_ = (box.hi - box.lo) / static_cast<double>(n_cells);
  }

  const Box &box() const { return box_; }
  Index n_cells() const { return n_; }
  /// Cube edge length (largest spacing for non-cubic boxes).
  double h() const { return spacing_.maxCoeff(); }
  const Vec3 &spacing() const { return spacing_; }

  Index num_vertices() const { return (n_ + 1) * (n_ + 1) * (n_ + 1); }
  Index num_cubes() const { return n_ * n_ * n_; }
  Index num_tets() const { return 6 * num_cubes(); }

  Index vertex_index(Index i, Index j, Index k) const {
    return (i * (n_ + 1) + j) * (n_ + 1) + k;
  }

  std::array<Index, 3> vertex_ijk(Index v) const {
    const Index k = v % (n_ + 1);
    const Index j = (v / (n_ + 1)) % (n_ + 1);
    const Index i = v / ((n_ + 1) * (n_ + 1));
    return {i, j, k};
  }

  Vec3 vertex(Index v) const {
    const auto [i, j, k] = vertex_ijk(v);
    return box_.lo + Vec3(i * spacing_.x(), j * spacing_.y(), k * spacing_.z());
  }

  Index cube_index(Index i, Index j, Index k) const {
    return (i * n_ + j) * n_ + k;
  }

  std::array<Index, 3> cube_ijk(Index c) const {
    const Index k = c % n_;
    const Index j = (c / n_) % n_;
    const Index i = c / (n_ * n_);
    return {i, j, k};
  }

  /// Positively oriented vertex indices of tet t.
  std::array<Index, 4> tet(Index t) const {
    // axis orders of the Kuhn paths; odd permutations get their last two
    // vertices swapped to keep a positive orientation
    static constexpr int perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                       {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    static constexpr bool odd[6] = {false, true, true, false, false, true};
    const int m = static_cast<int>(t % 6);
    auto ijk = cube_ijk(t / 6);
    std::array<Index, 4> out{};
    out[0] = vertex_index(ijk[0], ijk[1], ijk[2]);
    for (int s = 0; s < 3; ++s) {
      ++ijk[perm[m][s]];
      out[s + 1] = vertex_index(ijk[0], ijk[1], ijk[2]);
    }
    if (odd[m])
      std::swap(out[2], out[3]);
    return out;
  }

  std::array<Vec3, 4> tet_points(Index t) const {
    const auto v = tet(t);
    return {vertex(v[0]), vertex(v[1]), vertex(v[2]), vertex(v[3])};
  }

private:
  Box box_{};
  Index n_ = 1;
  Vec3 spacing_ = Vec3::Ones();
};

inline BackgroundMesh build_background(const Box &box, Index n_cells) {
  return BackgroundMesh(box, n_cells);
}

inline BackgroundMesh refine_uniform(const BackgroundMesh &mesh) {
  return BackgroundMesh(mesh.box(), 2 * mesh.n_cells());
}

inline double signed_volume(const std::array<Vec3, 4> &p) {
  return (p[1] - p[0]).dot((p[2] - p[0]).cross(p[3] - p[0])) / 6.0;
}

/// Sign rule shared by activity detection and surface extraction: exact
/// zeros count as positive.
inline bool is_negative(double phi) { return phi < 0.0; }

/// Background tets on which the P1 interpolant of the level set changes
/// sign, together with the vertices they touch.
struct ActiveMesh {
  BackgroundMesh parent;
  std::vector<Index> active_tets;   // sorted global tet indices
  std::vector<Index> vertices;      // sorted global vertex indices
  std::vector<std::array<int, 4>> tet_vertices; // local vertex numbers
  std::vector<double> vertex_values;            // level set at `vertices`

  double h() const { return parent.h(); }
  std::size_t num_tets() const { return active_tets.size(); }
  std::size_t num_vertices() const { return vertices.size(); }

  std::array<Vec3, 4> tet_points(std::size_t t) const {
    return parent.tet_points(active_tets[t]);
  }

  std::array<double, 4> tet_values(std::size_t t) const {
    const auto &lv = tet_vertices[t];
    return {vertex_values[lv[0]], vertex_values[lv[1]], vertex_values[lv[2]],
            vertex_values[lv[3]]};
  }

  std::array<Index, 4> tet_global_vertices(std::size_t t) const {
    const auto &lv = tet_vertices[t];
    return {vertices[lv[0]], vertices[lv[1]], vertices[lv[2]], vertices[lv[3]]};
  }
};

namespace detail {

inline bool mixed_sign(const std::array<double, 4> &phi) {
  int neg = 0;
  for (double v : phi)
    neg += is_negative(v) ? 1 : 0;
  return neg > 0 && neg < 4;
}

/// Finishes an active mesh from a sorted list of tets and a lookup for
/// vertex values.
template <class ValueOf>
ActiveMesh finish_active(const BackgroundMesh &mesh, std::vector<Index> tets,
                         ValueOf &&value_of) {
  if (tets.empty() || static_cast<Index>(tets.size()) == mesh.num_tets())
    throw ConfigError("surface not resolved / not inside box");
  ActiveMesh am;
  am.parent = mesh;
  am.active_tets = std::move(tets);
  am.vertices.reserve(am.active_tets.size());
  for (Index t : am.active_tets)
    for (Index v : mesh.tet(t))
      am.vertices.push_back(v);
  std::sort(am.vertices.begin(), am.vertices.end());
  am.vertices.erase(std::unique(am.vertices.begin(), am.vertices.end()),
                    am.vertices.end());
  am.tet_vertices.reserve(am.active_tets.size());
  for (Index t : am.active_tets) {
    std::array<int, 4> lv{};
    const auto gv = mesh.tet(t);
    for (int i = 0; i < 4; ++i)
      lv[i] = static_cast<int>(
          std::lower_bound(am.vertices.begin(), am.vertices.end(), gv[i]) -
          am.vertices.begin());
    am.tet_vertices.push_back(lv);
  }
  am.vertex_values.reserve(am.vertices.size());
  for (Index v : am.vertices)
    am.vertex_values.push_back(value_of(v));
  return am;
}

} // namespace detail

/// Active mesh from level-set values at every background vertex.
inline ActiveMesh extract_active(const BackgroundMesh &mesh,
                                 std::span<const double> phi_values) {
  if (static_cast<Index>(phi_values.size()) != mesh.num_vertices())
    throw ConfigError("level set needs one value per background vertex");
  for (double v : phi_values)
    if (!std::isfinite(v))
      throw NumericalError("non-finite level set value");
  std::vector<Index> tets;
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const auto v = mesh.tet(t);
    if (detail::mixed_sign({phi_values[v[0]], phi_values[v[1]],
                            phi_values[v[2]], phi_values[v[3]]}))
      tets.push_back(t);
  }
  return detail::finish_active(mesh, std::move(tets),
                               [&](Index v) { return phi_values[v]; });
}

/// Active mesh for the exact signed distance of `surface`.
///
/// Gives the same result as sampling rho at every vertex, but only visits
/// cubes whose center lies within half a cube diagonal of the surface
/// (rho is 1-Lipschitz, so other cubes cannot change sign).
inline ActiveMesh extract_active(const BackgroundMesh &mesh,
                                 const ImplicitSurface &surface) {
  const Index n = mesh.n_cells();
  const double half_diag = 0.5 * mesh.spacing().norm() * (1.0 + 1e-9);
  std::vector<Index> tets;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) {
        const Vec3 center =
            mesh.box().lo +
            Vec3((i + 0.5) * mesh.spacing().x(), (j + 0.5) * mesh.spacing().y(),
                 (k + 0.5) * mesh.spacing().z());
        if (std::abs(signed_distance(surface, center)) > half_diag)
          continue;
        const Index c = mesh.cube_index(i, j, k);
        for (Index m = 0; m < 6; ++m) {
          const Index t = 6 * c + m;
          const auto v = mesh.tet(t);
          std::array<double, 4> phi{};
          for (int a = 0; a < 4; ++a)
            phi[a] = signed_distance(surface, mesh.vertex(v[a]));
          if (detail::mixed_sign(phi))
            tets.push_back(t);
        }
      }
  return detail::finish_active(mesh, std::move(tets), [&](Index v) {
    return signed_distance(surface, mesh.vertex(v));
  });
}

} // namespace surfdarcy

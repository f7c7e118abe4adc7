#pragma once

#include <surfdarcy/error.hpp>
#include <surfdarcy/lagrange.hpp>
#include <surfdarcy/mesh.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace surfdarcy {

/// Continuous P1 or P2 Lagrange space on an active mesh.
///
/// Global numbering: active vertices in ascending background index, then
/// (for P2) edges in ascending order of their sorted background vertex pair.
/// The space refers to the active mesh it was built on, which must outlive it.
class FESpace {
public:
  FESpace(const ActiveMesh &active, int order) : active_(&active), order_(order) {
    if (order != 1 && order != 2)
      throw ConfigError("FE order must be 1 or 2, got " + std::to_string(order));
    const int nv = static_cast<int>(active.num_vertices());
    std::vector<std::pair<Index, Index>> edges;
    if (order == 2) {
      edges.reserve(6 * active.num_tets());
      for (std::size_t t = 0; t < active.num_tets(); ++t) {
        const auto gv = active.tet_global_vertices(t);
        for (const auto &e : tet_edges)
          edges.emplace_back(std::min(gv[e[0]], gv[e[1]]),
                             std::max(gv[e[0]], gv[e[1]]));
      }
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
    num_dofs_ = nv + static_cast<int>(edges.size());

    cell_dofs_.resize(active.num_tets());
    for (std::size_t t = 0; t < active.num_tets(); ++t) {
      auto &cd = cell_dofs_[t];
      cd.fill(-1);
      const auto &lv = active.tet_vertices[t];
      for (int i = 0; i < 4; ++i)
        cd[i] = lv[i];
      if (order == 2) {
        const auto gv = active.tet_global_vertices(t);
        for (int e = 0; e < 6; ++e) {
          const std::pair<Index, Index> key{
              std::min(gv[tet_edges[e][0]], gv[tet_edges[e][1]]),
              std::max(gv[tet_edges[e][0]], gv[tet_edges[e][1]])};
          cd[4 + e] = nv + static_cast<int>(
                               std::lower_bound(edges.begin(), edges.end(), key) -
                               edges.begin());
        }
      }
    }

    dof_coords_.resize(num_dofs_);
    for (int v = 0; v < nv; ++v)
      dof_coords_[v] = active.parent.vertex(active.vertices[v]);
    for (std::size_t e = 0; e < edges.size(); ++e)
      dof_coords_[nv + e] = 0.5 * (active.parent.vertex(edges[e].first) +
                                   active.parent.vertex(edges[e].second));
  }

  const ActiveMesh &active_mesh() const { return *active_; }
  int order() const { return order_; }
  int num_dofs() const { return num_dofs_; }
  int dofs_per_cell() const { return lagrange_dofs(order_); }
  const std::array<int, 10> &cell_dofs(std::size_t tet) const {
    return cell_dofs_[tet];
  }
  const std::vector<Vec3> &dof_coords() const { return dof_coords_; }

private:
  const ActiveMesh *active_;
  int order_;
  int num_dofs_ = 0;
  std::vector<std::array<int, 10>> cell_dofs_;
  std::vector<Vec3> dof_coords_;
};

inline FESpace build_space(const ActiveMesh &active, int order) {
  return FESpace(active, order);
}

struct BasisValues {
  std::array<double, 10> values{};
  std::array<Vec3, 10> gradients{};
  int size = 0;
};

/// Local basis values and physical gradients at x inside active tet `tet`.
inline BasisValues eval_basis(const FESpace &space, std::size_t tet,
                              const Vec3 &x) {
  const TetGeometry geo(space.active_mesh().tet_points(tet));
  const auto l = geo.barycentric(x);
  for (double li : l)
    if (li < -1e-10 || li > 1.0 + 1e-10)
      throw ConfigError("point outside tetrahedron");
  BasisValues out;
  out.size = space.dofs_per_cell();
  lagrange_basis(geo, space.order(), l, out.values.data(), out.gradients.data());
  return out;
}

/// Nodal interpolant: coefficients are the field values at the nodes.
template <class F>
Eigen::VectorXd interpolate(const FESpace &space, F &&field) {
  Eigen::VectorXd c(space.num_dofs());
  for (int i = 0; i < space.num_dofs(); ++i)
    c[i] = field(space.dof_coords()[i]);
  return c;
}

/// Value and gradient of a finite element function at x in active tet `tet`.
inline std::pair<double, Vec3> evaluate(const FESpace &space,
                                        const Eigen::VectorXd &coeffs,
                                        std::size_t tet, const Vec3 &x) {
  const auto b = eval_basis(space, tet, x);
  const auto &cd = space.cell_dofs(tet);
  double v = 0.0;
  Vec3 g = Vec3::Zero();
  for (int i = 0; i < b.size; ++i) {
    v += coeffs[cd[i]] * b.values[i];
    g += coeffs[cd[i]] * b.gradients[i];
  }
  return {v, g};
}

} // namespace surfdarcy

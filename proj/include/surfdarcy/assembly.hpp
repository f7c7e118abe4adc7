#pragma once

#include <surfdarcy/cut_surface.hpp>
#include <surfdarcy/error.hpp>
#include <surfdarcy/fe_space.hpp>
#include <surfdarcy/geometry.hpp>
#include <surfdarcy/lagrange.hpp>
#include <surfdarcy/quadrature.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

namespace surfdarcy {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

enum class Stabilization { FullGradient, NormalGradient };

inline std::string to_string(Stabilization s) {
  return s == Stabilization::FullGradient ? "full-gradient" : "normal-gradient";
}

struct AssemblyParams {
  Stabilization stab = Stabilization::FullGradient;
  double tau = 0.1;
  double alpha = 2.0;
  double h = 0.0;     // mesh size; 0 means "take it from the active mesh"
  int geometry_order = 1;
};

/// Unknowns ordered as [u_x | u_y | u_z | p | multiplier].
struct SystemLayout {
  int n_u = 0;
  int n_p = 0;

  int u_offset(int component) const { return component * n_u; }
  int p_offset() const { return 3 * n_u; }
  int multiplier() const { return 3 * n_u + n_p; }
  int total() const { return 3 * n_u + n_p + 1; }
};

/// Source f and tangential load g, both given on the exact surface and
/// evaluated at closest points.
struct DarcyData {
  std::function<double(const Vec3 &)> f;
  std::function<Vec3(const Vec3 &)> g;
};

struct AssembledSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  SystemLayout layout;
  AssemblyParams params;
};

/// CSR sparsity of a scalar space: all pairs of dofs sharing an active tet.
inline SparseMatrix scalar_pattern(const FESpace &space) {
  const int n = space.num_dofs();
  const int nd = space.dofs_per_cell();
  std::vector<std::vector<int>> rows(n);
  for (std::size_t t = 0; t < space.active_mesh().num_tets(); ++t) {
    const auto &cd = space.cell_dofs(t);
    for (int i = 0; i < nd; ++i)
      for (int j = 0; j < nd; ++j)
        rows[cd[i]].push_back(cd[j]);
  }
  SparseMatrix m(n, n);
  Eigen::VectorXi nnz(n);
  for (int r = 0; r < n; ++r) {
    auto &row = rows[r];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    nnz[r] = static_cast<int>(row.size());
  }
  m.reserve(nnz);
  for (int r = 0; r < n; ++r)
    for (int c : rows[r])
      m.insert(r, c) = 0.0;
  m.makeCompressed();
  return m;
}

/// Local contributions of one surface cell to the expanded Darcy form.
///
/// uu: (1/2)(phi_j, phi_i) for each velocity component,
/// pp: (1/2)(grad psi_j, grad psi_i),
/// up[c]: (1/2)(d_c psi_j, phi_i) with rows velocity, columns pressure; the
///        pressure-row/velocity-column block is -up[c]^T,
/// constraint: (psi_j, 1), rhs_u[c]: (1/2)(g_c, phi_i),
/// rhs_p: (f, psi_i) + (1/2)(g, grad psi_i).
struct LocalSurfaceContribution {
  Eigen::MatrixXd uu, pp;
  std::array<Eigen::MatrixXd, 3> up;
  Eigen::VectorXd constraint;
  std::array<Eigen::VectorXd, 3> rhs_u;
  Eigen::VectorXd rhs_p;
};

inline LocalSurfaceContribution
local_surface_contribution(const SurfaceCell &cell, const TetGeometry &geo,
                           int k_u, int k_p, const ImplicitSurface &surface,
                           const DarcyData *data) {
  const int nu = lagrange_dofs(k_u), np = lagrange_dofs(k_p);
  LocalSurfaceContribution lc;
  lc.uu = Eigen::MatrixXd::Zero(nu, nu);
  lc.pp = Eigen::MatrixXd::Zero(np, np);
  for (auto &b : lc.up)
    b = Eigen::MatrixXd::Zero(nu, np);
  lc.constraint = Eigen::VectorXd::Zero(np);
  for (auto &r : lc.rhs_u)
    r = Eigen::VectorXd::Zero(nu);
  lc.rhs_p = Eigen::VectorXd::Zero(np);

  double phi[10], psi[10];
  Vec3 dphi[10], dpsi[10];
  for (const auto &q : cell.quad) {
    surface_basis(geo, k_u, q, phi, dphi);
    surface_basis(geo, k_p, q, psi, dpsi);
    const double w = q.weight;
    for (int i = 0; i < nu; ++i)
      for (int j = 0; j < nu; ++j)
        lc.uu(i, j) += 0.5 * w * phi[i] * phi[j];
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j)
        lc.pp(i, j) += 0.5 * w * dpsi[i].dot(dpsi[j]);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < nu; ++i)
        for (int j = 0; j < np; ++j)
          lc.up[c](i, j) += 0.5 * w * phi[i] * dpsi[j][c];
    for (int j = 0; j < np; ++j)
      lc.constraint[j] += w * psi[j];
    if (data) {
      const Vec3 cp = closest_point(surface, q.point);
      const double f = data->f(cp);
      const Vec3 g = data->g(cp);
      for (int c = 0; c < 3; ++c)
        for (int i = 0; i < nu; ++i)
          lc.rhs_u[c][i] += 0.5 * w * g[c] * phi[i];
      for (int i = 0; i < np; ++i)
        lc.rhs_p[i] += w * f * psi[i] + 0.5 * w * g.dot(dpsi[i]);
    }
  }
  return lc;
}

/// Degree of the bulk rule used for the stabilization of an order-k space.
inline int stabilization_quad_degree(Stabilization kind, int k, int k_g) {
  int deg = std::max(1, 2 * (k - 1));
  if (kind == Stabilization::NormalGradient && k_g == 2)
    deg += 2;
  return deg;
}

/// Bulk stabilization on all active tets for one scalar space:
///   full gradient:   tau h^(alpha-1) (grad w, grad v)_{T_h}
///   normal gradient: tau h^(alpha-1) (n_h . grad w, n_h . grad v)_{T_h}
/// with n_h the normalized gradient of the per-tet degree-k_g interpolant of
/// rho (exact normal where that gradient vanishes).
inline SparseMatrix assemble_stabilization(const FESpace &space,
                                           const ImplicitSurface &surface,
                                           Stabilization kind, double tau,
                                           double alpha, double h, int k_g,
                                           int quad_degree = -1) {
  if (!(tau > 0.0))
    throw ConfigError("stabilization parameter tau must be positive");
  if (!(alpha >= 0.0 && alpha <= 2.0))
    throw ConfigError("h-scaling exponent alpha must lie in [0, 2]");
  if (k_g != 1 && k_g != 2)
    throw ConfigError("geometry order must be 1 or 2");
  const auto &active = space.active_mesh();
  const double scale = tau * std::pow(h, alpha - 1.0);
  const auto rule = quadrature::tet_rule(
      quad_degree >= 0 ? quad_degree
                       : stabilization_quad_degree(kind, space.order(), k_g));
  SparseMatrix s = scalar_pattern(space);
  const int nd = space.dofs_per_cell();
  double val[10];
  Vec3 grad[10];
  Eigen::MatrixXd local(nd, nd);
  for (std::size_t t = 0; t < active.num_tets(); ++t) {
    const TetGeometry geo(active.tet_points(t));
    std::optional<TetInterpolant> level;
    if (kind == Stabilization::NormalGradient)
      level.emplace(geo, k_g, [&](const Vec3 &x) { return signed_distance(surface, x); });
    local.setZero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto &l = rule.points[q];
      const double w = rule.weights[q] * geo.volume() * scale;
      lagrange_basis(geo, space.order(), l, val, grad);
      if (kind == Stabilization::FullGradient) {
        for (int i = 0; i < nd; ++i)
          for (int j = 0; j < nd; ++j)
            local(i, j) += w * grad[i].dot(grad[j]);
      } else {
        const Vec3 x = geo.point(l);
        Vec3 n = level->gradient(x);
        if (n.norm() > 1e-10)
          n.normalize();
        else
          n = surface_normal(surface, x);
        double dn[10];
        for (int i = 0; i < nd; ++i)
          dn[i] = n.dot(grad[i]);
        for (int i = 0; i < nd; ++i)
          for (int j = 0; j < nd; ++j)
            local(i, j) += w * dn[i] * dn[j];
      }
    }
    const auto &cd = space.cell_dofs(t);
    for (int i = 0; i < nd; ++i)
      for (int j = 0; j < nd; ++j)
        s.coeffRef(cd[i], cd[j]) += local(i, j);
  }
  return s;
}

inline SparseMatrix assemble_stabilization(const FESpace &space,
                                           const ImplicitSurface &surface,
                                           const AssemblyParams &params) {
  const double h = params.h > 0.0 ? params.h : space.active_mesh().h();
  return assemble_stabilization(space, surface, params.stab, params.tau,
                                params.alpha, h, params.geometry_order);
}

namespace detail {

inline SparseMatrix darcy_pattern(const FESpace &vel, const FESpace &pre,
                                  const SystemLayout &lay) {
  std::vector<std::vector<int>> rows(lay.total());
  const int nu = vel.dofs_per_cell(), np = pre.dofs_per_cell();
  const auto &active = vel.active_mesh();
  for (std::size_t t = 0; t < active.num_tets(); ++t) {
    const auto &cu = vel.cell_dofs(t);
    const auto &cp = pre.cell_dofs(t);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < nu; ++i) {
        auto &row = rows[lay.u_offset(c) + cu[i]];
        for (int j = 0; j < nu; ++j)
          row.push_back(lay.u_offset(c) + cu[j]);
        for (int j = 0; j < np; ++j)
          row.push_back(lay.p_offset() + cp[j]);
      }
    for (int i = 0; i < np; ++i) {
      auto &row = rows[lay.p_offset() + cp[i]];
      for (int c = 0; c < 3; ++c)
        for (int j = 0; j < nu; ++j)
          row.push_back(lay.u_offset(c) + cu[j]);
      for (int j = 0; j < np; ++j)
        row.push_back(lay.p_offset() + cp[j]);
      row.push_back(lay.multiplier());
    }
  }
  auto &mrow = rows[lay.multiplier()];
  for (int j = 0; j < lay.n_p; ++j)
    mrow.push_back(lay.p_offset() + j);
  SparseMatrix m(lay.total(), lay.total());
  Eigen::VectorXi nnz(lay.total());
  for (int r = 0; r < lay.total(); ++r) {
    auto &row = rows[r];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    nnz[r] = static_cast<int>(row.size());
  }
  m.reserve(nnz);
  for (int r = 0; r < lay.total(); ++r) {
    for (int c : rows[r])
      m.insert(r, c) = 0.0;
    std::vector<int>().swap(rows[r]);
  }
  m.makeCompressed();
  return m;
}

} // namespace detail

/// Assembles the stabilized system
///   (1/2)(u,v) + (1/2)(grad p, grad q) + (1/2)(grad p, v) - (1/2)(u, grad q)
///   + S_h(U, V) + mu (q, 1) + (p, 1) eta = (f, q) + (1/2)(g, v + grad q)
/// on Gamma_h with full R^3 gradients, the pressure mean fixed through the
/// trailing multiplier mu.
inline AssembledSystem assemble(const FESpace &vel, const FESpace &pre,
                                const DiscreteSurface &ds,
                                const ActiveMesh &active,
                                const ImplicitSurface &surface,
                                const DarcyData &data, AssemblyParams params) {
  if (&vel.active_mesh() != &active || &pre.active_mesh() != &active)
    throw ConfigError("spaces and surface must share the active mesh");
  if (!(params.tau > 0.0))
    throw ConfigError("stabilization parameter tau must be positive");
  if (params.h <= 0.0)
    params.h = active.h();
  params.geometry_order = ds.geometry_order;

  AssembledSystem sys;
  sys.params = params;
  sys.layout = SystemLayout{vel.num_dofs(), pre.num_dofs()};
  const auto &lay = sys.layout;
  sys.matrix = detail::darcy_pattern(vel, pre, lay);
  sys.rhs = Eigen::VectorXd::Zero(lay.total());
  auto &A = sys.matrix;

  const int nu = vel.dofs_per_cell(), np = pre.dofs_per_cell();
  std::size_t current_tet = static_cast<std::size_t>(-1);
  std::optional<TetGeometry> geo;
  for (const auto &cell : ds.cells) {
    if (cell.tet >= active.num_tets())
      throw ConfigError("surface cell refers to a tet outside the active mesh");
    if (cell.tet != current_tet) {
      geo.emplace(active.tet_points(cell.tet));
      current_tet = cell.tet;
    }
    const auto lc = local_surface_contribution(cell, *geo, vel.order(),
                                               pre.order(), surface, &data);
    const auto &cu = vel.cell_dofs(cell.tet);
    const auto &cp = pre.cell_dofs(cell.tet);
    for (int c = 0; c < 3; ++c) {
      const int off = lay.u_offset(c);
      for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nu; ++j)
          A.coeffRef(off + cu[i], off + cu[j]) += lc.uu(i, j);
        for (int j = 0; j < np; ++j) {
          A.coeffRef(off + cu[i], lay.p_offset() + cp[j]) += lc.up[c](i, j);
          A.coeffRef(lay.p_offset() + cp[j], off + cu[i]) -= lc.up[c](i, j);
        }
        sys.rhs[off + cu[i]] += lc.rhs_u[c][i];
      }
    }
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < np; ++j)
        A.coeffRef(lay.p_offset() + cp[i], lay.p_offset() + cp[j]) += lc.pp(i, j);
      A.coeffRef(lay.p_offset() + cp[i], lay.multiplier()) += lc.constraint[i];
      A.coeffRef(lay.multiplier(), lay.p_offset() + cp[i]) += lc.constraint[i];
      sys.rhs[lay.p_offset() + cp[i]] += lc.rhs_p[i];
    }
  }

  const SparseMatrix su = assemble_stabilization(vel, surface, params);
  for (int r = 0; r < su.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(su, r); it; ++it)
      for (int c = 0; c < 3; ++c)
        A.coeffRef(lay.u_offset(c) + r, lay.u_offset(c) + it.col()) += it.value();
  const SparseMatrix sp = assemble_stabilization(pre, surface, params);
  for (int r = 0; r < sp.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(sp, r); it; ++it)
      A.coeffRef(lay.p_offset() + r, lay.p_offset() + it.col()) += it.value();
  return sys;
}

/// Scalar surface matrices on Gamma_h for a single space.
enum class SurfaceForm { Mass, FullGradient, TangentialGradient };

inline SparseMatrix surface_matrix(const FESpace &space, const DiscreteSurface &ds,
                                   SurfaceForm form) {
  const auto &active = space.active_mesh();
  SparseMatrix m = scalar_pattern(space);
  const int nd = space.dofs_per_cell();
  double val[10];
  Vec3 grad[10];
  for (const auto &cell : ds.cells) {
    const TetGeometry geo(active.tet_points(cell.tet));
    const auto &cd = space.cell_dofs(cell.tet);
    for (const auto &q : cell.quad) {
      surface_basis(geo, space.order(), q, val, grad);
      if (form == SurfaceForm::TangentialGradient) {
        const Mat3 proj = Mat3::Identity() - q.normal * q.normal.transpose();
        for (int i = 0; i < nd; ++i)
          grad[i] = proj * grad[i];
      }
      for (int i = 0; i < nd; ++i)
        for (int j = 0; j < nd; ++j)
          m.coeffRef(cd[i], cd[j]) +=
              q.weight * (form == SurfaceForm::Mass ? val[i] * val[j]
                                                     : grad[i].dot(grad[j]));
    }
  }
  return m;
}

/// L2 mass matrix over all active tets.
inline SparseMatrix bulk_mass_matrix(const FESpace &space) {
  const auto &active = space.active_mesh();
  const auto rule = quadrature::tet_rule(2 * space.order());
  SparseMatrix m = scalar_pattern(space);
  const int nd = space.dofs_per_cell();
  double val[10];
  Vec3 grad[10];
  for (std::size_t t = 0; t < active.num_tets(); ++t) {
    const TetGeometry geo(active.tet_points(t));
    const auto &cd = space.cell_dofs(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      lagrange_basis(geo, space.order(), rule.points[q], val, grad);
      const double w = rule.weights[q] * geo.volume();
      for (int i = 0; i < nd; ++i)
        for (int j = 0; j < nd; ++j)
          m.coeffRef(cd[i], cd[j]) += w * val[i] * val[j];
    }
  }
  return m;
}

/// Writes a sparse matrix in MatrixMarket coordinate format.
inline void write_matrix_market(const SparseMatrix &m, const std::string &path) {
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot open " + path + " for writing");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(17);
  for (int r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it)
      out << r + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

} // namespace surfdarcy

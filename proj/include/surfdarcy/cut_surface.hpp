#pragma once

#include <surfdarcy/error.hpp>
#include <surfdarcy/geometry.hpp>
#include <surfdarcy/lagrange.hpp>
#include <surfdarcy/mesh.hpp>
#include <surfdarcy/quadrature.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace surfdarcy {

/// Planar triangle produced by marching tetrahedra. `edges[i]` holds the
/// local tet edge (pair of local vertex numbers) carrying vertex i.
struct CutTriangle {
  std::array<Vec3, 3> vertices;
  std::array<std::array<int, 2>, 3> edges;

  double area() const {
    return 0.5 * (vertices[1] - vertices[0]).cross(vertices[2] - vertices[0]).norm();
  }
};

/// Quadrature point on Gamma_h. For curved cells, finite element functions
/// are evaluated at `reference`, the preimage on the flat marching-tet
/// triangle (inside the parent tet), and their gradients are mapped with
/// `gradient_map` (inverse transpose of the cell map Jacobian).
struct SurfaceQuadPoint {
  Vec3 point;
  double weight = 0.0;
  Vec3 normal;
  Vec3 reference = Vec3::Zero();
  Mat3 gradient_map = Mat3::Identity();
};

struct SurfaceCell {
  std::size_t tet = 0;        // position in ActiveMesh::active_tets
  int geometry_order = 1;
  std::vector<Vec3> nodes;    // 3 (flat) or 6 (quadratic) Lagrange nodes
  std::vector<Vec3> reference_nodes; // preimages of `nodes` on the flat triangle
  std::vector<SurfaceQuadPoint> quad;

  double area() const {
    double a = 0.0;
    for (const auto &q : quad)
      a += q.weight;
    return a;
  }
};

/// Discrete surface Gamma_h as a list of quadrature-ready cells, ordered by
/// parent tet.
struct DiscreteSurface {
  std::vector<SurfaceCell> cells;
  int geometry_order = 1;
  int quad_degree = 4;
  double total_area = 0.0;
  std::size_t dropped_cells = 0;

  std::size_t num_quad_points() const {
    std::size_t n = 0;
    for (const auto &c : cells)
      n += c.quad.size();
    return n;
  }

  /// Visits every quadrature point in cell order.
  template <class F> void for_each_point(F &&f) const {
    for (const auto &c : cells)
      for (const auto &q : c.quad)
        f(c, q);
  }
};

namespace detail {

/// Canonical edge root: endpoints are ordered by their ids so that tets
/// sharing the edge compute bit-identical points.
inline Vec3 edge_root(const Vec3 &pa, double fa, long long ida, const Vec3 &pb,
                      double fb, long long idb) {
  if (idb < ida) {
    return edge_root(pb, fb, idb, pa, fa, ida);
  }
  const double t = fa / (fa - fb);
  return pa + t * (pb - pa);
}

} // namespace detail

/// Zero level set of the linear interpolant of `phi` on one tetrahedron:
/// nothing, one triangle (1-vs-3 sign pattern) or two triangles splitting a
/// planar quadrilateral along its shorter diagonal (2-vs-2). Triangles are
/// oriented so that their normal points towards positive phi.
///
/// `ids` fixes the orientation of every edge for the root computation;
/// neighbours passing global vertex ids get matching points.
inline std::vector<CutTriangle>
marching_tet(const std::array<Vec3, 4> &p, const std::array<double, 4> &phi,
             std::optional<std::array<long long, 4>> ids = std::nullopt) {
  for (double v : phi)
    if (!std::isfinite(v))
      throw NumericalError("non-finite level set value");
  const std::array<long long, 4> id = ids.value_or(std::array<long long, 4>{0, 1, 2, 3});

  std::array<int, 4> neg{}, pos{};
  int nn = 0, np = 0;
  for (int i = 0; i < 4; ++i) {
    if (is_negative(phi[i]))
      neg[nn++] = i;
    else
      pos[np++] = i;
  }
  std::vector<CutTriangle> out;
  if (nn == 0 || np == 0)
    return out;

  auto root = [&](int a, int b) {
    return detail::edge_root(p[a], phi[a], id[a], p[b], phi[b], id[b]);
  };
  auto edge = [](int a, int b) {
    return std::array<int, 2>{std::min(a, b), std::max(a, b)};
  };

  if (nn == 1 || np == 1) {
    const int lone = nn == 1 ? neg[0] : pos[0];
    const auto &others = nn == 1 ? pos : neg;
    CutTriangle tri;
    for (int i = 0; i < 3; ++i) {
      tri.vertices[i] = root(lone, others[i]);
      tri.edges[i] = edge(lone, others[i]);
    }
    out.push_back(tri);
  } else {
    const int a = neg[0], b = neg[1], c = pos[0], d = pos[1];
    // quad cycle: ac -> ad -> bd -> bc
    const std::array<Vec3, 4> q{root(a, c), root(a, d), root(b, d), root(b, c)};
    const std::array<std::array<int, 2>, 4> qe{edge(a, c), edge(a, d), edge(b, d),
                                               edge(b, c)};
    const bool first = (q[0] - q[2]).squaredNorm() <= (q[1] - q[3]).squaredNorm();
    const std::array<std::array<int, 3>, 2> split =
        first ? std::array<std::array<int, 3>, 2>{{{0, 1, 2}, {0, 2, 3}}}
              : std::array<std::array<int, 3>, 2>{{{1, 2, 3}, {1, 3, 0}}};
    for (const auto &s : split) {
      CutTriangle tri;
      for (int i = 0; i < 3; ++i) {
        tri.vertices[i] = q[s[i]];
        tri.edges[i] = qe[s[i]];
      }
      out.push_back(tri);
    }
  }

  // orient along the gradient of the linear interpolant
  const TetGeometry geo(p);
  Vec3 grad = Vec3::Zero();
  for (int i = 0; i < 4; ++i)
    grad += phi[i] * geo.lambda_gradients()[i];
  for (auto &tri : out) {
    const Vec3 nrm =
        (tri.vertices[1] - tri.vertices[0]).cross(tri.vertices[2] - tri.vertices[0]);
    if (nrm.dot(grad) < 0.0) {
      std::swap(tri.vertices[1], tri.vertices[2]);
      std::swap(tri.edges[1], tri.edges[2]);
    }
  }
  return out;
}

/// Root of g on [lo, hi] with g(lo) g(hi) <= 0 by Newton steps safeguarded
/// with bisection.
template <class G, class DG>
double bracketed_root(G &&g, DG &&dg, double lo, double hi, double start,
                      double tol = 1e-13) {
  double glo = g(lo), ghi = g(hi);
  if (glo == 0.0)
    return lo;
  if (ghi == 0.0)
    return hi;
  if (glo * ghi > 0.0)
    throw NumericalError("no sign change in root bracket");
  double t = std::clamp(start, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double gt = g(t);
    if (gt == 0.0)
      return t;
    if ((gt < 0.0) == (glo < 0.0)) {
      lo = t;
      glo = gt;
    } else {
      hi = t;
      ghi = gt;
    }
    const double d = dg(t);
    double next = d != 0.0 ? t - gt / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    if (std::abs(next - t) < tol || hi - lo < tol)
      return next;
    t = next;
  }
  return t;
}

/// Moves x0 along the unit direction d onto the zero set of a level-set
/// interpolant (anything with value(x) and gradient(x)): 1D Newton from
/// t = 0, with a bisection fallback on [-h, h] when Newton fails or leaves
/// that interval.
template <class LevelSet>
Vec3 lift_point(const Vec3 &x0, const LevelSet &phi, const Vec3 &d, double h) {
  auto g = [&](double t) { return phi.value(Vec3(x0 + t * d)); };
  auto dg = [&](double t) { return phi.gradient(Vec3(x0 + t * d)).dot(d); };

  double t = 0.0;
  for (int it = 0; it < 50; ++it) {
    const double gt = g(t);
    if (gt == 0.0)
      return x0 + t * d;
    const double slope = dg(t);
    if (slope == 0.0 || !std::isfinite(slope))
      break;
    const double dt = -gt / slope;
    t += dt;
    if (!(std::abs(t) < h))
      break;
    if (std::abs(dt) < 1e-13)
      return x0 + t * d;
  }

  // bisection fallback: nearest bracket around t = 0
  const double g0 = g(0.0);
  if (g0 == 0.0)
    return x0;
  for (double s = 0.125 * h; s <= h * (1.0 + 1e-12); s *= 2.0) {
    const double gp = g(s), gm = g(-s);
    const bool right = gp * g0 <= 0.0, left = gm * g0 <= 0.0;
    if (right || left) {
      const bool use_right = right && (!left || std::abs(gp) >= std::abs(gm));
      const double root = use_right ? bracketed_root(g, dg, 0.0, s, 0.0)
                                    : bracketed_root(g, dg, -s, 0.0, 0.0);
      return x0 + root * d;
    }
  }
  throw NumericalError("lift failure: no root within [-h, h]");
}

/// lift_point along the normalized gradient of phi at x0.
template <class LevelSet>
Vec3 lift_point(const Vec3 &x0, const LevelSet &phi, double h) {
  const Vec3 g = phi.gradient(x0);
  if (!(g.norm() > 1e-10))
    throw NumericalError("lift failure: vanishing level-set gradient");
  return lift_point(x0, phi, g.normalized(), h);
}

namespace detail {

/// Reference quadratic triangle: nodes 0,1,2 at the corners, 3,4,5 at the
/// midpoints of edges 01, 12, 20. Returns the point and both tangents.
inline void quadratic_triangle_map(const std::vector<Vec3> &x, double xi,
                                   double eta, Vec3 &point, Vec3 &dxi,
                                   Vec3 &deta) {
  const double l0 = 1.0 - xi - eta, l1 = xi, l2 = eta;
  const double n[6] = {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                       4 * l0 * l1,       4 * l1 * l2,       4 * l2 * l0};
  const double nxi[6] = {-(4 * l0 - 1), 4 * l1 - 1, 0.0,
                         4 * (l0 - l1), 4 * l2,     -4 * l2};
  const double neta[6] = {-(4 * l0 - 1), 0.0, 4 * l2 - 1,
                          -4 * l1,       4 * l1, 4 * (l0 - l2)};
  point.setZero();
  dxi.setZero();
  deta.setZero();
  for (int i = 0; i < 6; ++i) {
    point += n[i] * x[i];
    dxi += nxi[i] * x[i];
    deta += neta[i] * x[i];
  }
}

} // namespace detail

/// Piecewise degree-k nodal interpolant of a function over the whole
/// background mesh; continuous across tets. Evaluation locates the
/// containing tet (points outside the box are clamped to boundary cubes).
class GlobalInterpolant {
public:
  GlobalInterpolant(const BackgroundMesh &mesh, int order,
                    std::function<double(const Vec3 &)> f)
      : mesh_(&mesh), order_(order), f_(std::move(f)) {}

  double value(const Vec3 &x) const { return local(x).value(x); }
  Vec3 gradient(const Vec3 &x) const { return local(x).gradient(x); }

  Index locate(const Vec3 &x) const {
    const Index n = mesh_->n_cells();
    const Vec3 rel = (x - mesh_->box().lo).cwiseQuotient(mesh_->spacing());
    std::array<Index, 3> c{};
    for (int d = 0; d < 3; ++d)
      c[d] = std::clamp<Index>(static_cast<Index>(std::floor(rel[d])), 0, n - 1);
    const Index cube = mesh_->cube_index(c[0], c[1], c[2]);
    Index best = 6 * cube;
    double best_min = -std::numeric_limits<double>::infinity();
    for (Index m = 0; m < 6; ++m) {
      const TetGeometry geo(mesh_->tet_points(6 * cube + m));
      const auto l = geo.barycentric(x);
      const double lmin = *std::min_element(l.begin(), l.end());
      if (lmin > best_min) {
        best_min = lmin;
        best = 6 * cube + m;
      }
    }
    return best;
  }

private:
  const TetInterpolant &local(const Vec3 &x) const {
    const Index t = locate(x);
    if (t != cached_tet_) {
      cached_.emplace(TetGeometry(mesh_->tet_points(t)), order_, f_);
      cached_tet_ = t;
    }
    return *cached_;
  }

  const BackgroundMesh *mesh_;
  int order_;
  std::function<double(const Vec3 &)> f_;
  mutable Index cached_tet_ = -1;
  mutable std::optional<TetInterpolant> cached_;
};

/// Discrete surface of geometry order 1 (marching-tet facets of the P1
/// interpolant of rho) or 2 (those facets lifted to quadratic triangles on
/// the zero set of the per-tet P2 interpolant of rho).
///
/// For order 2 every node (facet vertices, then midpoints of the lifted
/// edges) moves along the exact normal onto the zero set of the continuous
/// piecewise-P2 interpolant of rho, so shared nodes coincide across tets.
/// Lifted nodes may sit O(h^2) outside the parent tet.
inline DiscreteSurface build_surface(const ActiveMesh &active,
                                     const ImplicitSurface &surface,
                                     int geometry_order, int quad_degree = 4) {
  if (geometry_order != 1 && geometry_order != 2)
    throw ConfigError("geometry order must be 1 or 2");
  const auto rule = quadrature::triangle_rule(quad_degree);
  const double h = active.h();
  const double min_area = 1e-14 * h * h;

  std::optional<GlobalInterpolant> phi2;
  if (geometry_order == 2)
    phi2.emplace(active.parent, 2,
                 [&surface](const Vec3 &x) { return signed_distance(surface, x); });

  DiscreteSurface ds;
  ds.geometry_order = geometry_order;
  ds.quad_degree = rule.degree;

  for (std::size_t t = 0; t < active.num_tets(); ++t) {
    const auto p = active.tet_points(t);
    const auto phi = active.tet_values(t);
    const auto gv = active.tet_global_vertices(t);
    const std::array<long long, 4> ids{gv[0], gv[1], gv[2], gv[3]};
    const auto tris = marching_tet(p, phi, ids);
    if (tris.empty())
      continue;

    if (geometry_order == 1) {
      for (const auto &tri : tris) {
        const double area = tri.area();
        if (area < min_area) {
          ++ds.dropped_cells;
          continue;
        }
        SurfaceCell cell;
        cell.tet = t;
        cell.geometry_order = 1;
        cell.nodes.assign(tri.vertices.begin(), tri.vertices.end());
        cell.reference_nodes = cell.nodes;
        const Vec3 n = (tri.vertices[1] - tri.vertices[0])
                           .cross(tri.vertices[2] - tri.vertices[0])
                           .normalized();
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const auto &b = rule.points[q];
          const Vec3 x = b[0] * tri.vertices[0] + b[1] * tri.vertices[1] +
                         b[2] * tri.vertices[2];
          cell.quad.push_back({x, area * rule.weights[q], n, x, Mat3::Identity()});
        }
        ds.cells.push_back(std::move(cell));
      }
      continue;
    }

    auto lift = [&](const Vec3 &x0) {
      try {
        return lift_point(x0, *phi2, surface_normal(surface, x0), h);
      } catch (const NumericalError &err) {
        throw NumericalError(std::string(err.what()) + " in tet " +
                             std::to_string(active.active_tets[t]));
      }
    };

    for (const auto &tri : tris) {
      if (tri.area() < min_area) {
        ++ds.dropped_cells;
        continue;
      }
      std::array<Vec3, 6> x;
      for (int i = 0; i < 3; ++i)
        x[i] = lift(tri.vertices[i]);
      for (int i = 0; i < 3; ++i)
        x[3 + i] = lift(0.5 * (x[i] + x[(i + 1) % 3]));
      SurfaceCell cell;
      cell.tet = t;
      cell.geometry_order = 2;
      cell.nodes.assign(x.begin(), x.end());
      cell.reference_nodes = {tri.vertices[0], tri.vertices[1], tri.vertices[2],
                              0.5 * (tri.vertices[0] + tri.vertices[1]),
                              0.5 * (tri.vertices[1] + tri.vertices[2]),
                              0.5 * (tri.vertices[2] + tri.vertices[0])};
      const Vec3 a1 = tri.vertices[1] - tri.vertices[0];
      const Vec3 a2 = tri.vertices[2] - tri.vertices[0];
      const Vec3 n_flat = a1.cross(a2).normalized();
      Mat3 flat;
      flat << a1, a2, n_flat;
      const Mat3 flat_inv = flat.inverse();
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto &b = rule.points[q];
        Vec3 pt, dxi, deta;
        detail::quadratic_triangle_map(cell.nodes, b[1], b[2], pt, dxi, deta);
        const Vec3 cr = dxi.cross(deta);
        const double jac = cr.norm();
        if (!(jac > 0.0))
          throw NumericalError("degenerate quadratic surface cell in tet " +
                               std::to_string(active.active_tets[t]));
        // cell map extended off the surface by n_flat -> n_flat
        Mat3 curved;
        curved << dxi, deta, n_flat;
        const Mat3 jacobian = curved * flat_inv;
        cell.quad.push_back({pt, 0.5 * jac * rule.weights[q], cr / jac,
                             tri.vertices[0] + b[1] * a1 + b[2] * a2,
                             jacobian.inverse().transpose()});
      }
      ds.cells.push_back(std::move(cell));
    }
  }
  for (const auto &c : ds.cells)
    ds.total_area += c.area();
  return ds;
}

/// Basis values and physical gradients of an order-k space at a surface
/// quadrature point of a cell of `geo`.
inline void surface_basis(const TetGeometry &geo, int order, const SurfaceQuadPoint &q,
                          double *values, Vec3 *gradients) {
  lagrange_basis(geo, order, geo.barycentric(q.reference), values, gradients);
  if (!q.gradient_map.isIdentity(0.0))
    for (int i = 0; i < lagrange_dofs(order); ++i)
      gradients[i] = q.gradient_map * gradients[i];
}

/// Mean value (sum w v) / (sum w) of quadrature-point values.
inline double surface_mean(const DiscreteSurface &ds,
                           std::span<const double> values) {
  if (values.size() != ds.num_quad_points())
    throw ConfigError("surface_mean needs one value per quadrature point");
  double num = 0.0, den = 0.0;
  std::size_t i = 0;
  ds.for_each_point([&](const SurfaceCell &, const SurfaceQuadPoint &q) {
    num += q.weight * values[i++];
    den += q.weight;
  });
  if (!(den > 0.0))
    throw NumericalError("surface mean over zero area");
  return num / den;
}

} // namespace surfdarcy

#pragma once

#include <surfdarcy/cut_surface.hpp>
#include <surfdarcy/error.hpp>
#include <surfdarcy/mesh.hpp>
#include <surfdarcy/verification.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace surfdarcy {

/// Point data sampled at the Lagrange nodes of every Gamma_h cell.
struct SurfaceSample {
  std::vector<Vec3> points;
  std::vector<int> cell_offsets;  // start of each cell in `points`
  std::vector<int> cell_types;    // VTK 5 (triangle) or 22 (quadratic triangle)
  std::vector<double> pressure;
  std::vector<Vec3> velocity;
  std::vector<Vec3> normal;
};

inline SurfaceSample sample_surface(const DiscreteFields &fields, const DiscreteSurface &ds) {
  static constexpr double ref[6][2] = {{0, 0}, {1, 0}, {0, 1}, {0.5, 0}, {0.5, 0.5}, {0, 0.5}};
  const auto &active = fields.velocity->active_mesh();
  SurfaceSample out;
  double vu[10], vp[10];
  Vec3 gu[10], gp[10];
  for (const auto &cell : ds.cells) {
    const TetGeometry geo(active.tet_points(cell.tet));
    const auto &cu = fields.velocity->cell_dofs(cell.tet);
    const auto &cp = fields.pressure->cell_dofs(cell.tet);
    out.cell_offsets.push_back(static_cast<int>(out.points.size()));
    out.cell_types.push_back(cell.nodes.size() == 6 ? 22 : 5);
    Vec3 flat_normal = (cell.nodes[1] - cell.nodes[0]).cross(cell.nodes[2] - cell.nodes[0]);
    flat_normal.normalize();
    for (std::size_t i = 0; i < cell.nodes.size(); ++i) {
      const auto l = geo.barycentric(cell.reference_nodes[i]);
      lagrange_basis(geo, fields.velocity->order(), l, vu, gu);
      lagrange_basis(geo, fields.pressure->order(), l, vp, gp);
      Vec3 u = Vec3::Zero();
      double p = 0.0;
      for (int k = 0; k < fields.velocity->dofs_per_cell(); ++k)
        for (int c = 0; c < 3; ++c)
          u[c] += fields.solution->u[c][cu[k]] * vu[k];
      for (int k = 0; k < fields.pressure->dofs_per_cell(); ++k)
        p += fields.solution->p[cp[k]] * vp[k];
      Vec3 n = flat_normal;
      if (cell.nodes.size() == 6) {
        Vec3 pt, dxi, deta;
        detail::quadratic_triangle_map(cell.nodes, ref[i][0], ref[i][1], pt, dxi, deta);
        n = dxi.cross(deta).normalized();
      }
      out.points.push_back(cell.nodes[i]);
      out.pressure.push_back(p);
      out.velocity.push_back(u);
      out.normal.push_back(n);
    }
  }
  return out;
}

namespace detail {

inline void vtk_header(std::ostream &out, const std::string &title) {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << std::setprecision(10);
}

inline void vtk_points(std::ostream &out, const std::vector<Vec3> &pts) {
  out << "POINTS " << pts.size() << " double\n";
  for (const auto &p : pts)
    out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

inline void save(const std::string &path, const std::ostringstream &s) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("cannot open " + path + " for writing");
  out << s.str();
  if (!out)
    throw ConfigError("failed writing " + path);
}

} // namespace detail

/// Gamma_h with p_h, u_h, |u_h| and n_h as point data (legacy ASCII).
inline void write_surface_vtk(const SurfaceSample &s, const std::string &path) {
  std::ostringstream out;
  detail::vtk_header(out, "discrete surface with velocity and pressure");
  detail::vtk_points(out, s.points);
  const std::size_t nc = s.cell_offsets.size();
  out << "CELLS " << nc << ' ' << nc + s.points.size() << '\n';
  for (std::size_t c = 0; c < nc; ++c) {
    const int begin = s.cell_offsets[c];
    const int end = c + 1 < nc ? s.cell_offsets[c + 1] : static_cast<int>(s.points.size());
    out << end - begin;
    for (int i = begin; i < end; ++i)
      out << ' ' << i;
    out << '\n';
  }
  out << "CELL_TYPES " << nc << '\n';
  for (int t : s.cell_types)
    out << t << '\n';
  out << "POINT_DATA " << s.points.size() << '\n';
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (double p : s.pressure)
    out << p << '\n';
  out << "VECTORS velocity double\n";
  for (const auto &u : s.velocity)
    out << u.x() << ' ' << u.y() << ' ' << u.z() << '\n';
  out << "SCALARS velocity_magnitude double 1\nLOOKUP_TABLE default\n";
  for (const auto &u : s.velocity)
    out << u.norm() << '\n';
  out << "NORMALS normal double\n";
  for (const auto &n : s.normal)
    out << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  detail::save(path, out);
}

/// Active background tets (legacy ASCII).
inline void write_active_mesh_vtk(const ActiveMesh &active, const std::string &path) {
  std::ostringstream out;
  detail::vtk_header(out, "active background mesh");
  std::vector<Vec3> pts(active.num_vertices());
  for (std::size_t v = 0; v < pts.size(); ++v)
    pts[v] = active.parent.vertex(active.vertices[v]);
  detail::vtk_points(out, pts);
  const std::size_t nt = active.num_tets();
  out << "CELLS " << nt << ' ' << 5 * nt << '\n';
  for (const auto &tv : active.tet_vertices)
    out << "4 " << tv[0] << ' ' << tv[1] << ' ' << tv[2] << ' ' << tv[3] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (std::size_t t = 0; t < nt; ++t)
    out << "10\n";
  detail::save(path, out);
}

} // namespace surfdarcy

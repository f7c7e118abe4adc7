#pragma once

// Plane-cut problems on a single cube next to the torus, assembled once by
// the library and once by the brute-force oracle.

#include "oracle.hpp"

#include <surfdarcy/assembly.hpp>
#include <surfdarcy/mesh.hpp>

#include <string>
#include <vector>

namespace oracle_cases {

using namespace surfdarcy;

enum class Cut { Corner, Split };

inline Vec3 cube_origin() { return Vec3(1.45, -0.05, -0.05); }
inline constexpr double cube_size = 0.1;

/// Corner: isolates cube corner (1,0,0), which two Kuhn tets share; tet 0
/// sees a 1-vs-3 sign pattern. Split: 2-vs-2 pattern in tet 0.
inline double cut_value(Cut cut, const Vec3 &x) {
  const Vec3 y = (x - cube_origin()) / cube_size;
  if (cut == Cut::Corner)
    return y.x() - y.y() - y.z() - 0.6;
  return y.y() - 0.5 + 0.1 * y.x() - 0.05 * y.z();
}

inline double torus_distance(const Vec3 &x) {
  return std::hypot(x.z(), std::hypot(x.x(), x.y()) - 1.0) - 0.5;
}

struct Setup {
  Cut cut = Cut::Corner;
  bool single_tet = true;
  int k_u = 1, k_p = 1;
  Stabilization stab = Stabilization::FullGradient;
  double alpha = 2.0;

  std::string name() const {
    return std::string(cut == Cut::Corner ? "corner" : "split") +
           (single_tet ? "_1tet" : "_2tet") + "_P" + std::to_string(k_u) + "P" +
           std::to_string(k_p) + (stab == Stabilization::FullGradient ? "_full" : "_normal");
  }
};

struct Comparison {
  int size = 0;
  int surface_cells = 0;
  double matrix_diff = 0.0;  // max |library - oracle| over all entries
  double rhs_diff = 0.0;
  double matrix_scale = 0.0; // max |oracle entry|
};

inline Comparison compare(const Setup &s) {
  const BackgroundMesh mesh(Box{cube_origin(), cube_origin() + Vec3::Constant(cube_size)}, 1);
  std::vector<double> values(mesh.num_vertices());
  for (Index v = 0; v < mesh.num_vertices(); ++v)
    values[v] = cut_value(s.cut, mesh.vertex(v));
  const ActiveMesh active =
      s.single_tet ? surfdarcy::detail::finish_active(mesh, std::vector<Index>{0},
                                                      [&](Index v) { return values[v]; })
                   : extract_active(mesh, values);
  const auto torus = ImplicitSurface::torus();
  const auto ds = build_surface(active, torus, 1, 4);
  const FESpace vel(active, s.k_u), pre(active, s.k_p);
  const DarcyData data{[](const Vec3 &) { return 0.7; },
                       [](const Vec3 &) { return Vec3(0.3, -0.2, 0.5); }};
  AssemblyParams params;
  params.stab = s.stab;
  params.tau = 0.1;
  params.alpha = s.alpha;
  const auto sys = assemble(vel, pre, ds, active, torus, data, params);

  oracle::Problem pb;
  for (Index t : active.active_tets) {
    const auto v = mesh.tet(t);
    pb.tets.push_back({v[0], v[1], v[2], v[3]});
  }
  pb.vertex = [&](long long v) { return mesh.vertex(v); };
  pb.cut = [&](const oracle::V3 &x) { return cut_value(s.cut, x); };
  pb.distance = torus_distance;
  pb.k_u = s.k_u;
  pb.k_p = s.k_p;
  pb.normal_gradient = s.stab == Stabilization::NormalGradient;
  pb.tau = 0.1;
  pb.alpha = s.alpha;
  pb.h = cube_size;
  pb.f = 0.7;
  pb.g = oracle::V3(0.3, -0.2, 0.5);
  const auto ref = oracle::assemble(pb);

  Comparison c;
  c.size = static_cast<int>(sys.matrix.rows());
  c.surface_cells = static_cast<int>(ds.cells.size());
  if (ref.matrix.rows() != sys.matrix.rows()) {
    c.matrix_diff = c.rhs_diff = std::numeric_limits<double>::infinity();
    return c;
  }
  const Eigen::MatrixXd lib = Eigen::MatrixXd(sys.matrix);
  c.matrix_diff = (lib - ref.matrix).cwiseAbs().maxCoeff();
  c.rhs_diff = (sys.rhs - ref.rhs).cwiseAbs().maxCoeff();
  c.matrix_scale = ref.matrix.cwiseAbs().maxCoeff();
  return c;
}

/// Every combination checked for oracle equivalence.
inline std::vector<Setup> all_setups() {
  std::vector<Setup> out;
  for (bool single : {true, false})
    for (Cut cut : {Cut::Corner, Cut::Split})
      for (int k_p : {1, 2})
        for (auto stab : {Stabilization::FullGradient, Stabilization::NormalGradient}) {
          if (!single && cut == Cut::Split)
            continue;
          out.push_back(Setup{cut, single, 1, k_p, stab, 2.0});
        }
  return out;
}

} // namespace oracle_cases

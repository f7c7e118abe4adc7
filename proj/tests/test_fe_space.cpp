#include <surfdarcy/fe_space.hpp>
#include <surfdarcy/quadrature.hpp>

#include <gtest/gtest.h>

#include <random>
#include <map>
#include <set>

using namespace surfdarcy;

namespace {

ActiveMesh torus_active(int level) {
  auto mesh = build_background(Box{}, 14);
  for (int k = 0; k < level; ++k)
    mesh = refine_uniform(mesh);
  return extract_active(mesh, ImplicitSurface::torus());
}

Vec3 random_point_in(const TetGeometry &geo, std::mt19937_64 &rng) {
  std::exponential_distribution<double> e(1.0);
  std::array<double, 4> l{e(rng), e(rng), e(rng), e(rng)};
  const double s = l[0] + l[1] + l[2] + l[3];
  for (auto &li : l)
    li /= s;
  return geo.point(l);
}

double smooth(const Vec3 &x) { return std::sin(2 * x.x()) * std::cos(x.y()) + x.z() * x.z(); }

/// Root mean square interpolation error of `smooth` over the active tets.
double interpolation_error(const ActiveMesh &active, int order) {
  const FESpace space(active, order);
  const auto c = interpolate(space, smooth);
  const auto rule = quadrature::tet_rule(6);
  double err = 0.0, vol = 0.0;
  for (std::size_t t = 0; t < active.num_tets(); ++t) {
    const TetGeometry geo(active.tet_points(t));
    vol += geo.volume();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec3 x = geo.point(rule.points[q]);
      const double d = evaluate(space, c, t, x).first - smooth(x);
      err += rule.weights[q] * geo.volume() * d * d;
    }
  }
  return std::sqrt(err / vol);
}

} // namespace

TEST(FESpace, DofCounts) {
  const auto active = torus_active(0);
  std::set<std::pair<Index, Index>> edges;
  for (std::size_t t = 0; t < active.num_tets(); ++t) {
    const auto gv = active.tet_global_vertices(t);
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        edges.insert({std::min(gv[a], gv[b]), std::max(gv[a], gv[b])});
  }
  const FESpace p1(active, 1), p2 = build_space(active, 2);
  EXPECT_EQ(p1.num_dofs(), static_cast<int>(active.num_vertices()));
  EXPECT_EQ(p2.num_dofs(), static_cast<int>(active.num_vertices() + edges.size()));
  EXPECT_EQ(p1.dofs_per_cell(), 4);
  EXPECT_EQ(p2.dofs_per_cell(), 10);
  EXPECT_THROW(FESpace(active, 3), ConfigError);
}

TEST(FESpace, DofCoordinatesMatchLocalNodes) {
  const auto active = torus_active(0);
  const FESpace p2(active, 2);
  for (std::size_t t = 0; t < active.num_tets(); t += 7) {
    const auto nodes = TetGeometry(active.tet_points(t)).nodes(2);
    for (int i = 0; i < 10; ++i)
      EXPECT_EQ(p2.dof_coords()[p2.cell_dofs(t)[i]], nodes[i]);
  }
}

TEST(FESpace, InterpolationReproducesPolynomials) {
  const auto active = torus_active(0);
  std::mt19937_64 rng(2);
  const auto lin = [](const Vec3 &x) { return 0.3 + x.x() - 2 * x.y() + 0.5 * x.z(); };
  const auto quad = [](const Vec3 &x) { return x.x() * x.y() - x.z() * x.z() + x.x(); };
  const FESpace p1(active, 1), p2(active, 2);
  const auto c1 = interpolate(p1, lin);
  const auto c2 = interpolate(p2, quad);
  for (std::size_t t = 0; t < active.num_tets(); t += 5) {
    const TetGeometry geo(active.tet_points(t));
    const Vec3 x = random_point_in(geo, rng);
    const auto [v1, g1] = evaluate(p1, c1, t, x);
    EXPECT_NEAR(v1, lin(x), 1e-13);
    EXPECT_NEAR((g1 - Vec3(1, -2, 0.5)).norm(), 0.0, 1e-12);
    const auto [v2, g2] = evaluate(p2, c2, t, x);
    EXPECT_NEAR(v2, quad(x), 1e-13);
    EXPECT_NEAR((g2 - Vec3(x.y() + 1, x.x(), -2 * x.z())).norm(), 0.0, 1e-11);
  }
}

TEST(FESpace, InterpolationConverges) {
  const auto a0 = torus_active(0), a1 = torus_active(1);
  const auto rate = [&](int order) {
    return std::log2(interpolation_error(a0, order) / interpolation_error(a1, order));
  };
  EXPECT_NEAR(rate(1), 2.0, 0.3);
  EXPECT_NEAR(rate(2), 3.0, 0.3);
}

TEST(FESpace, ContinuousAcrossSharedFaces) {
  const auto active = torus_active(0);
  const FESpace p2(active, 2);
  const auto c = interpolate(p2, smooth);
  std::map<std::array<Index, 3>, std::vector<std::size_t>> faces;
  for (std::size_t t = 0; t < active.num_tets(); ++t) {
    const auto gv = active.tet_global_vertices(t);
    for (int skip = 0; skip < 4; ++skip) {
      std::array<Index, 3> f{};
      int k = 0;
      for (int i = 0; i < 4; ++i)
        if (i != skip)
          f[k++] = gv[i];
      std::sort(f.begin(), f.end());
      faces[f].push_back(t);
    }
  }
  int checked = 0;
  for (const auto &[f, tets] : faces) {
    if (tets.size() != 2)
      continue;
    const auto &mesh = active.parent;
    const Vec3 x = 0.2 * mesh.vertex(f[0]) + 0.3 * mesh.vertex(f[1]) + 0.5 * mesh.vertex(f[2]);
    EXPECT_NEAR(evaluate(p2, c, tets[0], x).first, evaluate(p2, c, tets[1], x).first, 1e-13);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(EvalBasis, RejectsPointOutsideTet) {
  const auto active = torus_active(0);
  const FESpace p1(active, 1);
  const auto pts = active.tet_points(0);
  EXPECT_THROW(eval_basis(p1, 0, pts[0] + 2.0 * (pts[1] - pts[0])), ConfigError);
  const auto b = eval_basis(p1, 0, 0.25 * (pts[0] + pts[1] + pts[2] + pts[3]));
  EXPECT_EQ(b.size, 4);
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(b.values[i], 0.25, 1e-14);
}

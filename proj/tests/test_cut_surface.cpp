#include <surfdarcy/cut_surface.hpp>

#include <gtest/gtest.h>

#include <numbers>

using namespace surfdarcy;

namespace {

const std::array<Vec3, 4> unit_tet{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};

struct Sphere {
  double value(const Vec3 &x) const { return x.norm() - 1.0; }
  Vec3 gradient(const Vec3 &x) const { return x.normalized(); }
};

ActiveMesh torus_active(int level, const ImplicitSurface &s = ImplicitSurface::torus()) {
  auto mesh = build_background(Box{}, 14);
  for (int k = 0; k < level; ++k)
    mesh = refine_uniform(mesh);
  return extract_active(mesh, s);
}

double max_distance(const DiscreteSurface &ds, const ImplicitSurface &s) {
  double m = 0.0;
  ds.for_each_point([&](const SurfaceCell &, const SurfaceQuadPoint &q) {
    m = std::max(m, std::abs(signed_distance(s, q.point)));
  });
  return m;
}

} // namespace

TEST(MarchingTet, OneVersusThree) {
  const auto tris = marching_tet(unit_tet, {-1, 1, 1, 1});
  ASSERT_EQ(tris.size(), 1u);
  EXPECT_NEAR(tris[0].area(), std::sqrt(3.0) / 8.0, 1e-15);
  const Vec3 n = (tris[0].vertices[1] - tris[0].vertices[0])
                     .cross(tris[0].vertices[2] - tris[0].vertices[0])
                     .normalized();
  EXPECT_NEAR((n - Vec3(1, 1, 1).normalized()).norm(), 0.0, 1e-15);
  for (const auto &v : tris[0].vertices)
    EXPECT_NEAR(v.sum(), 0.5, 1e-15);
}

TEST(MarchingTet, OrientationFollowsPositiveSide) {
  const auto tris = marching_tet(unit_tet, {1, -1, -1, -1});
  ASSERT_EQ(tris.size(), 1u);
  const Vec3 n = (tris[0].vertices[1] - tris[0].vertices[0])
                     .cross(tris[0].vertices[2] - tris[0].vertices[0]);
  EXPECT_LT(n.dot(Vec3(1, 1, 1)), 0.0);
}

TEST(MarchingTet, TwoVersusTwoGivesPlanarQuad) {
  const auto tris = marching_tet(unit_tet, {-1, -1, 1, 1});
  ASSERT_EQ(tris.size(), 2u);
  // quad with corners on edges 02, 03, 13, 12; area = |d1 x d2| / 2
  const Vec3 d1 = Vec3(0, 0.5, 0) - Vec3(0.5, 0, 0.5);
  const Vec3 d2 = Vec3(0, 0, 0.5) - Vec3(0.5, 0.5, 0);
  EXPECT_NEAR(tris[0].area() + tris[1].area(), 0.5 * d1.cross(d2).norm(), 1e-15);
  for (const auto &t : tris)
    for (const auto &v : t.vertices)
      EXPECT_NEAR(v.y() + v.z(), 0.5, 1e-15);
}

TEST(MarchingTet, NoSignChange) {
  EXPECT_TRUE(marching_tet(unit_tet, {1, 2, 3, 4}).empty());
  EXPECT_TRUE(marching_tet(unit_tet, {0, 0, 0, 0}).empty());
  EXPECT_THROW(marching_tet(unit_tet, {1, std::nan(""), 1, -1}), NumericalError);
}

TEST(MarchingTet, SharedEdgeRootsAreBitIdentical) {
  const Vec3 a(0.1, 0.2, 0.3), b(0.7, 0.1, 0.2);
  const double fa = -0.3, fb = 0.45;
  const Vec3 r1 = detail::edge_root(a, fa, 5, b, fb, 9);
  const Vec3 r2 = detail::edge_root(b, fb, 9, a, fa, 5);
  EXPECT_EQ(r1, r2);
}

TEST(LiftPoint, SphereExamples) {
  const Sphere s;
  const Vec3 x = lift_point(Vec3(0.9, 0, 0), s, Vec3(1, 0, 0), 0.2);
  EXPECT_NEAR((x - Vec3(1, 0, 0)).norm(), 0.0, 1e-14);
  const Vec3 y = lift_point(Vec3(0, 0.6, 0.9), s, 0.2);
  EXPECT_NEAR(y.norm(), 1.0, 1e-14);
  EXPECT_NEAR(y.normalized().dot(Vec3(0, 0.6, 0.9).normalized()), 1.0, 1e-14);
  EXPECT_THROW(lift_point(Vec3(0.5, 0, 0), s, Vec3(1, 0, 0), 0.2), NumericalError);
}

TEST(BuildSurface, PlaneHasExactArea) {
  const BackgroundMesh mesh(Box{Vec3(0, 0, 0), Vec3(1, 1, 1)}, 4);
  std::vector<double> phi(mesh.num_vertices());
  for (Index v = 0; v < mesh.num_vertices(); ++v)
    phi[v] = mesh.vertex(v).z() - 0.3;
  const auto active = extract_active(mesh, phi);
  const auto ds = build_surface(active, ImplicitSurface::torus(), 1, 4);
  EXPECT_NEAR(ds.total_area, 1.0, 1e-12);
  ds.for_each_point([](const SurfaceCell &, const SurfaceQuadPoint &q) {
    EXPECT_NEAR((q.normal - Vec3(0, 0, 1)).norm(), 0.0, 1e-12);
    EXPECT_NEAR(q.point.z(), 0.3, 1e-14);
  });
}

TEST(BuildSurface, TorusAreaAtLevelTwo) {
  const auto torus = ImplicitSurface::torus();
  const auto active = torus_active(2);
  const double exact = 2.0 * std::numbers::pi * std::numbers::pi;
  for (int k_g : {1, 2}) {
    const auto ds = build_surface(active, torus, k_g, 4);
    EXPECT_NEAR(ds.total_area / exact, 1.0, 0.02) << "k_g = " << k_g;
    double sum = 0.0;
    for (const auto &c : ds.cells)
      sum += c.area();
    EXPECT_NEAR(sum, ds.total_area, 1e-12);
  }
}

TEST(BuildSurface, QuadraticGeometryIsCloser) {
  const auto torus = ImplicitSurface::torus();
  for (int level : {0, 1}) {
    const auto active = torus_active(level);
    const double d1 = max_distance(build_surface(active, torus, 1, 4), torus);
    const double d2 = max_distance(build_surface(active, torus, 2, 4), torus);
    EXPECT_LT(d2, 0.5 * active.h() * d1) << "level " << level;
  }
}

TEST(BuildSurface, NormalsPointOutward) {
  const auto torus = ImplicitSurface::torus();
  const auto active = torus_active(1);
  for (int k_g : {1, 2}) {
    const auto ds = build_surface(active, torus, k_g, 4);
    ds.for_each_point([&](const SurfaceCell &, const SurfaceQuadPoint &q) {
      EXPECT_GT(q.normal.dot(surface_normal(torus, q.point)), 0.9);
      EXPECT_NEAR(q.normal.norm(), 1.0, 1e-12);
    });
  }
}

TEST(BuildSurface, FlatCellsStayInsideTheirTet) {
  const auto torus = ImplicitSurface::torus();
  const auto active = torus_active(0);
  for (int k_g : {1, 2}) {
    const auto ds = build_surface(active, torus, k_g, 4);
    for (const auto &c : ds.cells) {
      const TetGeometry geo(active.tet_points(c.tet));
      for (const auto &q : c.quad)
        EXPECT_TRUE(geo.contains(q.reference, 1e-12));
    }
  }
}

TEST(BuildSurface, RejectsBadOrders) {
  const auto active = torus_active(0);
  EXPECT_THROW(build_surface(active, ImplicitSurface::torus(), 3, 4), ConfigError);
  EXPECT_THROW(build_surface(active, ImplicitSurface::torus(), 1, 8), ConfigError);
}

TEST(SurfaceMean, Examples) {
  const auto torus = ImplicitSurface::torus();
  const auto ds = build_surface(torus_active(1), torus, 1, 4);
  std::vector<double> ones(ds.num_quad_points(), 2.5);
  EXPECT_NEAR(surface_mean(ds, ones), 2.5, 1e-12);
  // z is odd under reflection of the torus, so its mean is small
  std::vector<double> z;
  ds.for_each_point([&](const SurfaceCell &, const SurfaceQuadPoint &q) { z.push_back(q.point.z()); });
  EXPECT_LT(std::abs(surface_mean(ds, z)), 1e-2);
  EXPECT_THROW(surface_mean(ds, std::vector<double>(3, 1.0)), ConfigError);
  EXPECT_THROW(surface_mean(DiscreteSurface{}, std::vector<double>{}), NumericalError);
}

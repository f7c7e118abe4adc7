#pragma once

#include <surfdarcy/error.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace surfdarcy::quadrature {

/// Rule on a reference simplex. Points are barycentric coordinates; the
/// weights sum to one, i.e. they are fractions of the simplex measure.
template <int N> struct SimplexRule {
  std::vector<std::array<double, N>> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

using TriangleRule = SimplexRule<3>;
using TetRule = SimplexRule<4>;

/// Gauss-Legendre nodes and weights on [0, 1].
inline void gauss_legendre(int n, std::vector<double> &nodes,
                           std::vector<double> &weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    nodes[i] = 0.5 * (1.0 - x);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

namespace detail {

inline void add_orbit_s3(TriangleRule &r, double w, double a) {
  r.points.push_back({a, a, 1.0 - 2.0 * a});
  r.points.push_back({a, 1.0 - 2.0 * a, a});
  r.points.push_back({1.0 - 2.0 * a, a, a});
  for (int i = 0; i < 3; ++i)
    r.weights.push_back(w);
}

inline void add_orbit_s6(TriangleRule &r, double w, double a, double b) {
  const double c = 1.0 - a - b;
  const std::array<std::array<double, 3>, 6> perms{{{a, b, c},
                                                    {a, c, b},
                                                    {b, a, c},
                                                    {b, c, a},
                                                    {c, a, b},
                                                    {c, b, a}}};
  for (const auto &p : perms) {
    r.points.push_back(p);
    r.weights.push_back(w);
  }
}

} // namespace detail

/// Symmetric Dunavant rules of degree 2 (3 points), 4 (6 points) and
/// 6 (12 points).
inline TriangleRule triangle_rule(int degree) {
  TriangleRule r;
  if (degree <= 2) {
    detail::add_orbit_s3(r, 1.0 / 3.0, 1.0 / 6.0);
    r.degree = 2;
  } else if (degree <= 4) {
    detail::add_orbit_s3(r, 0.223381589678011, 0.445948490915965);
    detail::add_orbit_s3(r, 0.109951743655322, 0.091576213509771);
    r.degree = 4;
  } else if (degree <= 6) {
    detail::add_orbit_s3(r, 0.116786275726379, 0.249286745170910);
    detail::add_orbit_s3(r, 0.050844906370207, 0.063089014491502);
    detail::add_orbit_s6(r, 0.082851075618374, 0.053145049844817,
                         0.310352451033784);
    r.degree = 6;
  } else {
    throw ConfigError("triangle quadrature degree " + std::to_string(degree) +
                      " not available (max 6)");
  }
  return r;
}

/// Conical product (collapsed Gauss) rule on the tetrahedron, exact for
/// polynomials up to the requested degree.
inline TetRule tet_rule(int degree) {
  if (degree < 0)
    throw ConfigError("negative quadrature degree");
  // the Duffy Jacobian adds degree 2 in the first and 1 in the second
  // collapsed direction
  const int n = (degree + 4) / 2;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  TetRule r;
  r.degree = degree;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double u = x[i], v = x[j], t = x[k];
        const double l1 = u;
        const double l2 = (1.0 - u) * v;
        const double l3 = (1.0 - u) * (1.0 - v) * t;
        const double jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
        r.points.push_back({1.0 - l1 - l2 - l3, l1, l2, l3});
        r.weights.push_back(6.0 * w[i] * w[j] * w[k] * jac);
      }
  return r;
}

} // namespace surfdarcy::quadrature

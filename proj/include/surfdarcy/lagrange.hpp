#pragma once

#include <surfdarcy/error.hpp>
#include <surfdarcy/geometry.hpp>

#include <array>
#include <string>

namespace surfdarcy {

/// Local edges of a tetrahedron in the order used by P2 elements.
inline constexpr std::array<std::array<int, 2>, 6> tet_edges{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// Affine tetrahedron with barycentric coordinates and their gradients.
class TetGeometry {
public:
  explicit TetGeometry(const std::array<Vec3, 4> &p) : p_(p) {
    Mat3 jac;
    jac.col(0) = p[1] - p[0];
    jac.col(1) = p[2] - p[0];
    jac.col(2) = p[3] - p[0];
    volume_ = jac.determinant() / 6.0;
    if (!(std::abs(volume_) > 0.0))
      throw NumericalError("degenerate tetrahedron");
    inv_ = jac.inverse();
    // grad lambda_i for i = 1..3 are the rows of J^{-1}
    for (int i = 0; i < 3; ++i)
      grad_[i + 1] = inv_.row(i).transpose();
    grad_[0] = -(grad_[1] + grad_[2] + grad_[3]);
  }

  const std::array<Vec3, 4> &points() const { return p_; }
  double volume() const { return std::abs(volume_); }
  const std::array<Vec3, 4> &lambda_gradients() const { return grad_; }

  std::array<double, 4> barycentric(const Vec3 &x) const {
    const Vec3 l = inv_ * (x - p_[0]);
    return {1.0 - l.sum(), l[0], l[1], l[2]};
  }

  Vec3 point(const std::array<double, 4> &lambda) const {
    return lambda[0] * p_[0] + lambda[1] * p_[1] + lambda[2] * p_[2] +
           lambda[3] * p_[3];
  }

  bool contains(const Vec3 &x, double tol = 1e-10) const {
    for (double l : barycentric(x))
      if (l < -tol || l > 1.0 + tol)
        return false;
    return true;
  }

  /// Lagrange nodes of order k (vertices, then edge midpoints for k = 2).
  std::vector<Vec3> nodes(int order) const {
    std::vector<Vec3> out(p_.begin(), p_.end());
    if (order == 2)
      for (const auto &e : tet_edges)
        out.push_back(0.5 * (p_[e[0]] + p_[e[1]]));
    return out;
  }

private:
  std::array<Vec3, 4> p_;
  Mat3 inv_;
  std::array<Vec3, 4> grad_;
  double volume_ = 0.0;
};

inline int lagrange_dofs(int order) { return order == 1 ? 4 : 10; }

/// Values and physical gradients of the P1 or P2 Lagrange basis at a point
/// given in barycentric coordinates. Outputs must hold lagrange_dofs(order)
/// entries.
inline void lagrange_basis(const TetGeometry &geo, int order,
                           const std::array<double, 4> &l, double *values,
                           Vec3 *grads) {
  const auto &gl = geo.lambda_gradients();
  if (order == 1) {
    for (int i = 0; i < 4; ++i) {
      values[i] = l[i];
      grads[i] = gl[i];
    }
    return;
  }
  if (order != 2)
    throw ConfigError("Lagrange order " + std::to_string(order) +
                      " not supported");
  for (int i = 0; i < 4; ++i) {
    values[i] = l[i] * (2.0 * l[i] - 1.0);
    grads[i] = (4.0 * l[i] - 1.0) * gl[i];
  }
  for (int e = 0; e < 6; ++e) {
    const int a = tet_edges[e][0], b = tet_edges[e][1];
    values[4 + e] = 4.0 * l[a] * l[b];
    grads[4 + e] = 4.0 * (l[a] * gl[b] + l[b] * gl[a]);
  }
}

/// Degree-k nodal interpolant of a scalar function on one tetrahedron.
class TetInterpolant {
public:
  template <class F>
  TetInterpolant(const TetGeometry &geo, int order, F &&f)
      : geo_(geo), order_(order) {
    const auto nodes = geo.nodes(order);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      coeffs_[i] = f(nodes[i]);
  }

  double value(const Vec3 &x) const {
    double v[10];
    Vec3 g[10];
    lagrange_basis(geo_, order_, geo_.barycentric(x), v, g);
    double out = 0.0;
    for (int i = 0; i < lagrange_dofs(order_); ++i)
      out += coeffs_[i] * v[i];
    return out;
  }

  Vec3 gradient(const Vec3 &x) const {
    double v[10];
    Vec3 g[10];
    lagrange_basis(geo_, order_, geo_.barycentric(x), v, g);
    Vec3 out = Vec3::Zero();
    for (int i = 0; i < lagrange_dofs(order_); ++i)
      out += coeffs_[i] * g[i];
    return out;
  }

  const TetGeometry &geometry() const { return geo_; }
  int order() const { return order_; }
  const std::array<double, 10> &coefficients() const { return coeffs_; }

private:
  TetGeometry geo_;
  int order_;
  std::array<double, 10> coeffs_{};
};

} // namespace surfdarcy

#pragma once

#include <surfdarcy/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <functional>

namespace surfdarcy {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Central finite-difference step used by all derivative checks.
inline constexpr double fd_step = 1e-5;

/// Torus around the z-axis: tube of radius `minor` around a circle of
/// radius `major` in the plane z = 0.
struct Torus {
  double major = 1.0;
  double minor = 0.5;
};

/// Closed surface given by the zero set of its exact signed distance.
///
/// A translated surface is stored as the base torus plus an offset; all
/// queries at x are answered by the base torus at x - offset. Queries that
/// rely on the closest point projection are valid within the tubular
/// neighborhood |rho| < delta0.
class ImplicitSurface {
public:
  static ImplicitSurface torus(double major = 1.0, double minor = 0.5,
                               double delta0 = 0.4) {
    if (!(minor > 0.0) || !(major > minor))
      throw ConfigError("torus radii must satisfy 0 < r < R");
    if (!(delta0 > 0.0) || !(delta0 < minor))
      throw ConfigError("tubular neighborhood width must satisfy 0 < delta0 < r");
    ImplicitSurface s;
    s.torus_ = Torus{major, minor};
    s.delta0_ = delta0;
    return s;
  }

  static ImplicitSurface translated(const ImplicitSurface &inner,
                                    const Vec3 &offset) {
    ImplicitSurface s = inner;
    s.offset_ += offset;
    return s;
  }

  const Torus &shape() const { return torus_; }
  const Vec3 &offset() const { return offset_; }
  double delta0() const { return delta0_; }

  /// Area of the surface; translation invariant.
  double area() const {
    return 4.0 * std::numbers::pi * std::numbers::pi * torus_.major * torus_.minor;
  }

  Vec3 to_local(const Vec3 &x) const { return x - offset_; }
  Vec3 to_global(const Vec3 &y) const { return y + offset_; }

private:
  Torus torus_{};
  Vec3 offset_ = Vec3::Zero();
  double delta0_ = 0.4;
};

/// Tangential projector, normal and Hessian of rho at a point.
struct SurfaceFrame {
  Vec3 point;
  Vec3 normal;
  Mat3 projector;
  Mat3 hessian;
};

namespace detail {

struct TorusLocal {
  double s;    // distance to the z-axis
  double d;    // distance to the tube-center circle
  Vec3 offset; // vector from the tube-center circle to the point
};

inline TorusLocal torus_local(const Torus &t, const Vec3 &y) {
  const double s = std::sqrt(std::max(0.0, y.x() * y.x() + y.y() * y.y()));
  TorusLocal out{};
  out.s = s;
  if (s > 0.0) {
    const double scale = (s - t.major) / s;
    out.offset = Vec3(scale * y.x(), scale * y.y(), y.z());
  } else {
    // on the axis every point of the center circle is equidistant
    out.offset = Vec3(-t.major, 0.0, y.z());
  }
  out.d = std::sqrt(std::max(0.0, out.offset.squaredNorm()));
  return out;
}

} // namespace detail

/// Exact signed distance; negative inside the tube.
inline double signed_distance(const ImplicitSurface &surface, const Vec3 &x) {
  const Vec3 y = surface.to_local(x);
  const double s = std::sqrt(y.x() * y.x() + y.y() * y.y());
  const double a = s - surface.shape().major;
  return std::sqrt(std::max(0.0, y.z() * y.z() + a * a)) - surface.shape().minor;
}

/// Gradient of the signed distance, which is the unit normal of the level
/// set through x.
inline Vec3 surface_normal(const ImplicitSurface &surface, const Vec3 &x) {
  const auto loc = detail::torus_local(surface.shape(), surface.to_local(x));
  if (loc.s < 1e-10 || loc.d < 1e-10)
    throw NumericalError("undefined normal");
  return loc.offset / loc.d;
}

inline Vec3 closest_point(const ImplicitSurface &surface, const Vec3 &x) {
  if (!(std::abs(signed_distance(surface, x)) < surface.delta0()))
    throw NumericalError("projection not unique");
  const Vec3 y = surface.to_local(x);
  const auto loc = detail::torus_local(surface.shape(), y);
  const Vec3 center = y - loc.offset;
  return surface.to_global(center + surface.shape().minor * loc.offset / loc.d);
}

/// Normal, projector P = I - n n^T and Hessian of rho at x.
///
/// The Hessian is (I - (R/s) e_phi e_phi^T - n n^T) / d, with e_phi the
/// azimuthal direction; its eigenvalues are 1/d along the meridian,
/// (1 - R/s)/d along e_phi and 0 along n.
inline SurfaceFrame frame_at(const ImplicitSurface &surface, const Vec3 &x) {
  if (!(std::abs(signed_distance(surface, x)) < surface.delta0()))
    throw NumericalError("projection not unique");
  const Vec3 y = surface.to_local(x);
  const auto loc = detail::torus_local(surface.shape(), y);
  if (loc.s < 1e-10 || loc.d < 1e-10)
    throw NumericalError("undefined normal");
  SurfaceFrame f;
  f.point = x;
  f.normal = loc.offset / loc.d;
  f.projector = Mat3::Identity() - f.normal * f.normal.transpose();
  const Vec3 e_phi(-y.y() / loc.s, y.x() / loc.s, 0.0);
  f.hessian = (Mat3::Identity() -
               (surface.shape().major / loc.s) * e_phi * e_phi.transpose() -
               f.normal * f.normal.transpose()) /
              loc.d;
  return f;
}

/// Hessian of rho by central differences of the analytic gradient.
inline Mat3 hessian_fd(const ImplicitSurface &surface, const Vec3 &x,
                       double step = fd_step) {
  Mat3 h;
  for (int j = 0; j < 3; ++j) {
    Vec3 e = Vec3::Zero();
    e[j] = step;
    h.col(j) = (surface_normal(surface, x + e) - surface_normal(surface, x - e)) /
               (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

/// Pull-back extension f(p(x)) of a surface function.
template <class F>
auto extend(const ImplicitSurface &surface, F &&f, const Vec3 &x) {
  return f(closest_point(surface, x));
}

inline double extend_scalar(const ImplicitSurface &surface,
                            const std::function<double(const Vec3 &)> &f,
                            const Vec3 &x) {
  return f(closest_point(surface, x));
}

inline Vec3 extend_vector(const ImplicitSurface &surface,
                          const std::function<Vec3(const Vec3 &)> &f,
                          const Vec3 &x) {
  return f(closest_point(surface, x));
}

/// Jacobian of the extended field v(p(.)) by central differences.
template <class F>
Mat3 extended_jacobian_fd(const ImplicitSurface &surface, F &&v, const Vec3 &x,
                          double step = fd_step) {
  Mat3 jac;
  for (int j = 0; j < 3; ++j) {
    Vec3 e = Vec3::Zero();
    e[j] = step;
    const Vec3 vp = v(closest_point(surface, x + e));
    const Vec3 vm = v(closest_point(surface, x - e));
    jac.col(j) = (vp - vm) / (2.0 * step);
  }
  return jac;
}

/// div_G v = tr(P J) with J the Jacobian of the extension of v. Testing
/// utility; x is expected on the surface.
template <class F>
double surface_divergence_fd(const ImplicitSurface &surface, F &&v,
                             const Vec3 &x, double step = fd_step) {
  const Vec3 n = surface_normal(surface, x);
  const Mat3 proj = Mat3::Identity() - n * n.transpose();
  return (proj * extended_jacobian_fd(surface, v, x, step)).trace();
}

/// Gradient of a scalar field by central differences.
template <class F>
Vec3 gradient_fd(F &&f, const Vec3 &x, double step = fd_step) {
  Vec3 g;
  for (int j = 0; j < 3; ++j) {
    Vec3 e = Vec3::Zero();
    e[j] = step;
    g[j] = (f(Vec3(x + e)) - f(Vec3(x - e))) / (2.0 * step);
  }
  return g;
}

} // namespace surfdarcy

#pragma once

#include <surfdarcy/assembly.hpp>
#include <surfdarcy/cut_surface.hpp>
#include <surfdarcy/error.hpp>
#include <surfdarcy/fe_space.hpp>
#include <surfdarcy/geometry.hpp>
#include <surfdarcy/mesh.hpp>
#include <surfdarcy/solver.hpp>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace surfdarcy {

/// Manufactured torus solution with p = z and a divergence-free tangential
/// velocity; f = 0 and g = u + grad_G p.
///
/// All evaluators take a point on the surface (global coordinates); the
/// formulas are applied in the torus frame, i.e. after removing the offset.
class ManufacturedSolution {
public:
  explicit ManufacturedSolution(ImplicitSurface surface = ImplicitSurface::torus())
      : surface_(std::move(surface)) {}

  const ImplicitSurface &surface() const { return surface_; }

  Vec3 velocity(const Vec3 &x) const {
    const Vec3 y = surface_.to_local(x);
    const double R = surface_.shape().major;
    const double s = std::sqrt(y.x() * y.x() + y.y() * y.y());
    if (!(s > 0.0))
      throw NumericalError("manufactured velocity undefined on the z-axis");
    return Vec3(2.0 * y.x() * y.z(), -2.0 * y.y() * y.z(),
                2.0 * (y.x() * y.x() - y.y() * y.y()) * (R - s) / s);
  }

  double pressure(const Vec3 &x) const { return surface_.to_local(x).z(); }

  /// Tangential gradient P e_z of the pressure.
  Vec3 pressure_surface_gradient(const Vec3 &x) const {
    const Vec3 n = surface_normal(surface_, x);
    return Vec3::UnitZ() - n.z() * n;
  }

  double source(const Vec3 &) const { return 0.0; }

  Vec3 load(const Vec3 &x) const {
    const Vec3 y = surface_.to_local(x);
    const double R = surface_.shape().major;
    const double s = std::sqrt(y.x() * y.x() + y.y() * y.y());
    if (!(s > 0.0))
      throw NumericalError("manufactured load undefined on the z-axis");
    const double a = R * R + y.x() * y.x() + y.y() * y.y() - 2.0 * R * s +
                     y.z() * y.z();
    if (!(a > 0.0))
      throw NumericalError("manufactured load undefined on the tube center");
    const double k = 1.0 - R / s;
    return Vec3(y.x() * y.z() * (2.0 - k / a), y.y() * y.z() * (-2.0 - k / a),
                1.0 - 2.0 * (y.x() * y.x() - y.y() * y.y()) * (s - R) / s -
                    y.z() * y.z() / a);
  }

  DarcyData data() const {
    return DarcyData{[this](const Vec3 &x) { return source(x); },
                     [this](const Vec3 &x) { return load(x); }};
  }

  enum class Field { Velocity, Pressure, Load, Source };

  /// Extension of a field to the tubular neighbourhood: evaluation at the
  /// closest point. Scalar fields are returned in the first component.
  Vec3 eval_exact(Field field, const Vec3 &x) const {
    const Vec3 cp = closest_point(surface_, x);
    switch (field) {
    case Field::Velocity:
      return velocity(cp);
    case Field::Pressure:
      return Vec3(pressure(cp), 0.0, 0.0);
    case Field::Load:
      return load(cp);
    case Field::Source:
      return Vec3(source(cp), 0.0, 0.0);
    }
    return Vec3::Zero();
  }

  /// Point on the surface for torus angles (theta around the z-axis, phi
  /// around the tube).
  Vec3 surface_point(double theta, double phi) const {
    const double R = surface_.shape().major, r = surface_.shape().minor;
    return surface_.to_global(Vec3((R + r * std::cos(phi)) * std::cos(theta),
                                   (R + r * std::cos(phi)) * std::sin(theta),
                                   r * std::sin(phi)));
  }

  /// Uniformly distributed angles (not area-uniform) from the given engine.
  template <class Rng> Vec3 random_surface_point(Rng &rng) const {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const double theta = angle(rng);
    const double phi = angle(rng);
    return surface_point(theta, phi);
  }

private:
  ImplicitSurface surface_;
};

/// One of the six combinations of approximation orders and stabilization.
struct CaseConfig {
  int id = 0;     // 1..6, or 0 for a custom combination
  int k_u = 1;
  int k_p = 1;
  int k_g = 1;
  Stabilization stab = Stabilization::FullGradient;
};

inline CaseConfig case_table(int id) {
  using S = Stabilization;
  switch (id) {
  case 1: return {1, 1, 1, 1, S::FullGradient};
  case 2: return {2, 1, 1, 1, S::NormalGradient};
  case 3: return {3, 1, 2, 1, S::FullGradient};
  case 4: return {4, 1, 2, 1, S::NormalGradient};
  case 5: return {5, 1, 2, 2, S::FullGradient};
  case 6: return {6, 1, 2, 2, S::NormalGradient};
  default:
    throw ConfigError("case id must be in 1..6, got " + std::to_string(id));
  }
}

/// Everything needed to reproduce one convergence study.
struct StudyConfig {
  CaseConfig case_config = case_table(1);
  double tau = 0.1;
  double alpha = 2.0;
  Index n_cells0 = 14;
  Box box{};
  Vec3 offset = Vec3::Zero();
  double major = 1.0;
  double minor = 0.5;
  int quad_degree = 4;
  int error_quad_degree = 6;

  ImplicitSurface surface() const {
    return ImplicitSurface::translated(ImplicitSurface::torus(major, minor), offset);
  }

  AssemblyParams params(double h) const {
    return AssemblyParams{case_config.stab, tau, alpha, h, case_config.k_g};
  }

  void validate() const {
    if (!(tau > 0.0))
      throw ConfigError("tau must be positive");
    if (!(alpha >= 0.0 && alpha <= 2.0))
      throw ConfigError("alpha must lie in [0, 2]");
    if (n_cells0 < 1)
      throw ConfigError("n_cells0 must be >= 1");
    for (int k : {case_config.k_u, case_config.k_p, case_config.k_g})
      if (k != 1 && k != 2)
        throw ConfigError("approximation orders must be 1 or 2");
    if (quad_degree < 2 * std::max(case_config.k_u, case_config.k_p))
      throw ConfigError("surface quadrature degree must be >= 2 max(k_u, k_p)");
  }
};

struct ErrorTriple {
  double u_l2 = 0.0;
  double p_h1 = 0.0;
  double p_l2 = 0.0;
};

/// Finite element pair and its solution, bundled for post-processing.
struct DiscreteFields {
  const FESpace *velocity = nullptr;
  const FESpace *pressure = nullptr;
  const Solution *solution = nullptr;
};

namespace detail {

struct PointFields {
  Vec3 u;
  double p;
  Vec3 grad_p;
};

/// Calls f(quad point, fields) for every quadrature point of ds.
template <class F>
void for_each_field_point(const DiscreteFields &fields, const DiscreteSurface &ds,
                          F &&f) {
  const auto &active = fields.velocity->active_mesh();
  double vu[10], vp[10];
  Vec3 gu[10], gp[10];
  for (const auto &cell : ds.cells) {
    const TetGeometry geo(active.tet_points(cell.tet));
    const auto &cu = fields.velocity->cell_dofs(cell.tet);
    const auto &cp = fields.pressure->cell_dofs(cell.tet);
    const int nu = fields.velocity->dofs_per_cell();
    const int np = fields.pressure->dofs_per_cell();
    for (const auto &q : cell.quad) {
      surface_basis(geo, fields.velocity->order(), q, vu, gu);
      surface_basis(geo, fields.pressure->order(), q, vp, gp);
      PointFields pf{Vec3::Zero(), 0.0, Vec3::Zero()};
      for (int i = 0; i < nu; ++i)
        for (int c = 0; c < 3; ++c)
          pf.u[c] += fields.solution->u[c][cu[i]] * vu[i];
      for (int i = 0; i < np; ++i) {
        pf.p += fields.solution->p[cp[i]] * vp[i];
        pf.grad_p += fields.solution->p[cp[i]] * gp[i];
      }
      f(q, pf);
    }
  }
}

} // namespace detail

/// Velocity L2, pressure H1 and pressure L2 errors on Gamma_h.
///
/// The exact pressure is shifted by its Gamma_h mean so that both sides
/// carry the same normalization; the H1 part compares the tangential
/// discrete gradient P_h grad p_h with grad_G p at the closest point.
inline ErrorTriple compute_errors(const DiscreteFields &fields,
                                  const DiscreteSurface &ds,
                                  const ManufacturedSolution &exact) {
  const auto &surface = exact.surface();
  double area = 0.0, p_mean = 0.0;
  ds.for_each_point([&](const SurfaceCell &, const SurfaceQuadPoint &q) {
    area += q.weight;
    p_mean += q.weight * exact.pressure(closest_point(surface, q.point));
  });
  p_mean /= area;

  double eu = 0.0, ep = 0.0, egp = 0.0;
  detail::for_each_field_point(fields, ds, [&](const SurfaceQuadPoint &q,
                                               const detail::PointFields &pf) {
    const Vec3 cp = closest_point(surface, q.point);
    eu += q.weight * (pf.u - exact.velocity(cp)).squaredNorm();
    const double dp = pf.p - (exact.pressure(cp) - p_mean);
    ep += q.weight * dp * dp;
    const Vec3 tg = pf.grad_p - pf.grad_p.dot(q.normal) * q.normal;
    egp += q.weight * (tg - exact.pressure_surface_gradient(cp)).squaredNorm();
  });
  return ErrorTriple{std::sqrt(eu), std::sqrt(ep + egp), std::sqrt(ep)};
}

/// ||u_h . n||_{Gamma_h} with the exact normal at closest points.
inline double tangency_defect(const DiscreteFields &fields,
                              const DiscreteSurface &ds,
                              const ImplicitSurface &surface) {
  double d = 0.0;
  detail::for_each_field_point(fields, ds, [&](const SurfaceQuadPoint &q,
                                               const detail::PointFields &pf) {
    const double un = pf.u.dot(surface_normal(surface, closest_point(surface, q.point)));
    d += q.weight * un * un;
  });
  return std::sqrt(d);
}

/// Matrices of the discrete energy norm
///   |||V|||_h^2 = ||v||^2_{Gamma_h} + ||grad q||^2_{Gamma_h} + S_h(V, V).
struct EnergyNorm {
  SparseMatrix velocity_mass;     // surface mass, velocity space
  SparseMatrix pressure_gradient; // surface full-gradient form, pressure space
  SparseMatrix velocity_stab;
  SparseMatrix pressure_stab;

  EnergyNorm(const FESpace &vel, const FESpace &pre, const DiscreteSurface &ds,
             const ImplicitSurface &surface, const AssemblyParams &params)
      : velocity_mass(surface_matrix(vel, ds, SurfaceForm::Mass)),
        pressure_gradient(surface_matrix(pre, ds, SurfaceForm::FullGradient)),
        velocity_stab(assemble_stabilization(vel, surface, params)),
        pressure_stab(assemble_stabilization(pre, surface, params)) {}

  double stabilization_squared(const std::array<Eigen::VectorXd, 3> &u,
                               const Eigen::VectorXd &p) const {
    double s = p.dot(pressure_stab * p);
    for (const auto &uc : u)
      s += uc.dot(velocity_stab * uc);
    return s;
  }

  double velocity_squared(const std::array<Eigen::VectorXd, 3> &u) const {
    double s = 0.0;
    for (const auto &uc : u)
      s += uc.dot(velocity_mass * uc);
    return s;
  }

  double operator()(const std::array<Eigen::VectorXd, 3> &u,
                    const Eigen::VectorXd &p) const {
    return std::sqrt(std::max(0.0, velocity_squared(u) +
                                       p.dot(pressure_gradient * p) +
                                       stabilization_squared(u, p)));
  }
};

inline double energy_norm(const EnergyNorm &norm, const Solution &v) {
  return norm(v.u, v.p);
}

/// EOC(k) = log(E_{k-1}/E_k)/log 2; absent at level 0 and wherever an error
/// vanishes.
inline std::vector<std::optional<double>> compute_eoc(const std::vector<double> &errors) {
  std::vector<std::optional<double>> eoc(errors.size());
  for (std::size_t k = 1; k < errors.size(); ++k)
    if (errors[k - 1] > 0.0 && errors[k] > 0.0)
      eoc[k] = std::log(errors[k - 1] / errors[k]) / std::log(2.0);
  return eoc;
}

/// Least-squares slope of log(error) against log(h).
inline double observed_order(const std::vector<double> &h,
                             const std::vector<double> &err) {
  const std::size_t n = h.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct LevelResult {
  int level = 0;
  double h = 0.0;
  int dofs_u = 0;   // all three velocity components
  int dofs_p = 0;
  std::size_t active_tets = 0;
  double area = 0.0;
  ErrorTriple errors;
  std::optional<double> eoc_u_l2, eoc_p_h1, eoc_p_l2;
  double tangency = 0.0;
  double relative_residual = 0.0;
  double seconds = 0.0;
};

struct ConvergenceReport {
  StudyConfig config;
  std::vector<LevelResult> levels;
};

/// Everything produced for one refinement level.
struct LevelSolve {
  BackgroundMesh mesh;
  std::unique_ptr<ActiveMesh> active;
  DiscreteSurface surface;   // emptied by solve_level unless keep_surface
  double surface_area = 0.0;
  std::unique_ptr<FESpace> velocity;
  std::unique_ptr<FESpace> pressure;
  AssembledSystem system;
  Solution solution;
};

inline BackgroundMesh level_mesh(const StudyConfig &config, int level) {
  BackgroundMesh mesh = build_background(config.box, config.n_cells0);
  for (int k = 0; k < level; ++k)
    mesh = refine_uniform(mesh);
  return mesh;
}

/// Runs mesh -> active mesh -> Gamma_h -> spaces -> assembly for one level.
/// Failures name the stage.
inline LevelSolve assemble_level(const StudyConfig &config, int level) {
  const auto surface = config.surface();
  const ManufacturedSolution exact(surface);
  const auto &cc = config.case_config;
  LevelSolve out;
  std::string stage = "mesh";
  try {
    out.mesh = level_mesh(config, level);
    stage = "active mesh";
    out.active = std::make_unique<ActiveMesh>(extract_active(out.mesh, surface));
    stage = "discrete surface";
    out.surface = build_surface(*out.active, surface, cc.k_g, config.quad_degree);
    out.surface_area = out.surface.total_area;
    stage = "spaces";
    out.velocity = std::make_unique<FESpace>(*out.active, cc.k_u);
    out.pressure = std::make_unique<FESpace>(*out.active, cc.k_p);
    stage = "assembly";
    out.system = assemble(*out.velocity, *out.pressure, out.surface, *out.active,
                          surface, exact.data(), config.params(out.mesh.h()));
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw NumericalError("level " + std::to_string(level) + ", stage " + stage +
                         ": " + e.what());
  }
  return out;
}

/// assemble_level followed by the direct solve. The matrix and the
/// assembly quadrature are released before factorizing unless asked to be
/// kept.
inline LevelSolve solve_level(const StudyConfig &config, int level,
                              bool keep_system = false, bool keep_surface = true) {
  LevelSolve out = assemble_level(config, level);
  if (!keep_surface)
    out.surface = DiscreteSurface{};
  try {
    out.solution = keep_system ? solve(out.system) : solve_and_release(out.system);
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw NumericalError("level " + std::to_string(level) + ", stage solve: " +
                         e.what());
  }
  return out;
}

/// Convergence study over levels 0..max_level.
inline ConvergenceReport
run_case(const StudyConfig &config, int max_level,
         const std::function<void(const LevelResult &)> &progress = {}) {
  config.validate();
  if (max_level < 0 || max_level > 4)
    throw ConfigError("levels must lie in 0..4");
  ConvergenceReport report;
  report.config = config;
  const ManufacturedSolution exact(config.surface());
  for (int level = 0; level <= max_level; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    LevelSolve ls = solve_level(config, level, false, false);
    const DiscreteSurface error_surface = build_surface(
        *ls.active, exact.surface(), config.case_config.k_g, config.error_quad_degree);
    const DiscreteFields fields{ls.velocity.get(), ls.pressure.get(), &ls.solution};
    LevelResult r;
    r.level = level;
    r.h = ls.mesh.h();
    r.dofs_u = 3 * ls.velocity->num_dofs();
    r.dofs_p = ls.pressure->num_dofs();
    r.active_tets = ls.active->num_tets();
    r.area = ls.surface_area;
    r.errors = compute_errors(fields, error_surface, exact);
    r.tangency = tangency_defect(fields, error_surface, exact.surface());
    r.relative_residual = ls.solution.relative_residual();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.levels.push_back(r);
    const std::size_t n = report.levels.size();
    if (n > 1) {
      const auto &prev = report.levels[n - 2].errors;
      auto eoc = [](double a, double b) -> std::optional<double> {
        if (a > 0.0 && b > 0.0)
          return std::log(a / b) / std::log(2.0);
        return std::nullopt;
      };
      report.levels.back().eoc_u_l2 = eoc(prev.u_l2, r.errors.u_l2);
      report.levels.back().eoc_p_h1 = eoc(prev.p_h1, r.errors.p_h1);
      report.levels.back().eoc_p_l2 = eoc(prev.p_l2, r.errors.p_l2);
    }
    if (progress)
      progress(report.levels.back());
  }
  return report;
}

} // namespace surfdarcy

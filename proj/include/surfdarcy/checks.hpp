#pragma once

#include <surfdarcy/verification.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace surfdarcy {

/// Worst deviations of the manufactured fields from their defining
/// identities at random surface points.
struct ManufacturedCheck {
  double max_normal_velocity = 0.0;   // |u . n|
  double max_source = 0.0;            // |f|
  double max_divergence = 0.0;        // |div_G u| by finite differences
  double max_residual = 0.0;          // |u + P grad p - g|
  double max_normal_load = 0.0;       // |g . n|

  bool passed() const {
    return max_normal_velocity <= 1e-10 && max_source == 0.0 &&
           max_divergence <= 1e-5 && max_residual <= 1e-8 &&
           max_normal_load <= 1e-10;
  }
};

inline ManufacturedCheck check_manufactured(const ManufacturedSolution &ms,
                                            std::uint64_t seed) {
  const auto &surface = ms.surface();
  std::mt19937_64 rng(seed);
  ManufacturedCheck c;
  const auto velocity = [&](const Vec3 &y) { return ms.velocity(y); };
  const auto pressure = [&](const Vec3 &y) {
    return extend_scalar(surface, [&](const Vec3 &z) { return ms.pressure(z); }, y);
  };
  for (int i = 0; i < 100; ++i) {
    const Vec3 x = ms.random_surface_point(rng);
    const Vec3 n = surface_normal(surface, x);
    const Vec3 u = ms.velocity(x);
    const Vec3 g = ms.load(x);
    const Vec3 grad = gradient_fd(pressure, x);
    const Vec3 tgrad = grad - grad.dot(n) * n;
    c.max_normal_velocity = std::max(c.max_normal_velocity, std::abs(u.dot(n)));
    c.max_normal_load = std::max(c.max_normal_load, std::abs(g.dot(n)));
    c.max_residual = std::max(c.max_residual, (u + tgrad - g).norm());
    c.max_source = std::max(c.max_source, std::abs(ms.source(x)));
    if (i < 20)
      c.max_divergence = std::max(c.max_divergence,
                                  std::abs(surface_divergence_fd(surface, velocity, x)));
  }
  return c;
}

struct GeometricLevel {
  int level = 0;
  double h = 0.0;
  double max_distance = 0.0;  // max |rho| at surface quadrature points
  double max_normal = 0.0;    // max |n^e - n_h| at surface quadrature points
};

struct GeometricRates {
  int geometry_order = 1;
  std::vector<GeometricLevel> levels;
  double order_distance = 0.0;
  double order_normal = 0.0;

  bool passed(double tol = 0.3) const {
    return std::abs(order_distance - (geometry_order + 1)) <= tol &&
           std::abs(order_normal - geometry_order) <= tol;
  }
};

/// Observed orders (least-squares slopes) of the distance and normal
/// errors of Gamma_h over levels first..last.
inline GeometricRates measure_geometric_rates(const StudyConfig &config, int k_g,
                                              int first = 1, int last = 3) {
  const auto surface = config.surface();
  GeometricRates out;
  out.geometry_order = k_g;
  std::vector<double> hs, ed, en;
  for (int level = first; level <= last; ++level) {
    const auto mesh = level_mesh(config, level);
    const auto active = extract_active(mesh, surface);
    const auto ds = build_surface(active, surface, k_g, config.quad_degree);
    GeometricLevel gl;
    gl.level = level;
    gl.h = mesh.h();
    ds.for_each_point([&](const SurfaceCell &, const SurfaceQuadPoint &q) {
      gl.max_distance = std::max(gl.max_distance, std::abs(signed_distance(surface, q.point)));
      gl.max_normal = std::max(gl.max_normal, (surface_normal(surface, q.point) - q.normal).norm());
    });
    out.levels.push_back(gl);
    hs.push_back(gl.h);
    ed.push_back(gl.max_distance);
    en.push_back(gl.max_normal);
  }
  out.order_distance = observed_order(hs, ed);
  out.order_normal = observed_order(hs, en);
  return out;
}

/// Largest sampled ratio of each discrete estimate on one level.
struct LemmaLevel {
  int level = 0;
  double h = 0.0;
  double bulk = 0.0;      // h^-1 ||v||^2_{T_h} / (||v||^2_{Gamma_h} + s_h(v, v))
  double poincare = 0.0;  // ||q - mean q||_{Gamma_h} / ||grad_{Gamma_h} q||_{Gamma_h}
  double combined = 0.0;  // h^-1 (||v||^2_{T_h} + ||q - mean q||^2_{T_h}) / |||V|||^2
};

struct LemmaReport {
  CaseConfig case_config;
  std::vector<LemmaLevel> levels;

  /// Ratio of the last-level maximum to the first-level maximum.
  template <class Member> double growth(Member m) const {
    return levels.back().*m / (levels.front().*m);
  }

  bool passed(double max_growth = 1.5) const {
    return growth(&LemmaLevel::bulk) <= max_growth &&
           growth(&LemmaLevel::poincare) <= max_growth &&
           growth(&LemmaLevel::combined) <= max_growth;
  }
};

namespace detail {

/// Random discrete function: even samples draw nodal values in [-1, 1],
/// odd samples interpolate a random low-frequency trigonometric field.
template <class Rng>
Eigen::VectorXd random_function(const FESpace &space, int sample, Rng &rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  if (sample % 2 == 0) {
    Eigen::VectorXd v(space.num_dofs());
    for (int i = 0; i < v.size(); ++i)
      v[i] = unit(rng);
    return v;
  }
  std::array<Vec3, 3> k;
  std::array<double, 3> amp, phase;
  for (int j = 0; j < 3; ++j) {
    k[j] = 3.0 * Vec3(unit(rng), unit(rng), unit(rng));
    amp[j] = unit(rng);
    phase[j] = std::numbers::pi * unit(rng);
  }
  return interpolate(space, [&](const Vec3 &x) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j)
      s += amp[j] * std::sin(k[j].dot(x) + phase[j]);
    return s;
  });
}

inline double quad(const SparseMatrix &m, const Eigen::VectorXd &v) { return v.dot(m * v); }

} // namespace detail

/// Samples the discrete Poincare-type estimates on levels first..last.
inline LemmaReport measure_lemma_ratios(const StudyConfig &config, int first = 1,
                                        int last = 3, int samples = 30,
                                        std::uint64_t seed = 1) {
  const auto surface = config.surface();
  const auto &cc = config.case_config;
  LemmaReport out;
  out.case_config = cc;
  std::mt19937_64 rng(seed);
  for (int level = first; level <= last; ++level) {
    const auto mesh = level_mesh(config, level);
    const auto active = extract_active(mesh, surface);
    const auto ds = build_surface(active, surface, cc.k_g, config.quad_degree);
    const FESpace vel(active, cc.k_u), pre(active, cc.k_p);
    const double h = mesh.h();
    const auto params = config.params(h);
    const SparseMatrix bulk_u = bulk_mass_matrix(vel), bulk_p = bulk_mass_matrix(pre);
    const SparseMatrix mass_u = surface_matrix(vel, ds, SurfaceForm::Mass);
    const SparseMatrix mass_p = surface_matrix(pre, ds, SurfaceForm::Mass);
    const SparseMatrix tgrad_p = surface_matrix(pre, ds, SurfaceForm::TangentialGradient);
    const SparseMatrix grad_p = surface_matrix(pre, ds, SurfaceForm::FullGradient);
    const SparseMatrix stab_u = assemble_stabilization(vel, surface, params);
    const SparseMatrix stab_p = assemble_stabilization(pre, surface, params);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(pre.num_dofs());
    const Eigen::VectorXd mass_ones = mass_p * ones;
    const double area = ones.dot(mass_ones);

    LemmaLevel ll;
    ll.level = level;
    ll.h = h;
    for (int s = 0; s < samples; ++s) {
      const Eigen::VectorXd v = detail::random_function(vel, s, rng);
      ll.bulk = std::max(ll.bulk, detail::quad(bulk_u, v) / h /
                                      (detail::quad(mass_u, v) + detail::quad(stab_u, v)));

      const Eigen::VectorXd q = detail::random_function(pre, s, rng);
      const Eigen::VectorXd q0 = q - (mass_ones.dot(q) / area) * ones;
      ll.poincare = std::max(ll.poincare, std::sqrt(detail::quad(mass_p, q0) /
                                                    detail::quad(tgrad_p, q)));

      double num = detail::quad(bulk_p, q0), den = detail::quad(grad_p, q) +
                                                   detail::quad(stab_p, q);
      for (int c = 0; c < 3; ++c) {
        const Eigen::VectorXd vc = detail::random_function(vel, s, rng);
        num += detail::quad(bulk_u, vc);
        den += detail::quad(mass_u, vc) + detail::quad(stab_u, vc);
      }
      ll.combined = std::max(ll.combined, num / h / den);
    }
    out.levels.push_back(ll);
  }
  return out;
}

struct PositionSample {
  Vec3 offset = Vec3::Zero();
  bool solved = false;
  double relative_residual = 0.0;
  ConditionEstimate condition;
  std::string error;
};

struct PositioningReport {
  CaseConfig case_config;
  int level = 0;
  std::vector<PositionSample> samples;

  bool all_solved(double residual_tol = 1e-9) const {
    return std::all_of(samples.begin(), samples.end(), [&](const PositionSample &s) {
      return s.solved && s.relative_residual < residual_tol;
    });
  }

  double min_condition() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto &s : samples)
      if (s.solved)
        m = std::min(m, s.condition.value);
    return m;
  }

  double max_condition() const {
    double m = 0.0;
    for (const auto &s : samples)
      if (s.solved)
        m = std::max(m, s.condition.value);
    return m;
  }

  double spread() const { return max_condition() / min_condition(); }

  bool passed(double residual_tol = 1e-9, double max_spread = 100.0) const {
    return !samples.empty() && all_solved(residual_tol) && spread() < max_spread;
  }
};

/// Solves on `count` surfaces translated by uniform offsets in [0, h]^3
/// (added to the configured offset) and estimates each condition number.
inline PositioningReport positioning_robustness(const StudyConfig &config, int level = 2,
                                                int count = 20, std::uint64_t seed = 1) {
  PositioningReport out;
  out.case_config = config.case_config;
  out.level = level;
  const double h = level_mesh(config, level).h();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shift(0.0, h);
  for (int i = 0; i < count; ++i) {
    PositionSample sample;
    sample.offset = Vec3(shift(rng), shift(rng), shift(rng));
    StudyConfig shifted = config;
    shifted.offset = config.offset + sample.offset;
    try {
      const LevelSolve ls = assemble_level(shifted, level);
      const SparseLU lu(ls.system.matrix);
      const Solution sol = solve(ls.system, lu);
      sample.relative_residual = sol.relative_residual();
      sample.condition = estimate_condition(ls.system.matrix, lu);
      sample.solved = true;
    } catch (const NumericalError &e) {
      sample.error = e.what();
    }
    out.samples.push_back(sample);
  }
  return out;
}

} // namespace surfdarcy

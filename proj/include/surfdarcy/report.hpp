#pragma once

#include <surfdarcy/error.hpp>
#include <surfdarcy/verification.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace surfdarcy {

namespace detail {

inline std::string format(const char *fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline std::string sci(double v) { return format("%.6e", v); }

inline std::string eoc_field(const std::optional<double> &e) {
  return e ? format("%.4f", *e) : std::string();
}

inline void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("cannot open " + path + " for writing");
  out << text;
  if (!out)
    throw ConfigError("failed writing " + path);
}

inline std::string case_label(const CaseConfig &c) {
  std::ostringstream s;
  if (c.id > 0)
    s << "case " << c.id << ' ';
  s << "(k_u, k_p, k_g) = (" << c.k_u << ", " << c.k_p << ", " << c.k_g << "), "
    << to_string(c.stab) << " stabilization";
  return s.str();
}

} // namespace detail

inline constexpr const char *csv_header =
    "level,h,dofs_u,dofs_p,err_u_L2,err_p_H1,err_p_L2,eoc_u_L2,eoc_p_H1,eoc_p_L2";

/// One row per level; EOC fields are empty where undefined.
inline std::string to_csv(const ConvergenceReport &report) {
  std::ostringstream s;
  s << csv_header << '\n';
  for (const auto &r : report.levels) {
    s << r.level << ',' << detail::format("%.6g", r.h) << ',' << r.dofs_u << ','
      << r.dofs_p << ',' << detail::sci(r.errors.u_l2) << ','
      << detail::sci(r.errors.p_h1) << ',' << detail::sci(r.errors.p_l2) << ','
      << detail::eoc_field(r.eoc_u_l2) << ',' << detail::eoc_field(r.eoc_p_h1) << ','
      << detail::eoc_field(r.eoc_p_l2) << '\n';
  }
  return s.str();
}

inline std::string config_summary(const StudyConfig &c) {
  std::ostringstream s;
  s << detail::case_label(c.case_config) << "; tau = " << detail::format("%g", c.tau)
    << ", alpha = " << detail::format("%g", c.alpha) << "; box = ["
    << detail::format("%g", c.box.lo.x()) << ", " << detail::format("%g", c.box.hi.x())
    << "]^3, n_cells0 = " << c.n_cells0 << "; torus R = " << detail::format("%g", c.major)
    << ", r = " << detail::format("%g", c.minor) << "; offset = ("
    << detail::format("%g", c.offset.x()) << ", " << detail::format("%g", c.offset.y())
    << ", " << detail::format("%g", c.offset.z()) << ")";
  return s.str();
}

/// Markdown table with the error/EOC column pairs of a convergence table.
inline std::string to_markdown(const ConvergenceReport &report) {
  std::ostringstream s;
  s << "## Convergence, " << detail::case_label(report.config.case_config) << "\n\n";
  s << config_summary(report.config) << "\n\n";
  s << "| level | h | dofs u | dofs p | ‖u_h − u‖ | EOC | ‖p_h − p‖_1 | EOC | ‖p_h − p‖ | EOC |\n";
  s << "|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto &r : report.levels) {
    auto eoc = [](const std::optional<double> &e) {
      return e ? detail::format("%.2f", *e) : std::string("–");
    };
    s << "| " << r.level << " | " << detail::format("%.4f", r.h) << " | " << r.dofs_u
      << " | " << r.dofs_p << " | " << detail::format("%.2e", r.errors.u_l2) << " | "
      << eoc(r.eoc_u_l2) << " | " << detail::format("%.2e", r.errors.p_h1) << " | "
      << eoc(r.eoc_p_h1) << " | " << detail::format("%.2e", r.errors.p_l2) << " | "
      << eoc(r.eoc_p_l2) << " |\n";
  }
  s << "\nThe H1 column uses the tangential gradient P_h grad p_h on Gamma_h.\n";
  return s.str();
}

inline void write_csv(const ConvergenceReport &report, const std::string &path) {
  detail::write_text(path, to_csv(report));
}

inline void write_markdown(const ConvergenceReport &report, const std::string &path) {
  detail::write_text(path, to_markdown(report));
}

} // namespace surfdarcy

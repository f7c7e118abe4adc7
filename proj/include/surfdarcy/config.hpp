#pragma once

#include <surfdarcy/error.hpp>
#include <surfdarcy/verification.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace surfdarcy {

struct RunConfig {
  StudyConfig study;
  int levels = 3;
  std::uint64_t seed = 1;
  std::string csv_path;
  std::string markdown_path;
  std::string vtk_dir;

  void validate() const {
    study.validate();
    if (levels < 0 || levels > 4)
      throw ConfigError("levels must lie in 0..4");
  }
};

namespace detail {

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(std::string v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    return v.substr(1, v.size() - 2);
  return v;
}

inline double parse_double(const std::string &key, const std::string &v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception &) {
    pos = 0;
  }
  if (pos == 0 || trim(v.substr(pos)) != "")
    throw ConfigError("invalid number for " + key + ": '" + v + "'");
  return d;
}

inline long long parse_int(const std::string &key, const std::string &v) {
  const double d = parse_double(key, v);
  if (d != static_cast<double>(static_cast<long long>(d)))
    throw ConfigError("expected an integer for " + key + ": '" + v + "'");
  return static_cast<long long>(d);
}

inline std::vector<double> parse_list(const std::string &key, std::string v) {
  if (!v.empty() && v.front() == '[' && v.back() == ']')
    v = v.substr(1, v.size() - 2);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_double(key, trim(item)));
  return out;
}

} // namespace detail

inline Stabilization parse_stabilization(const std::string &v) {
  if (v == "full" || v == "full-gradient" || v == "1")
    return Stabilization::FullGradient;
  if (v == "normal" || v == "normal-gradient" || v == "2")
    return Stabilization::NormalGradient;
  throw ConfigError("unknown stabilization '" + v + "' (use full or normal)");
}

inline Vec3 parse_vec3(const std::string &key, const std::string &v) {
  const auto xs = detail::parse_list(key, v);
  if (xs.size() != 3)
    throw ConfigError(key + " needs three comma-separated values");
  return Vec3(xs[0], xs[1], xs[2]);
}

inline Box parse_box(const std::string &v) {
  const auto xs = detail::parse_list("box", v);
  if (xs.size() == 2)
    return Box{Vec3::Constant(xs[0]), Vec3::Constant(xs[1])};
  if (xs.size() == 6)
    return Box{Vec3(xs[0], xs[1], xs[2]), Vec3(xs[3], xs[4], xs[5])};
  throw ConfigError("box needs lo,hi or lo_x,lo_y,lo_z,hi_x,hi_y,hi_z");
}

/// Applies one key=value setting.
inline void apply_setting(RunConfig &cfg, const std::string &key, const std::string &value) {
  auto &s = cfg.study;
  auto &cc = s.case_config;
  if (key == "case") {
    cc = case_table(static_cast<int>(detail::parse_int(key, value)));
  } else if (key == "k_u") {
    cc.k_u = static_cast<int>(detail::parse_int(key, value));
    cc.id = 0;
  } else if (key == "k_p") {
    cc.k_p = static_cast<int>(detail::parse_int(key, value));
    cc.id = 0;
  } else if (key == "k_g") {
    cc.k_g = static_cast<int>(detail::parse_int(key, value));
    cc.id = 0;
  } else if (key == "stab" || key == "stabilization") {
    cc.stab = parse_stabilization(value);
    cc.id = 0;
  } else if (key == "levels") {
    cfg.levels = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "tau") {
    s.tau = detail::parse_double(key, value);
  } else if (key == "alpha") {
    s.alpha = detail::parse_double(key, value);
  } else if (key == "n_cells0") {
    s.n_cells0 = detail::parse_int(key, value);
  } else if (key == "box") {
    s.box = parse_box(value);
  } else if (key == "offset") {
    s.offset = parse_vec3(key, value);
  } else if (key == "major") {
    s.major = detail::parse_double(key, value);
  } else if (key == "minor") {
    s.minor = detail::parse_double(key, value);
  } else if (key == "quad_degree") {
    s.quad_degree = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "error_quad_degree") {
    s.error_quad_degree = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "seed") {
    const long long v = detail::parse_int(key, value);
    if (v < 0)
      throw ConfigError("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (key == "csv") {
    cfg.csv_path = value;
  } else if (key == "markdown") {
    cfg.markdown_path = value;
  } else if (key == "vtk" || key == "vtk_dir") {
    cfg.vtk_dir = value;
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

/// Reads `key = value` lines; '#' starts a comment, [section] headers are
/// ignored, values may be quoted.
inline void apply_config_text(RunConfig &cfg, const std::string &text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"')
        quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = detail::trim(line);
    if (line.empty() || line.front() == '[')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(cfg, detail::trim(line.substr(0, eq)),
                  detail::unquote(detail::trim(line.substr(eq + 1))));
  }
}

inline void apply_config_file(RunConfig &cfg, const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str());
}

} // namespace surfdarcy

// surfdarcy: convergence studies, property checks and VTK export for the
// stabilized cut finite element Darcy solver on the torus.

#include <surfdarcy/checks.hpp>
#include <surfdarcy/config.hpp>
#include <surfdarcy/report.hpp>
#include <surfdarcy/vtk.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

using namespace surfdarcy;

enum Exit { Ok = 0, ConfigFailure = 1, NumericalFailure = 2, CheckFailure = 3 };

/// Flags shared by all subcommands. Values stay as strings until the
/// config file (if any) has been applied, so that flags win.
struct Flags {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> given;

  void add(CLI::App &app, const std::string &flag, const std::string &key,
           const std::string &help) {
    app.add_option_function<std::string>(
        flag, [this, key](const std::string &v) { given.emplace_back(key, v); }, help);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty())
      apply_config_file(cfg, config_file);
    for (const auto &[k, v] : given)
      apply_setting(cfg, k, v);
    cfg.validate();
    return cfg;
  }
};

void add_study_flags(CLI::App &app, Flags &f) {
  app.add_option("--config", f.config_file, "key = value configuration file");
  f.add(app, "--case", "case", "case 1..6");
  f.add(app, "--k-u", "k_u", "velocity order (overrides case)");
  f.add(app, "--k-p", "k_p", "pressure order (overrides case)");
  f.add(app, "--k-g", "k_g", "geometry order (overrides case)");
  f.add(app, "--stab", "stab", "stabilization: full or normal (overrides case)");
  f.add(app, "--tau", "tau", "stabilization parameter (default 0.1)");
  f.add(app, "--alpha", "alpha", "h-scaling exponent in [0, 2] (default 2)");
  f.add(app, "--offset", "offset", "surface translation x,y,z");
  f.add(app, "--n-cells0", "n_cells0", "cubes per direction on level 0 (default 14)");
  f.add(app, "--box", "box", "background box lo,hi (default -1.65,1.65)");
  f.add(app, "--quad-degree", "quad_degree", "surface rule degree for assembly (default 4)");
  f.add(app, "--error-quad-degree", "error_quad_degree", "surface rule degree for errors (default 6)");
  f.add(app, "--seed", "seed", "seed for randomized checks");
}

void print_level(const LevelResult &r) {
  auto eoc = [](const std::optional<double> &e) {
    char b[32];
    if (!e)
      return std::string("    -");
    std::snprintf(b, sizeof b, "%5.2f", *e);
    return std::string(b);
  };
  std::printf("%5d %9.5f %9d %9d  %10.3e %s  %10.3e %s  %10.3e %s\n", r.level, r.h,
              r.dofs_u, r.dofs_p, r.errors.u_l2, eoc(r.eoc_u_l2).c_str(),
              r.errors.p_h1, eoc(r.eoc_p_h1).c_str(), r.errors.p_l2,
              eoc(r.eoc_p_l2).c_str());
  std::fflush(stdout);
}

int cmd_converge(const RunConfig &cfg) {
  std::printf("%s\n", config_summary(cfg.study).c_str());
  std::printf("%5s %9s %9s %9s  %10s %5s  %10s %5s  %10s %5s\n", "level", "h", "dofs_u",
              "dofs_p", "err_u_L2", "EOC", "err_p_H1", "EOC", "err_p_L2", "EOC");
  const auto report = run_case(cfg.study, cfg.levels, print_level);
  if (!cfg.csv_path.empty())
    write_csv(report, cfg.csv_path);
  if (!cfg.markdown_path.empty())
    write_markdown(report, cfg.markdown_path);
  return Ok;
}

int cmd_check(const RunConfig &cfg) {
  bool all = true;
  auto line = [&](bool ok, const std::string &name, const std::string &detail) {
    all = all && ok;
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
  };
  char buf[512];

  const auto mc = check_manufactured(ManufacturedSolution(cfg.study.surface()), cfg.seed);
  std::snprintf(buf, sizeof buf,
                "max|u.n| = %.2e, max|f| = %.1e, max|div u| = %.2e, "
                "max|u + P grad p - g| = %.2e, max|g.n| = %.2e",
                mc.max_normal_velocity, mc.max_source, mc.max_divergence,
                mc.max_residual, mc.max_normal_load);
  line(mc.passed(), "manufactured solution", buf);

  for (int k_g : {1, 2}) {
    const auto gr = measure_geometric_rates(cfg.study, k_g, 1, 3);
    std::snprintf(buf, sizeof buf,
                  "order of max|rho| = %.2f (expect %d), order of max|n - n_h| = %.2f "
                  "(expect %d)",
                  gr.order_distance, k_g + 1, gr.order_normal, k_g);
    line(gr.passed(), "geometric rates k_g=" + std::to_string(k_g), buf);
  }

  for (int id : {1, 2}) {
    StudyConfig sc = cfg.study;
    sc.case_config = case_table(id);
    const auto lr = measure_lemma_ratios(sc, 1, 3, 30, cfg.seed);
    std::snprintf(buf, sizeof buf,
                  "growth level 1 -> 3: bulk %.3f, surface Poincare %.3f, combined %.3f",
                  lr.growth(&LemmaLevel::bulk), lr.growth(&LemmaLevel::poincare),
                  lr.growth(&LemmaLevel::combined));
    line(lr.passed(), "lemma ratios " + to_string(sc.case_config.stab), buf);
  }

  for (int id : {1, 2}) {
    StudyConfig sc = cfg.study;
    sc.case_config = case_table(id);
    const auto pr = positioning_robustness(sc, 2, 20, cfg.seed);
    double worst = 0.0;
    for (const auto &s : pr.samples)
      worst = std::max(worst, s.relative_residual);
    std::snprintf(buf, sizeof buf,
                  "20 offsets at level 2: all solved = %s, max residual = %.1e, "
                  "condition %.3e .. %.3e (spread %.2f)",
                  pr.all_solved() ? "yes" : "no", worst, pr.min_condition(),
                  pr.max_condition(), pr.spread());
    line(pr.passed(), "positioning " + to_string(sc.case_config.stab), buf);
  }
  return all ? Ok : CheckFailure;
}

int cmd_export(const RunConfig &cfg, int level) {
  if (level < 0 || level > 4)
    throw ConfigError("export level must lie in 0..4");
  const std::string dir = cfg.vtk_dir.empty() ? "." : cfg.vtk_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create directory " + dir);
  const LevelSolve ls = solve_level(cfg.study, level);
  const DiscreteFields fields{ls.velocity.get(), ls.pressure.get(), &ls.solution};
  const std::string stem = dir + "/case" + std::to_string(cfg.study.case_config.id) +
                           "_level" + std::to_string(level);
  write_surface_vtk(sample_surface(fields, ls.surface), stem + "_surface.vtk");
  write_active_mesh_vtk(*ls.active, stem + "_active_mesh.vtk");
  std::printf("wrote %s_surface.vtk and %s_active_mesh.vtk\n", stem.c_str(), stem.c_str());
  return Ok;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Stabilized cut finite element solver for the surface Darcy problem"};
  app.require_subcommand(1);

  Flags conv_flags, check_flags, export_flags;
  auto *conv = app.add_subcommand("converge", "run a convergence study");
  add_study_flags(*conv, conv_flags);
  conv_flags.add(*conv, "--levels", "levels", "finest level 0..4 (default 3)");
  conv_flags.add(*conv, "--csv", "csv", "CSV report path");
  conv_flags.add(*conv, "--markdown", "markdown", "markdown report path");

  auto *check = app.add_subcommand("check", "run the property suites");
  add_study_flags(*check, check_flags);

  auto *exp = app.add_subcommand("export", "write VTK files for one level");
  add_study_flags(*exp, export_flags);
  int export_level = 2;
  exp->add_option("--level", export_level, "refinement level (default 2)");
  export_flags.add(*exp, "--vtk-dir", "vtk", "output directory (default .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? Ok : ConfigFailure;
  }

  try {
    if (*conv)
      return cmd_converge(conv_flags.resolve());
    if (*check)
      return cmd_check(check_flags.resolve());
    return cmd_export(export_flags.resolve(), export_level);
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return ConfigFailure;
  } catch (const NumericalError &e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return NumericalFailure;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return NumericalFailure;
  }
}
